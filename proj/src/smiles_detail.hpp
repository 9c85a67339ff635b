//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

// Internal SMILES-subset scanner shared by the molecule parser and the
// reaction-template parser. Not installed; include only from src/.

#ifndef SYNVIA_SMILES_DETAIL_HPP
#define SYNVIA_SMILES_DETAIL_HPP

#include <string_view>
#include <vector>

#include "synvia/molgraph.hpp"

namespace synvia::detail {

// Bond codes used during scanning; resolved to BondOrder afterwards.
inline constexpr int kBondDefault = 0;
inline constexpr int kBondSingle = 1;
inline constexpr int kBondDouble = 2;
inline constexpr int kBondTriple = 3;
inline constexpr int kBondAromatic = 4;
inline constexpr int kBondAny = 5;  // '~', template mode only

struct ScannedAtom {
  bool wildcard = false;  // [*], template mode only
  Element element = Element::C;
  bool aromatic = false;
  bool bracket = false;
  int bracket_h = 0;
  int charge = 0;
  bool charge_given = false;
  int map_number = -1;      // [X:n], template mode only
  int degree = -1;          // [XDn], template mode only
  size_t pos = 0;
};

struct ScannedBond {
  int a = 0;
  int b = 0;
  int code = kBondDefault;
  size_t pos = 0;
};

struct ScanOptions {
  bool pattern_mode = false;  // allow wildcards, map numbers, D, '~'
};

struct ScannedGraph {
  std::vector<ScannedAtom> atoms;
  std::vector<ScannedBond> bonds;
};

/// Scans one connected SMILES fragment (no '.'). `pos_offset` shifts error
/// positions so template diagnostics point into the full template string.
ScannedGraph scan_fragment(std::string_view text, const ScanOptions &opt,
                           size_t pos_offset = 0);

/// Resolves kBondDefault against atom aromaticity: aromatic when both ends
/// are aromatic atoms, single otherwise.
int resolve_default_bond(const ScannedAtom &a, const ScannedAtom &b, int code);

/// Implicit hydrogen count the parser infers for a bare organic-subset atom.
/// `deg_eq` counts aromatic bonds as 1 and others at integer order.
/// Returns -1 when no allowed valence fits.
int implied_hydrogens(Element e, int charge, bool aromatic_env, int deg_eq);

}  // namespace synvia::detail

#endif  // SYNVIA_SMILES_DETAIL_HPP
