//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SYNVIA_MOLGRAPH_HPP
#define SYNVIA_MOLGRAPH_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "synvia/errors.hpp"

namespace synvia {

// Supported elements. Everything else is rejected as UnsupportedFeature.
enum class Element : uint8_t { H, B, C, N, O, F, P, S, Cl, Br, I };

int atomic_number(Element e);
const char *element_symbol(Element e);
bool is_organic_subset(Element e);

enum class BondOrder : uint8_t { Single = 1, Double = 2, Triple = 3, Aromatic = 4 };

struct Atom {
  Element element = Element::C;
  int8_t charge = 0;
  // Total hydrogen count (explicit + implicit) once sanitized.
  uint8_t hydrogens = 0;
  // True when the H count came from a bracket atom and must not be refilled.
  bool h_specified = false;
  bool aromatic = false;
};

struct Bond {
  int a = 0;
  int b = 0;
  BondOrder order = BondOrder::Single;
};

/// Attributed undirected molecular graph. Values are immutable once built;
/// sanitization produces a new Molecule rather than mutating in place.
class Molecule {
public:
  Molecule() = default;

  /// Builds an unsanitized molecule. Validates only structural invariants:
  /// dense indices, no self-loops, no parallel bonds.
  Molecule(std::vector<Atom> atoms, std::vector<Bond> bonds);

  int atom_count() const { return static_cast<int>(atoms_.size()); }
  int bond_count() const { return static_cast<int>(bonds_.size()); }
  bool empty() const { return atoms_.empty(); }

  const Atom &atom(int i) const { return atoms_[static_cast<size_t>(i)]; }
  const std::vector<Atom> &atoms() const { return atoms_; }
  const std::vector<Bond> &bonds() const { return bonds_; }

  /// Neighbors of atom i as (neighbor index, bond order) pairs.
  const std::vector<std::pair<int, BondOrder>> &neighbors(int i) const {
    return adj_[static_cast<size_t>(i)];
  }
  int degree(int i) const { return static_cast<int>(adj_[static_cast<size_t>(i)].size()); }

  bool sanitized() const { return sanitized_; }
  bool connected() const;

  friend Molecule sanitize(const Molecule &mol);

private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<std::pair<int, BondOrder>>> adj_;
  bool sanitized_ = false;
};

/// Normalizes hypervalent nitro groups to the charge-separated form, folds
/// explicit H atoms into their heavy neighbor, computes implicit hydrogens,
/// and verifies valences and aromatic-flag consistency.
/// Throws ValenceError / UnsupportedFeature on failure.
Molecule sanitize(const Molecule &mol);

struct ValenceViolation {
  int atom = 0;
  int observed = 0;
  std::string allowed;  // e.g. "2,4,6"; empty when the charge state is unknown
};

/// Empty result iff every atom's valence is admissible. Violations are data,
/// not errors; works on unsanitized molecules too.
std::vector<ValenceViolation> check_valence(const Molecule &mol);

/// Allowed valences for an (element, charge) pair; empty if unsupported.
const std::vector<int> &allowed_valences(Element e, int charge);

struct CanonicalForm {
  std::string text;
  bool operator==(const CanonicalForm &o) const { return text == o.text; }
  bool operator!=(const CanonicalForm &o) const { return text != o.text; }
  bool operator<(const CanonicalForm &o) const { return text < o.text; }
};

/// Deterministic canonical SMILES-subset string; invariant under atom
/// permutation. Requires a sanitized molecule.
CanonicalForm canonical_form(const Molecule &mol);

/// Parses the supported SMILES subset and sanitizes the result.
/// Throws ParseError, ValenceError, UnsupportedFeature.
Molecule parse_smiles(std::string_view text);

}  // namespace synvia

#endif  // SYNVIA_MOLGRAPH_HPP
