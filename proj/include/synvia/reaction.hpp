//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SYNVIA_REACTION_HPP
#define SYNVIA_REACTION_HPP

#include <string>
#include <string_view>
#include <vector>

#include "synvia/molgraph.hpp"

namespace synvia {

struct PatternAtom {
  bool wildcard = false;
  Element element = Element::C;
  bool aromatic = false;      // ignored for wildcards
  bool charge_given = false;  // absent means unconstrained
  int charge = 0;
  int degree = -1;            // heavy-neighbor count constraint, -1 = none
  int map_number = -1;
};

// Bond constraint codes reuse smiles_detail values: 1..4 exact, 5 any.
struct PatternBond {
  int a = 0;
  int b = 0;
  int code = 1;
};

/// Connected subgraph pattern with unique map numbers.
class PatternGraph {
public:
  PatternGraph() = default;
  PatternGraph(std::vector<PatternAtom> atoms, std::vector<PatternBond> bonds);

  int atom_count() const { return static_cast<int>(atoms_.size()); }
  const PatternAtom &atom(int i) const { return atoms_[static_cast<size_t>(i)]; }
  const std::vector<PatternAtom> &atoms() const { return atoms_; }
  const std::vector<PatternBond> &bonds() const { return bonds_; }
  const std::vector<std::pair<int, int>> &neighbors(int i) const {  // (atom, code)
    return adj_[static_cast<size_t>(i)];
  }

private:
  std::vector<PatternAtom> atoms_;
  std::vector<PatternBond> bonds_;
  std::vector<std::vector<std::pair<int, int>>> adj_;
};

/// Arity-k pattern-rewrite rule with atom mapping.
struct ReactionTemplate {
  std::string id;  // from the template file; empty for ad hoc templates
  int index = -1;  // dense index within a template set
  int arity = 0;
  std::vector<PatternGraph> reactants;
  std::vector<PatternGraph> products;
  std::string text;  // source text, kept for diagnostics
};

/// Parses `r1 . r2 ... >> p1 [ . p2 ]` in the SMILES subset extended with
/// `[element:n]` maps, `[*]` wildcards, `~` any-bond and `Dn` degree
/// constraints. Throws ParseError / MapNumberError.
ReactionTemplate parse_template(std::string_view text);

/// One embedding per reactant pattern; embedding[p] = molecule atom matched
/// by pattern atom p.
using MatchAssignment = std::vector<std::vector<int>>;

/// True when the pattern embeds in the molecule at least once.
bool pattern_matches(const PatternGraph &pattern, const Molecule &mol);

/// All injective embeddings, sorted lexicographically by matched atom tuple.
std::vector<std::vector<int>> enumerate_embeddings(const PatternGraph &pattern,
                                                   const Molecule &mol);

/// Cartesian product of per-reactant embeddings, in deterministic order.
/// Throws ArityMismatch when operand count differs from template arity.
std::vector<MatchAssignment> match_pattern(const ReactionTemplate &tmpl,
                                           const std::vector<Molecule> &reactants);

struct ApplyResult {
  std::vector<Molecule> products;  // deduplicated, sorted by canonical text
  int match_count = 0;             // embeddings found before rewriting
};

/// Rewrites every match into candidate products. Candidates that fail
/// sanitization are dropped; an empty product list with match_count > 0
/// means every candidate failed valence.
ApplyResult apply_template(const ReactionTemplate &tmpl,
                           const std::vector<Molecule> &reactants);

/// A parsed template file: `<id>\t<arity>\t<template>` per line, `#` comments.
std::vector<ReactionTemplate> load_templates(const std::string &path);
std::vector<ReactionTemplate> parse_template_file(std::string_view content);

}  // namespace synvia

#endif  // SYNVIA_REACTION_HPP
