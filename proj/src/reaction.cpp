//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "synvia/reaction.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "smiles_detail.hpp"
#include "synvia/molgraph.hpp"

namespace synvia {

PatternGraph::PatternGraph(std::vector<PatternAtom> atoms,
                           std::vector<PatternBond> bonds)
    : atoms_(std::move(atoms)), bonds_(std::move(bonds)) {
  const int n = atom_count();
  if (n == 0) throw ParseError("empty pattern");
  adj_.assign(static_cast<size_t>(n), {});
  for (const PatternBond &b : bonds_) {
    adj_[static_cast<size_t>(b.a)].emplace_back(b.b, b.code);
    adj_[static_cast<size_t>(b.b)].emplace_back(b.a, b.code);
  }
  // Connectivity.
  std::vector<char> seen(static_cast<size_t>(n), 0);
  std::vector<int> work{0};
  seen[0] = 1;
  int reached = 1;
  while (!work.empty()) {
    const int u = work.back();
    work.pop_back();
    for (const auto &[v, code] : adj_[static_cast<size_t>(u)]) {
      (void)code;
      if (!seen[static_cast<size_t>(v)]) {
        seen[static_cast<size_t>(v)] = 1;
        ++reached;
        work.push_back(v);
      }
    }
  }
  if (reached != n) throw ParseError("pattern must be connected");
  // Map-number uniqueness within the pattern.
  std::set<int> maps;
  for (const PatternAtom &a : atoms_) {
    if (a.map_number < 0) continue;
    if (!maps.insert(a.map_number).second)
      throw MapNumberError("duplicate map number " + std::to_string(a.map_number) +
                           " within one pattern");
  }
}

namespace {

PatternGraph pattern_from_fragment(std::string_view text, size_t offset) {
  detail::ScanOptions opt;
  opt.pattern_mode = true;
  const detail::ScannedGraph g = detail::scan_fragment(text, opt, offset);
  std::vector<PatternAtom> atoms;
  atoms.reserve(g.atoms.size());
  for (const auto &sa : g.atoms) {
    PatternAtom a;
    a.wildcard = sa.wildcard;
    a.element = sa.element;
    a.aromatic = sa.aromatic;
    a.charge_given = sa.charge_given;
    a.charge = sa.charge;
    a.degree = sa.degree;
    a.map_number = sa.map_number;
    if (!a.wildcard && sa.bracket && sa.bracket_h > 0)
      throw ParseError("H-count constraints are not part of the pattern grammar",
                       sa.pos);
    atoms.push_back(a);
  }
  std::vector<PatternBond> bonds;
  bonds.reserve(g.bonds.size());
  for (const auto &sb : g.bonds) {
    const int code = detail::resolve_default_bond(
        g.atoms[static_cast<size_t>(sb.a)], g.atoms[static_cast<size_t>(sb.b)],
        sb.code);
    bonds.push_back({sb.a, sb.b, code});
  }
  return PatternGraph(std::move(atoms), std::move(bonds));
}

std::vector<std::pair<std::string_view, size_t>> split_fragments(
    std::string_view side, size_t offset) {
  std::vector<std::pair<std::string_view, size_t>> out;
  size_t start = 0;
  for (size_t i = 0; i <= side.size(); ++i) {
    if (i == side.size() || side[i] == '.') {
      out.emplace_back(side.substr(start, i - start), offset + start);
      start = i + 1;
    }
  }
  return out;
}

}  // namespace

ReactionTemplate parse_template(std::string_view text) {
  const size_t arrow = text.find(">>");
  if (arrow == std::string_view::npos)
    throw ParseError("template requires '>>'", text.size());
  if (text.find(">>", arrow + 2) != std::string_view::npos)
    throw ParseError("template has more than one '>>'", arrow + 2);

  ReactionTemplate tmpl;
  tmpl.text = std::string(text);
  for (const auto &[frag, pos] : split_fragments(text.substr(0, arrow), 0))
    tmpl.reactants.push_back(pattern_from_fragment(frag, pos));
  for (const auto &[frag, pos] :
       split_fragments(text.substr(arrow + 2), arrow + 2))
    tmpl.products.push_back(pattern_from_fragment(frag, pos));

  tmpl.arity = static_cast<int>(tmpl.reactants.size());
  if (tmpl.arity < 1 || tmpl.arity > 3)
    throw ParseError("template arity must be between 1 and 3");
  if (tmpl.products.empty()) throw ParseError("template requires a product");

  // Reactant-side maps: globally unique across reactant patterns.
  std::map<int, std::pair<int, int>> reactant_maps;  // map -> (pattern, atom)
  for (size_t p = 0; p < tmpl.reactants.size(); ++p) {
    const PatternGraph &pg = tmpl.reactants[p];
    for (int a = 0; a < pg.atom_count(); ++a) {
      const int m = pg.atom(a).map_number;
      if (m < 0) continue;
      if (!reactant_maps.emplace(m, std::make_pair(static_cast<int>(p), a)).second)
        throw MapNumberError("map number " + std::to_string(m) +
                             " appears in more than one reactant pattern");
    }
  }
  // Product-side maps: unique, and each must exist on the reactant side.
  std::set<int> product_maps;
  for (const PatternGraph &pg : tmpl.products) {
    for (int a = 0; a < pg.atom_count(); ++a) {
      const PatternAtom &pa = pg.atom(a);
      if (pa.map_number >= 0) {
        if (!product_maps.insert(pa.map_number).second)
          throw MapNumberError("map number " + std::to_string(pa.map_number) +
                               " appears twice on the product side");
        if (reactant_maps.find(pa.map_number) == reactant_maps.end())
          throw MapNumberError("product map number " +
                               std::to_string(pa.map_number) +
                               " is absent from the reactants");
      } else if (pa.wildcard) {
        throw MapNumberError("unmapped wildcard atom on the product side");
      }
      if (pa.degree >= 0)
        throw ParseError("degree constraints are meaningless on the product side");
    }
    for (const PatternBond &b : pg.bonds()) {
      if (b.code == detail::kBondAny)
        throw ParseError("bond wildcard on the product side");
    }
  }
  return tmpl;
}

// ---------------------------------------------------------------------------
// Matching

namespace {

bool atom_matches(const PatternAtom &pa, const Molecule &mol, int i) {
  const Atom &a = mol.atom(i);
  if (!pa.wildcard) {
    if (a.element != pa.element || a.aromatic != pa.aromatic) return false;
  }
  if (pa.charge_given && a.charge != pa.charge) return false;
  if (pa.degree >= 0 && mol.degree(i) != pa.degree) return false;
  return true;
}

bool bond_matches(int code, BondOrder order) {
  if (code == detail::kBondAny) return true;
  return code == static_cast<int>(order);
}

// Pattern atoms ordered so each one (after the first) touches an earlier one.
std::vector<int> match_order(const PatternGraph &p) {
  const int n = p.atom_count();
  std::vector<int> order;
  std::vector<char> placed(static_cast<size_t>(n), 0);
  order.push_back(0);
  placed[0] = 1;
  for (size_t k = 0; k < order.size(); ++k) {
    for (const auto &[v, code] : p.neighbors(order[k])) {
      (void)code;
      if (!placed[static_cast<size_t>(v)]) {
        placed[static_cast<size_t>(v)] = 1;
        order.push_back(v);
      }
    }
  }
  return order;  // patterns are connected, so this covers every atom
}

void extend(const PatternGraph &p, const Molecule &mol,
            const std::vector<int> &order, size_t k, std::vector<int> &assign,
            std::vector<char> &used, std::vector<std::vector<int>> &out) {
  if (k == order.size()) {
    out.push_back(assign);
    return;
  }
  const int pa = order[k];
  // Candidates: neighbors of an already-matched pattern neighbor, or all atoms
  // for the first pattern atom.
  std::vector<int> candidates;
  int anchor = -1, anchor_code = 0;
  for (const auto &[v, code] : p.neighbors(pa)) {
    if (assign[static_cast<size_t>(v)] >= 0) {
      anchor = v;
      anchor_code = code;
      break;
    }
  }
  if (anchor < 0) {
    candidates.resize(static_cast<size_t>(mol.atom_count()));
    for (int i = 0; i < mol.atom_count(); ++i) candidates[static_cast<size_t>(i)] = i;
  } else {
    for (const auto &[v, order_] : mol.neighbors(assign[static_cast<size_t>(anchor)])) {
      if (bond_matches(anchor_code, order_)) candidates.push_back(v);
    }
  }
  for (int cand : candidates) {
    if (used[static_cast<size_t>(cand)]) continue;
    if (!atom_matches(p.atom(pa), mol, cand)) continue;
    // All pattern bonds from pa to already-assigned atoms must be present.
    bool ok = true;
    for (const auto &[v, code] : p.neighbors(pa)) {
      const int mv = assign[static_cast<size_t>(v)];
      if (mv < 0) continue;
      bool found = false;
      for (const auto &[w, order_] : mol.neighbors(cand)) {
        if (w == mv && bond_matches(code, order_)) {
          found = true;
          break;
        }
      }
      if (!found) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    assign[static_cast<size_t>(pa)] = cand;
    used[static_cast<size_t>(cand)] = 1;
    extend(p, mol, order, k + 1, assign, used, out);
    assign[static_cast<size_t>(pa)] = -1;
    used[static_cast<size_t>(cand)] = 0;
  }
}

}  // namespace

std::vector<std::vector<int>> enumerate_embeddings(const PatternGraph &pattern,
                                                   const Molecule &mol) {
  std::vector<std::vector<int>> out;
  if (pattern.atom_count() > mol.atom_count()) return out;
  const std::vector<int> order = match_order(pattern);
  std::vector<int> assign(static_cast<size_t>(pattern.atom_count()), -1);
  std::vector<char> used(static_cast<size_t>(mol.atom_count()), 0);
  extend(pattern, mol, order, 0, assign, used, out);
  std::sort(out.begin(), out.end());
  return out;
}

bool pattern_matches(const PatternGraph &pattern, const Molecule &mol) {
  return !enumerate_embeddings(pattern, mol).empty();
}

std::vector<MatchAssignment> match_pattern(const ReactionTemplate &tmpl,
                                           const std::vector<Molecule> &reactants) {
  if (static_cast<int>(reactants.size()) != tmpl.arity)
    throw ArityMismatch("template arity " + std::to_string(tmpl.arity) +
                        ", got " + std::to_string(reactants.size()) + " operands");
  std::vector<std::vector<std::vector<int>>> per_reactant;
  per_reactant.reserve(reactants.size());
  for (size_t r = 0; r < reactants.size(); ++r) {
    per_reactant.push_back(enumerate_embeddings(tmpl.reactants[r], reactants[r]));
    if (per_reactant.back().empty()) return {};
  }
  std::vector<MatchAssignment> out;
  std::vector<size_t> cursor(reactants.size(), 0);
  for (;;) {
    MatchAssignment a;
    a.reserve(reactants.size());
    for (size_t r = 0; r < reactants.size(); ++r)
      a.push_back(per_reactant[r][cursor[r]]);
    out.push_back(std::move(a));
    size_t r = reactants.size();
    while (r > 0) {
      --r;
      if (++cursor[r] < per_reactant[r].size()) break;
      cursor[r] = 0;
      if (r == 0) return out;
    }
  }
}

// ---------------------------------------------------------------------------
// Rewriting

namespace {

struct SortedBondEnv {
  std::vector<int> orders;  // sorted incident bond orders
  bool operator==(const SortedBondEnv &o) const { return orders == o.orders; }
};

SortedBondEnv bond_env(const Molecule &mol, int i) {
  SortedBondEnv env;
  for (const auto &[v, order] : mol.neighbors(i)) {
    (void)v;
    env.orders.push_back(static_cast<int>(order));
  }
  std::sort(env.orders.begin(), env.orders.end());
  return env;
}

Molecule build_product(const ReactionTemplate &tmpl,
                       const std::vector<Molecule> &reactants,
                       const MatchAssignment &assignment,
                       const PatternGraph &product) {
  // Reactant-side map number -> (reactant index, molecule atom).
  std::map<int, std::pair<int, int>> source_of_map;
  for (size_t r = 0; r < tmpl.reactants.size(); ++r) {
    const PatternGraph &pg = tmpl.reactants[r];
    for (int a = 0; a < pg.atom_count(); ++a) {
      const int m = pg.atom(a).map_number;
      if (m >= 0)
        source_of_map[m] = {static_cast<int>(r),
                            assignment[r][static_cast<size_t>(a)]};
    }
  }
  // Which maps survive into this product pattern.
  std::set<int> kept_maps;
  for (int a = 0; a < product.atom_count(); ++a)
    if (product.atom(a).map_number >= 0) kept_maps.insert(product.atom(a).map_number);

  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::vector<char> bonding_changed;  // parallel to atoms

  // Product-pattern atoms first.
  std::vector<int> product_atom_index(static_cast<size_t>(product.atom_count()));
  // (reactant, mol atom) -> product atom index, for mapped and carried atoms.
  std::map<std::pair<int, int>, int> carried_index;
  for (int a = 0; a < product.atom_count(); ++a) {
    const PatternAtom &pa = product.atom(a);
    Atom atom;
    if (pa.map_number >= 0) {
      const auto [r, mi] = source_of_map.at(pa.map_number);
      atom = reactants[static_cast<size_t>(r)].atom(mi);
      if (pa.charge_given) atom.charge = static_cast<int8_t>(pa.charge);
      carried_index[{r, mi}] = static_cast<int>(atoms.size());
    } else {
      atom.element = pa.element;
      atom.aromatic = pa.aromatic;
      atom.charge = static_cast<int8_t>(pa.charge_given ? pa.charge : 0);
      atom.h_specified = false;
      atom.hydrogens = 0;
    }
    product_atom_index[static_cast<size_t>(a)] = static_cast<int>(atoms.size());
    atoms.push_back(atom);
    bonding_changed.push_back(1);  // recompute H for every pattern atom
  }
  for (const PatternBond &b : product.bonds()) {
    bonds.push_back({product_atom_index[static_cast<size_t>(b.a)],
                     product_atom_index[static_cast<size_t>(b.b)],
                     static_cast<BondOrder>(b.code)});
  }

  // Carry unmatched substituents attached to mapped atoms.
  for (size_t r = 0; r < tmpl.reactants.size(); ++r) {
    const Molecule &mol = reactants[r];
    const PatternGraph &pg = tmpl.reactants[r];
    std::vector<char> matched(static_cast<size_t>(mol.atom_count()), 0);
    std::vector<char> kept(static_cast<size_t>(mol.atom_count()), 0);
    for (int a = 0; a < pg.atom_count(); ++a) {
      const int mi = assignment[r][static_cast<size_t>(a)];
      matched[static_cast<size_t>(mi)] = 1;
      const int m = pg.atom(a).map_number;
      if (m >= 0 && kept_maps.count(m)) kept[static_cast<size_t>(mi)] = 1;
    }
    // Components of (mol minus matched atoms).
    std::vector<int> comp(static_cast<size_t>(mol.atom_count()), -1);
    int n_comp = 0;
    for (int i = 0; i < mol.atom_count(); ++i) {
      if (matched[static_cast<size_t>(i)] || comp[static_cast<size_t>(i)] >= 0)
        continue;
      std::vector<int> work{i};
      comp[static_cast<size_t>(i)] = n_comp;
      while (!work.empty()) {
        const int u = work.back();
        work.pop_back();
        for (const auto &[v, order] : mol.neighbors(u)) {
          (void)order;
          if (matched[static_cast<size_t>(v)] || comp[static_cast<size_t>(v)] >= 0)
            continue;
          comp[static_cast<size_t>(v)] = n_comp;
          work.push_back(v);
        }
      }
      ++n_comp;
    }
    // A component is carried iff it touches a kept (mapped-to-product) atom.
    std::vector<char> comp_carried(static_cast<size_t>(n_comp), 0);
    for (const Bond &b : mol.bonds()) {
      const bool a_matched = matched[static_cast<size_t>(b.a)];
      const bool b_matched = matched[static_cast<size_t>(b.b)];
      if (a_matched && !b_matched && kept[static_cast<size_t>(b.a)])
        comp_carried[static_cast<size_t>(comp[static_cast<size_t>(b.b)])] = 1;
      if (b_matched && !a_matched && kept[static_cast<size_t>(b.b)])
        comp_carried[static_cast<size_t>(comp[static_cast<size_t>(b.a)])] = 1;
    }
    for (int i = 0; i < mol.atom_count(); ++i) {
      if (matched[static_cast<size_t>(i)]) continue;
      if (!comp_carried[static_cast<size_t>(comp[static_cast<size_t>(i)])]) continue;
      carried_index[{static_cast<int>(r), i}] = static_cast<int>(atoms.size());
      atoms.push_back(mol.atom(i));
      bonding_changed.push_back(0);
    }
    // Bonds among carried atoms and from carried substituents to kept atoms.
    for (const Bond &b : mol.bonds()) {
      const auto ia = carried_index.find({static_cast<int>(r), b.a});
      const auto ib = carried_index.find({static_cast<int>(r), b.b});
      const bool a_pattern = matched[static_cast<size_t>(b.a)];
      const bool b_pattern = matched[static_cast<size_t>(b.b)];
      if (a_pattern && b_pattern) continue;  // reset to the product pattern
      if (ia == carried_index.end() || ib == carried_index.end()) {
        // A carried atom bonded to a deleted or dropped atom loses this bond.
        if (ia != carried_index.end() && !a_pattern)
          bonding_changed[static_cast<size_t>(ia->second)] = 1;
        if (ib != carried_index.end() && !b_pattern)
          bonding_changed[static_cast<size_t>(ib->second)] = 1;
        continue;
      }
      bonds.push_back({ia->second, ib->second, b.order});
    }
  }

  Molecule raw(atoms, bonds);
  // Recompute hydrogens wherever bonding changed; mapped atoms always do
  // (their pattern-side bonds were reset), carried atoms only when an
  // incident bond was dropped or their environment differs.
  std::vector<Atom> final_atoms = raw.atoms();
  for (size_t i = 0; i < final_atoms.size(); ++i) {
    bool changed = bonding_changed[i] != 0;
    if (!changed) continue;
    final_atoms[i].h_specified = false;
  }
  // Mapped atoms whose bond environment is unchanged keep their H count.
  for (const auto &[key, idx] : carried_index) {
    const auto [r, mi] = key;
    if (!bonding_changed[static_cast<size_t>(idx)]) continue;
    const SortedBondEnv before = bond_env(reactants[static_cast<size_t>(r)], mi);
    const SortedBondEnv after = bond_env(raw, idx);
    if (before == after) {
      final_atoms[static_cast<size_t>(idx)] =
          reactants[static_cast<size_t>(r)].atom(mi);
      // A product-side charge override still applies.
      const Atom &cur = raw.atom(idx);
      final_atoms[static_cast<size_t>(idx)].charge = cur.charge;
    }
  }
  return sanitize(Molecule(std::move(final_atoms), raw.bonds()));
}

}  // namespace

ApplyResult apply_template(const ReactionTemplate &tmpl,
                           const std::vector<Molecule> &reactants) {
  for (const Molecule &m : reactants)
    if (!m.sanitized()) throw Error("apply_template requires sanitized reactants");
  ApplyResult result;
  const std::vector<MatchAssignment> assignments = match_pattern(tmpl, reactants);
  result.match_count = static_cast<int>(assignments.size());
  std::vector<std::pair<std::string, Molecule>> candidates;
  for (const MatchAssignment &assignment : assignments) {
    for (const PatternGraph &product : tmpl.products) {
      try {
        Molecule mol = build_product(tmpl, reactants, assignment, product);
        if (!mol.connected() || mol.empty()) continue;
        candidates.emplace_back(canonical_form(mol).text, std::move(mol));
      } catch (const ValenceError &) {
        // infeasible rewrite for this embedding; drop the candidate
      } catch (const UnsupportedFeature &) {
        // e.g. explicit-H bookkeeping gone wrong; treat as infeasible
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const auto &a, const auto &b) { return a.first < b.first; });
  std::string last;
  for (auto &[text, mol] : candidates) {
    if (!result.products.empty() && text == last) continue;
    last = text;
    result.products.push_back(std::move(mol));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Template files

std::vector<ReactionTemplate> parse_template_file(std::string_view content) {
  std::vector<ReactionTemplate> out;
  std::istringstream in{std::string(content)};
  std::string line;
  int line_no = 0;
  std::set<std::string> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const size_t t1 = line.find('\t');
    const size_t t2 = t1 == std::string::npos ? std::string::npos
                                              : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos)
      throw DataError("template file line " + std::to_string(line_no) +
                      ": expected <id>\\t<arity>\\t<template>");
    const std::string id = line.substr(0, t1);
    const std::string arity_text = line.substr(t1 + 1, t2 - t1 - 1);
    const std::string body = line.substr(t2 + 1);
    if (!seen_ids.insert(id).second)
      throw DataError("duplicate template id '" + id + "'");
    ReactionTemplate tmpl;
    try {
      tmpl = parse_template(body);
    } catch (const Error &e) {
      throw DataError("template '" + id + "' (line " + std::to_string(line_no) +
                      "): " + e.what());
    }
    const int declared = std::atoi(arity_text.c_str());
    if (declared != tmpl.arity)
      throw DataError("template '" + id + "': declared arity " + arity_text +
                      " but parsed arity " + std::to_string(tmpl.arity));
    tmpl.id = id;
    tmpl.index = static_cast<int>(out.size());
    out.push_back(std::move(tmpl));
  }
  return out;
}

std::vector<ReactionTemplate> load_templates(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open template file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_template_file(ss.str());
}

}  // namespace synvia
