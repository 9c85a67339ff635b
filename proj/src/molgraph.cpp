//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "synvia/molgraph.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include "smiles_detail.hpp"

namespace synvia {

namespace {

struct ElementInfo {
  const char *symbol;
  int atomic_number;
  bool organic;
  bool aromatic_allowed;
};

constexpr std::array<ElementInfo, 11> kElements = {{
    {"H", 1, false, false},
    {"B", 5, true, true},
    {"C", 6, true, true},
    {"N", 7, true, true},
    {"O", 8, true, true},
    {"F", 9, true, false},
    {"P", 15, true, true},
    {"S", 16, true, true},
    {"Cl", 17, true, false},
    {"Br", 35, true, false},
    {"I", 53, true, false},
}};

const ElementInfo &info(Element e) { return kElements[static_cast<size_t>(e)]; }

int int_order(BondOrder o) {
  switch (o) {
  case BondOrder::Single: return 1;
  case BondOrder::Double: return 2;
  case BondOrder::Triple: return 3;
  case BondOrder::Aromatic: return 1;  // callers add the aromatic slack
  }
  return 1;
}

}  // namespace

int atomic_number(Element e) { return info(e).atomic_number; }
const char *element_symbol(Element e) { return info(e).symbol; }
bool is_organic_subset(Element e) { return info(e).organic; }

Molecule::Molecule(std::vector<Atom> atoms, std::vector<Bond> bonds)
    : atoms_(std::move(atoms)), bonds_(std::move(bonds)) {
  const int n = atom_count();
  adj_.assign(static_cast<size_t>(n), {});
  for (const Bond &b : bonds_) {
    if (b.a < 0 || b.a >= n || b.b < 0 || b.b >= n)
      throw Error("bond references atom out of range");
    if (b.a == b.b) throw Error("self-loop bond");
    for (const auto &[nb, order] : adj_[static_cast<size_t>(b.a)]) {
      (void)order;
      if (nb == b.b) throw Error("parallel bond");
    }
    adj_[static_cast<size_t>(b.a)].emplace_back(b.b, b.order);
    adj_[static_cast<size_t>(b.b)].emplace_back(b.a, b.order);
  }
}

bool Molecule::connected() const {
  const int n = atom_count();
  if (n <= 1) return true;
  std::vector<char> seen(static_cast<size_t>(n), 0);
  std::vector<int> work{0};
  seen[0] = 1;
  int reached = 1;
  while (!work.empty()) {
    const int u = work.back();
    work.pop_back();
    for (const auto &[v, order] : neighbors(u)) {
      (void)order;
      if (!seen[static_cast<size_t>(v)]) {
        seen[static_cast<size_t>(v)] = 1;
        ++reached;
        work.push_back(v);
      }
    }
  }
  return reached == n;
}

const std::vector<int> &allowed_valences(Element e, int charge) {
  static const std::vector<int> kEmpty{};
  static const std::map<std::pair<Element, int>, std::vector<int>> kTable = {
      {{Element::H, 0}, {1}},
      {{Element::B, 0}, {3}},   {{Element::B, -1}, {4}},
      {{Element::C, 0}, {4}},   {{Element::C, -1}, {3}}, {{Element::C, 1}, {3}},
      {{Element::N, 0}, {3}},   {{Element::N, 1}, {4}},  {{Element::N, -1}, {2}},
      {{Element::O, 0}, {2}},   {{Element::O, 1}, {3}},  {{Element::O, -1}, {1}},
      {{Element::F, 0}, {1}},   {{Element::F, -1}, {0}},
      {{Element::P, 0}, {3, 5}}, {{Element::P, 1}, {4}},
      {{Element::S, 0}, {2, 4, 6}}, {{Element::S, 1}, {3, 5}}, {{Element::S, -1}, {1}},
      {{Element::Cl, 0}, {1}},  {{Element::Cl, -1}, {0}},
      {{Element::Br, 0}, {1}},  {{Element::Br, -1}, {0}},
      {{Element::I, 0}, {1}},   {{Element::I, -1}, {0}},
  };
  auto it = kTable.find({e, charge});
  return it == kTable.end() ? kEmpty : it->second;
}

namespace detail {

int implied_hydrogens(Element e, int charge, bool aromatic_env, int deg_eq) {
  const std::vector<int> &allowed = allowed_valences(e, charge);
  if (allowed.empty()) return -1;
  if (aromatic_env) {
    // One bond of the aromatic system carries the extra order; fill against
    // the lowest allowed valence minus that slack.
    return std::max(0, allowed.front() - 1 - deg_eq);
  }
  for (int v : allowed)
    if (v >= deg_eq) return v - deg_eq;
  return -1;
}

}  // namespace detail

namespace {

// Equivalent heavy-bond degree: aromatic bonds count 1, others their order.
int degree_equivalent(const Molecule &mol, int i) {
  int s = 0;
  for (const auto &[nb, order] : mol.neighbors(i)) {
    (void)nb;
    s += int_order(order);
  }
  return s;
}

bool has_aromatic_bond(const Molecule &mol, int i) {
  for (const auto &[nb, order] : mol.neighbors(i)) {
    (void)nb;
    if (order == BondOrder::Aromatic) return true;
  }
  return false;
}

std::string valence_set_string(const std::vector<int> &allowed) {
  std::string s;
  for (size_t i = 0; i < allowed.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(allowed[i]);
  }
  return s;
}

}  // namespace

std::vector<ValenceViolation> check_valence(const Molecule &mol) {
  std::vector<ValenceViolation> out;
  for (int i = 0; i < mol.atom_count(); ++i) {
    const Atom &a = mol.atom(i);
    const auto &allowed = allowed_valences(a.element, a.charge);
    const bool arom = has_aromatic_bond(mol, i);
    const int v = degree_equivalent(mol, i) + a.hydrogens;
    bool ok = false;
    if (allowed.empty()) {
      ok = false;
    } else if (arom) {
      ok = std::find(allowed.begin(), allowed.end(), v) != allowed.end() ||
           std::find(allowed.begin(), allowed.end(), v + 1) != allowed.end();
    } else {
      ok = std::find(allowed.begin(), allowed.end(), v) != allowed.end();
    }
    if (!ok) out.push_back({i, v, valence_set_string(allowed)});
  }
  return out;
}

Molecule sanitize(const Molecule &mol) {
  std::vector<Atom> atoms = mol.atoms();
  std::vector<Bond> bonds = mol.bonds();
  const int n = static_cast<int>(atoms.size());

  // Fold explicit hydrogen atoms into their heavy neighbor.
  std::vector<int> merged_h(static_cast<size_t>(n), 0);
  std::vector<char> drop(static_cast<size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    if (atoms[static_cast<size_t>(i)].element != Element::H) continue;
    const Atom &h = atoms[static_cast<size_t>(i)];
    if (h.charge != 0 || h.hydrogens != 0 || h.aromatic)
      throw UnsupportedFeature("unsupported hydrogen atom attributes");
    const auto &nbrs = mol.neighbors(i);
    if (nbrs.size() != 1 || nbrs[0].second != BondOrder::Single ||
        atoms[static_cast<size_t>(nbrs[0].first)].element == Element::H)
      throw UnsupportedFeature(
          "explicit H must bond a single heavy atom with a single bond");
    merged_h[static_cast<size_t>(nbrs[0].first)] += 1;
    drop[static_cast<size_t>(i)] = 1;
  }
  if (std::any_of(drop.begin(), drop.end(), [](char c) { return c != 0; })) {
    std::vector<int> remap(static_cast<size_t>(n), -1);
    std::vector<Atom> kept;
    std::vector<int> kept_merged;
    for (int i = 0; i < n; ++i) {
      if (drop[static_cast<size_t>(i)]) continue;
      remap[static_cast<size_t>(i)] = static_cast<int>(kept.size());
      kept.push_back(atoms[static_cast<size_t>(i)]);
      kept_merged.push_back(merged_h[static_cast<size_t>(i)]);
    }
    std::vector<Bond> kept_bonds;
    for (const Bond &b : bonds) {
      const int ra = remap[static_cast<size_t>(b.a)];
      const int rb = remap[static_cast<size_t>(b.b)];
      if (ra < 0 || rb < 0) continue;  // H-heavy bonds folded away
      kept_bonds.push_back({ra, rb, b.order});
    }
    atoms = std::move(kept);
    bonds = std::move(kept_bonds);
    merged_h.assign(kept_merged.begin(), kept_merged.end());
  }

  Molecule heavy(atoms, bonds);  // rebuild adjacency on the heavy graph
  atoms = heavy.atoms();
  bonds = heavy.bonds();
  const int m = heavy.atom_count();

  // Charge-separate hypervalent nitro groups: N(=O)=O -> [N+](=O)[O-].
  for (int i = 0; i < m; ++i) {
    Atom &a = atoms[static_cast<size_t>(i)];
    if (a.element != Element::N || a.charge != 0 || a.aromatic) continue;
    int bond_sum = degree_equivalent(heavy, i);
    // each conversion trades one bond order for one positive charge
    while (bond_sum > 3 + a.charge) {
      int best = -1;
      for (const auto &[nb, order] : heavy.neighbors(i)) {
        if (order != BondOrder::Double) continue;
        const Atom &o = atoms[static_cast<size_t>(nb)];
        if (o.element == Element::O && o.charge == 0 && heavy.degree(nb) == 1 &&
            (best < 0 || nb < best))
          best = nb;
      }
      if (best < 0) break;  // not a nitro pattern; the valence check decides
      for (Bond &b : bonds) {
        if ((b.a == i && b.b == best) || (b.a == best && b.b == i))
          b.order = BondOrder::Single;
      }
      atoms[static_cast<size_t>(best)].charge = -1;
      a.charge += 1;
      heavy = Molecule(atoms, bonds);
      bond_sum = degree_equivalent(heavy, i);
    }
  }

  // Aromatic-flag consistency (syntactic aromaticity, no perception).
  for (const Bond &b : bonds) {
    if (b.order == BondOrder::Aromatic &&
        (!atoms[static_cast<size_t>(b.a)].aromatic ||
         !atoms[static_cast<size_t>(b.b)].aromatic))
      throw ValenceError("aromatic bond joins a non-aromatic atom");
  }
  for (int i = 0; i < m; ++i) {
    if (!atoms[static_cast<size_t>(i)].aromatic) continue;
    int arom_bonds = 0;
    for (const auto &[nb, order] : heavy.neighbors(i)) {
      (void)nb;
      if (order == BondOrder::Aromatic) ++arom_bonds;
    }
    if (arom_bonds < 2)
      throw ValenceError("aromatic atom outside an aromatic ring path");
  }

  // Hydrogen counts.
  for (int i = 0; i < m; ++i) {
    Atom &a = atoms[static_cast<size_t>(i)];
    const int merged = merged_h[static_cast<size_t>(i)];
    if (a.h_specified) {
      a.hydrogens = static_cast<uint8_t>(a.hydrogens + merged);
      continue;
    }
    const int deg_eq = degree_equivalent(heavy, i);
    const int fill = detail::implied_hydrogens(a.element, a.charge,
                                               has_aromatic_bond(heavy, i), deg_eq);
    if (fill < 0)
      throw ValenceError(std::string("no allowed valence for ") +
                         element_symbol(a.element) + " with bond sum " +
                         std::to_string(deg_eq));
    a.hydrogens = static_cast<uint8_t>(std::max(fill, merged));
  }

  Molecule result(std::move(atoms), std::move(bonds));
  const auto violations = check_valence(result);
  if (!violations.empty()) {
    const auto &v = violations.front();
    throw ValenceError("valence " + std::to_string(v.observed) + " at atom " +
                       std::to_string(v.atom) + " not in {" + v.allowed + "}");
  }
  result.sanitized_ = true;
  return result;
}

// ---------------------------------------------------------------------------
// Scanner

namespace detail {

namespace {

bool lookup_element(std::string_view s, size_t &i, Element &out, bool &aromatic) {
  // Two-letter symbols first.
  if (i + 1 < s.size()) {
    const char c0 = s[i], c1 = s[i + 1];
    if (c0 == 'C' && c1 == 'l') { out = Element::Cl; aromatic = false; i += 2; return true; }
    if (c0 == 'B' && c1 == 'r') { out = Element::Br; aromatic = false; i += 2; return true; }
  }
  switch (s[i]) {
  case 'H': out = Element::H; aromatic = false; break;
  case 'B': out = Element::B; aromatic = false; break;
  case 'C': out = Element::C; aromatic = false; break;
  case 'N': out = Element::N; aromatic = false; break;
  case 'O': out = Element::O; aromatic = false; break;
  case 'F': out = Element::F; aromatic = false; break;
  case 'P': out = Element::P; aromatic = false; break;
  case 'S': out = Element::S; aromatic = false; break;
  case 'I': out = Element::I; aromatic = false; break;
  case 'b': out = Element::B; aromatic = true; break;
  case 'c': out = Element::C; aromatic = true; break;
  case 'n': out = Element::N; aromatic = true; break;
  case 'o': out = Element::O; aromatic = true; break;
  case 'p': out = Element::P; aromatic = true; break;
  case 's': out = Element::S; aromatic = true; break;
  default: return false;
  }
  ++i;
  return true;
}

int scan_uint(std::string_view s, size_t &i) {
  int v = 0;
  bool any = false;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
    v = v * 10 + (s[i] - '0');
    ++i;
    any = true;
  }
  return any ? v : -1;
}

ScannedAtom scan_bracket(std::string_view s, size_t &i, const ScanOptions &opt,
                         size_t off) {
  ScannedAtom atom;
  atom.pos = off + i;
  atom.bracket = true;
  ++i;  // '['
  if (i >= s.size()) throw ParseError("unterminated bracket atom", off + i);
  if (std::isdigit(static_cast<unsigned char>(s[i])))
    throw UnsupportedFeature("isotope specifications are not supported");
  if (s[i] == '*') {
    if (!opt.pattern_mode)
      throw UnsupportedFeature("wildcard atom outside a reaction pattern");
    atom.wildcard = true;
    ++i;
  } else {
    if (!lookup_element(s, i, atom.element, atom.aromatic))
      throw UnsupportedFeature("unsupported element in bracket atom");
    if (i < s.size() && std::islower(static_cast<unsigned char>(s[i])))
      throw UnsupportedFeature("unsupported element in bracket atom");
  }
  bool seen_h = false, seen_charge = false, seen_degree = false;
  while (i < s.size() && s[i] != ']' && s[i] != ':') {
    const char c = s[i];
    if (c == 'H' && !seen_h) {
      seen_h = true;
      ++i;
      const int count = scan_uint(s, i);
      atom.bracket_h = count < 0 ? 1 : count;
    } else if ((c == '+' || c == '-') && !seen_charge) {
      seen_charge = true;
      const int sign = c == '+' ? 1 : -1;
      ++i;
      int repeats = 1;
      while (i < s.size() && s[i] == c) { ++repeats; ++i; }
      if (repeats == 1) {
        const int num = scan_uint(s, i);
        if (num >= 0) repeats = num;
      }
      atom.charge = sign * repeats;
      atom.charge_given = true;
    } else if (c == 'D' && !seen_degree && opt.pattern_mode) {
      seen_degree = true;
      ++i;
      const int d = scan_uint(s, i);
      if (d < 0) throw ParseError("degree constraint requires a digit", off + i);
      atom.degree = d;
    } else if (c == '@') {
      throw UnsupportedFeature("stereochemistry is not supported");
    } else {
      throw ParseError(std::string("unexpected character '") + c +
                           "' in bracket atom",
                       off + i);
    }
  }
  if (i < s.size() && s[i] == ':') {
    if (!opt.pattern_mode)
      throw UnsupportedFeature("atom map number outside a reaction pattern");
    ++i;
    const int map = scan_uint(s, i);
    if (map < 0) throw ParseError("atom map requires a number", off + i);
    atom.map_number = map;
  }
  if (i >= s.size() || s[i] != ']')
    throw ParseError("unterminated bracket atom", off + i);
  ++i;  // ']'
  if (atom.wildcard && atom.bracket_h > 0)
    throw ParseError("H count on a wildcard atom", atom.pos);
  return atom;
}

}  // namespace

ScannedGraph scan_fragment(std::string_view s, const ScanOptions &opt,
                           size_t off) {
  ScannedGraph g;
  if (s.empty()) throw ParseError("empty SMILES", off);

  int prev = -1;
  int pending = kBondDefault;
  size_t pending_pos = 0;
  std::vector<int> branch;
  std::map<int, std::tuple<int, int, size_t>> rings;  // digit -> (atom, code, pos)

  auto add_atom = [&](ScannedAtom atom) {
    const int idx = static_cast<int>(g.atoms.size());
    g.atoms.push_back(atom);
    if (prev >= 0)
      g.bonds.push_back({prev, idx, pending, pending_pos});
    else if (pending != kBondDefault)
      throw ParseError("bond with no preceding atom", pending_pos);
    pending = kBondDefault;
    prev = idx;
  };

  auto ring_closure = [&](int digit, size_t pos) {
    if (prev < 0) throw ParseError("ring closure before any atom", pos);
    auto it = rings.find(digit);
    if (it == rings.end()) {
      rings.emplace(digit, std::make_tuple(prev, pending, pos));
    } else {
      auto [other, other_code, other_pos] = it->second;
      (void)other_pos;
      if (other == prev) throw ParseError("ring closure to the same atom", pos);
      int code = kBondDefault;
      if (pending != kBondDefault && other_code != kBondDefault &&
          pending != other_code)
        throw ParseError("conflicting ring-closure bond orders", pos);
      code = pending != kBondDefault ? pending : other_code;
      g.bonds.push_back({other, prev, code, pos});
      rings.erase(it);
    }
    pending = kBondDefault;
  };

  size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    const size_t pos = off + i;
    if (c == '(') {
      if (prev < 0) throw ParseError("branch before any atom", pos);
      if (pending != kBondDefault)
        throw ParseError("bond before branch open", pos);
      branch.push_back(prev);
      ++i;
    } else if (c == ')') {
      if (branch.empty()) throw ParseError("unbalanced ')'", pos);
      if (pending != kBondDefault) throw ParseError("dangling bond", pos);
      prev = branch.back();
      branch.pop_back();
      ++i;
    } else if (c == '-' || c == '=' || c == '#' || c == ':' || c == '~') {
      if (pending != kBondDefault) throw ParseError("duplicate bond symbol", pos);
      if (c == '~' && !opt.pattern_mode)
        throw UnsupportedFeature("bond wildcard outside a reaction pattern");
      pending = c == '-' ? kBondSingle
               : c == '=' ? kBondDouble
               : c == '#' ? kBondTriple
               : c == ':' ? kBondAromatic
                          : kBondAny;
      pending_pos = pos;
      ++i;
    } else if (c == '%') {
      if (i + 2 >= s.size() ||
          !std::isdigit(static_cast<unsigned char>(s[i + 1])) ||
          !std::isdigit(static_cast<unsigned char>(s[i + 2])))
        throw ParseError("'%' requires two digits", pos);
      ring_closure((s[i + 1] - '0') * 10 + (s[i + 2] - '0'), pos);
      i += 3;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      ring_closure(c - '0', pos);
      ++i;
    } else if (c == '[') {
      add_atom(scan_bracket(s, i, opt, off));
    } else if (c == '.') {
      throw UnsupportedFeature("multi-fragment molecules are not supported");
    } else if (c == '/' || c == '\\' || c == '@') {
      throw UnsupportedFeature("stereochemistry is not supported");
    } else if (c == '*') {
      throw UnsupportedFeature("wildcard atom outside a reaction pattern");
    } else {
      ScannedAtom atom;
      atom.pos = pos;
      size_t j = i;
      if (!lookup_element(s, j, atom.element, atom.aromatic))
        throw ParseError(std::string("unexpected character '") + c + "'", pos);
      if (atom.element == Element::H)
        throw ParseError("H outside brackets", pos);
      if (atom.aromatic && !info(atom.element).aromatic_allowed)
        throw ParseError("element cannot be aromatic", pos);
      i = j;
      add_atom(atom);
    }
  }
  if (!branch.empty()) throw ParseError("unclosed branch", off + s.size());
  if (pending != kBondDefault) throw ParseError("dangling bond", off + s.size());
  if (!rings.empty())
    throw ParseError("unclosed ring closure", std::get<2>(rings.begin()->second));
  return g;
}

int resolve_default_bond(const ScannedAtom &a, const ScannedAtom &b, int code) {
  if (code != kBondDefault) return code;
  return (a.aromatic && b.aromatic) ? kBondAromatic : kBondSingle;
}

}  // namespace detail

Molecule parse_smiles(std::string_view text) {
  detail::ScanOptions opt;
  const detail::ScannedGraph g = detail::scan_fragment(text, opt);

  std::vector<Atom> atoms;
  atoms.reserve(g.atoms.size());
  for (const auto &sa : g.atoms) {
    Atom a;
    a.element = sa.element;
    a.aromatic = sa.aromatic;
    a.charge = static_cast<int8_t>(sa.charge);
    if (sa.bracket) {
      a.h_specified = true;
      a.hydrogens = static_cast<uint8_t>(sa.bracket_h);
    }
    atoms.push_back(a);
  }
  std::vector<Bond> bonds;
  bonds.reserve(g.bonds.size());
  for (const auto &sb : g.bonds) {
    const int code = detail::resolve_default_bond(
        g.atoms[static_cast<size_t>(sb.a)], g.atoms[static_cast<size_t>(sb.b)],
        sb.code);
    bonds.push_back({sb.a, sb.b, static_cast<BondOrder>(code)});
  }
  return sanitize(Molecule(std::move(atoms), std::move(bonds)));
}

// ---------------------------------------------------------------------------
// Canonicalization

namespace {

int bond_code(BondOrder o) { return static_cast<int>(o); }

std::vector<int> dense_rank(std::vector<std::pair<std::vector<long long>, int>> &keys) {
  std::sort(keys.begin(), keys.end());
  std::vector<int> ranks(keys.size());
  int rank = -1;
  const std::vector<long long> *last = nullptr;
  for (const auto &[key, idx] : keys) {
    if (last == nullptr || key != *last) ++rank;
    ranks[static_cast<size_t>(idx)] = rank;
    last = &key;
  }
  return ranks;
}

int class_count(const std::vector<int> &ranks) {
  return ranks.empty() ? 0 : *std::max_element(ranks.begin(), ranks.end()) + 1;
}

std::vector<int> refine_ranks(const Molecule &mol, std::vector<int> ranks) {
  const int n = mol.atom_count();
  int classes = class_count(ranks);
  while (classes < n) {
    std::vector<std::pair<std::vector<long long>, int>> keys;
    keys.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      std::vector<long long> key{ranks[static_cast<size_t>(i)]};
      std::vector<long long> nbr;
      for (const auto &[v, order] : mol.neighbors(i))
        nbr.push_back(static_cast<long long>(ranks[static_cast<size_t>(v)]) * 8 +
                      bond_code(order));
      std::sort(nbr.begin(), nbr.end());
      key.insert(key.end(), nbr.begin(), nbr.end());
      keys.emplace_back(std::move(key), i);
    }
    std::vector<int> next = dense_rank(keys);
    const int next_classes = class_count(next);
    if (next_classes == classes) return next;
    ranks = std::move(next);
    classes = next_classes;
  }
  return ranks;
}

std::vector<int> initial_ranks(const Molecule &mol) {
  const int n = mol.atom_count();
  std::vector<std::pair<std::vector<long long>, int>> keys;
  keys.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Atom &a = mol.atom(i);
    keys.emplace_back(
        std::vector<long long>{atomic_number(a.element), a.charge, mol.degree(i),
                               a.hydrogens, a.aromatic ? 1 : 0},
        i);
  }
  return dense_rank(keys);
}

// Emission with fully individualized ranks.
std::string emit_with_order(const Molecule &mol, const std::vector<int> &ranks) {
  const int n = mol.atom_count();
  if (n == 0) return "";
  std::vector<int> atom_of_rank(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) atom_of_rank[static_cast<size_t>(ranks[static_cast<size_t>(i)])] = i;
  const int root = atom_of_rank[0];

  // DFS in rank order; collect tree structure and ring (back) edges.
  std::vector<int> parent(static_cast<size_t>(n), -1);
  std::vector<std::vector<int>> children(static_cast<size_t>(n));
  std::vector<int> preorder(static_cast<size_t>(n), -1);
  std::vector<std::pair<int, int>> ring_edges;  // (earlier atom, later atom)
  std::vector<char> visited(static_cast<size_t>(n), 0);
  int counter = 0;

  std::vector<std::pair<int, size_t>> stack;  // (atom, next-neighbor cursor)
  auto sorted_neighbors = [&](int u) {
    std::vector<int> nb;
    for (const auto &[v, order] : mol.neighbors(u)) {
      (void)order;
      nb.push_back(v);
    }
    std::sort(nb.begin(), nb.end(), [&](int x, int y) {
      return ranks[static_cast<size_t>(x)] < ranks[static_cast<size_t>(y)];
    });
    return nb;
  };
  std::vector<std::vector<int>> nbrs(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) nbrs[static_cast<size_t>(i)] = sorted_neighbors(i);

  visited[static_cast<size_t>(root)] = 1;
  preorder[static_cast<size_t>(root)] = counter++;
  stack.emplace_back(root, 0);
  while (!stack.empty()) {
    auto &[u, cursor] = stack.back();
    if (cursor >= nbrs[static_cast<size_t>(u)].size()) {
      stack.pop_back();
      continue;
    }
    const int v = nbrs[static_cast<size_t>(u)][cursor++];
    if (!visited[static_cast<size_t>(v)]) {
      visited[static_cast<size_t>(v)] = 1;
      parent[static_cast<size_t>(v)] = u;
      children[static_cast<size_t>(u)].push_back(v);
      preorder[static_cast<size_t>(v)] = counter++;
      stack.emplace_back(v, 0);
    } else if (v != parent[static_cast<size_t>(u)] &&
               preorder[static_cast<size_t>(v)] < preorder[static_cast<size_t>(u)]) {
      ring_edges.emplace_back(v, u);
    }
  }

  // Assign ring-closure digits in opening (preorder) order, reusing freed ones.
  struct Closure { int digit; int partner; BondOrder order; int open_order; };
  std::vector<std::vector<Closure>> opens(static_cast<size_t>(n)), closes(static_cast<size_t>(n));
  std::sort(ring_edges.begin(), ring_edges.end(), [&](const auto &e1, const auto &e2) {
    const auto k1 = std::make_pair(preorder[static_cast<size_t>(e1.first)],
                                   preorder[static_cast<size_t>(e1.second)]);
    const auto k2 = std::make_pair(preorder[static_cast<size_t>(e2.first)],
                                   preorder[static_cast<size_t>(e2.second)]);
    return k1 < k2;
  });
  {
    // Simulate emission order to allocate digits: events sorted by preorder.
    std::vector<char> digit_used(100, 0);
    struct Event { int pre; size_t edge; bool open; };
    std::vector<Event> events;
    for (size_t e = 0; e < ring_edges.size(); ++e) {
      events.push_back({preorder[static_cast<size_t>(ring_edges[e].first)], e, true});
      events.push_back({preorder[static_cast<size_t>(ring_edges[e].second)], e, false});
    }
    std::sort(events.begin(), events.end(), [](const Event &a, const Event &b) {
      if (a.pre != b.pre) return a.pre < b.pre;
      if (a.open != b.open) return a.open > b.open;  // opens before closes at an atom
      return a.edge < b.edge;
    });
    std::vector<int> edge_digit(ring_edges.size(), -1);
    int open_counter = 0;
    for (const Event &ev : events) {
      auto [ea, eb] = ring_edges[ev.edge];
      BondOrder order = BondOrder::Single;
      for (const auto &[v, o] : mol.neighbors(ea))
        if (v == eb) order = o;
      if (ev.open) {
        int d = 1;
        while (d < 100 && digit_used[static_cast<size_t>(d)]) ++d;
        if (d >= 100) throw Error("too many simultaneous ring closures");
        digit_used[static_cast<size_t>(d)] = 1;
        edge_digit[ev.edge] = d;
        opens[static_cast<size_t>(ea)].push_back({d, eb, order, open_counter++});
      } else {
        const int d = edge_digit[ev.edge];
        digit_used[static_cast<size_t>(d)] = 0;
        closes[static_cast<size_t>(eb)].push_back({d, ea, order, open_counter++});
      }
    }
  }

  // Bond symbol between two atoms, empty when the default parse matches.
  auto bond_text = [&](int u, int v, BondOrder order) -> std::string {
    const bool both_arom = mol.atom(u).aromatic && mol.atom(v).aromatic;
    switch (order) {
    case BondOrder::Single: return both_arom ? "-" : "";
    case BondOrder::Aromatic: return "";  // only valid between aromatic atoms
    case BondOrder::Double: return "=";
    case BondOrder::Triple: return "#";
    }
    return "";
  };

  auto atom_text = [&](int u) -> std::string {
    const Atom &a = mol.atom(u);
    std::string sym = element_symbol(a.element);
    if (a.aromatic)
      for (auto &ch : sym) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    const int fill = detail::implied_hydrogens(a.element, a.charge,
                                               has_aromatic_bond(mol, u),
                                               degree_equivalent(mol, u));
    const bool bare = is_organic_subset(a.element) && a.charge == 0 &&
                      fill == a.hydrogens;
    if (bare) return sym;
    std::string out = "[" + sym;
    if (a.hydrogens == 1) out += "H";
    else if (a.hydrogens > 1) out += "H" + std::to_string(a.hydrogens);
    if (a.charge == 1) out += "+";
    else if (a.charge == -1) out += "-";
    else if (a.charge > 1) out += "+" + std::to_string(a.charge);
    else if (a.charge < -1) out += "-" + std::to_string(-a.charge);
    out += "]";
    return out;
  };

  std::string out;
  // Iterative emission; frame = (atom, child cursor, needs_close_paren).
  struct Frame { int atom; size_t child = 0; };
  std::vector<Frame> emit_stack;
  auto emit_atom = [&](int u) {
    out += atom_text(u);
    std::vector<Closure> ring_items = closes[static_cast<size_t>(u)];
    for (const Closure &c : opens[static_cast<size_t>(u)]) ring_items.push_back(c);
    std::sort(ring_items.begin(), ring_items.end(),
              [](const Closure &a, const Closure &b) { return a.open_order < b.open_order; });
    for (const Closure &c : ring_items) {
      const bool opening = preorder[static_cast<size_t>(u)] < preorder[static_cast<size_t>(c.partner)];
      if (opening) out += bond_text(u, c.partner, c.order);
      if (c.digit >= 10) out += "%";
      out += std::to_string(c.digit);
    }
  };
  emit_atom(root);
  emit_stack.push_back({root});
  while (!emit_stack.empty()) {
    Frame &f = emit_stack.back();
    const auto &kids = children[static_cast<size_t>(f.atom)];
    if (f.child >= kids.size()) {
      emit_stack.pop_back();
      if (!emit_stack.empty()) {
        Frame &pf = emit_stack.back();
        if (pf.child < children[static_cast<size_t>(pf.atom)].size()) out += ")";
      }
      continue;
    }
    const int v = kids[f.child++];
    const bool last = f.child == kids.size();
    if (!last) out += "(";
    BondOrder order = BondOrder::Single;
    for (const auto &[w, o] : mol.neighbors(f.atom))
      if (w == v) order = o;
    out += bond_text(f.atom, v, order);
    emit_atom(v);
    emit_stack.push_back({v});
  }
  return out;
}

std::string emit_min(const Molecule &mol, const std::vector<int> &ranks) {
  const int n = mol.atom_count();
  // Find the smallest rank shared by more than one atom.
  std::vector<int> count(static_cast<size_t>(class_count(ranks)), 0);
  for (int r : ranks) ++count[static_cast<size_t>(r)];
  int tied_rank = -1;
  for (size_t r = 0; r < count.size(); ++r) {
    if (count[r] > 1) {
      tied_rank = static_cast<int>(r);
      break;
    }
  }
  if (tied_rank < 0) return emit_with_order(mol, ranks);

  // Branch over each tied atom, individualize, and keep the smallest string.
  std::string best;
  bool have = false;
  for (int i = 0; i < n; ++i) {
    if (ranks[static_cast<size_t>(i)] != tied_rank) continue;
    std::vector<std::pair<std::vector<long long>, int>> keys;
    keys.reserve(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j)
      keys.emplace_back(std::vector<long long>{ranks[static_cast<size_t>(j)] * 2 +
                                               (j == i ? 0 : 1)},
                        j);
    std::vector<int> bumped = dense_rank(keys);
    const std::string candidate = emit_min(mol, refine_ranks(mol, std::move(bumped)));
    if (!have || candidate < best) {
      best = candidate;
      have = true;
    }
  }
  return best;
}

}  // namespace

CanonicalForm canonical_form(const Molecule &mol) {
  if (!mol.sanitized())
    throw Error("canonical_form requires a sanitized molecule");
  if (mol.empty()) return {""};
  if (!mol.connected())
    throw Error("canonical_form requires a connected molecule");
  return {emit_min(mol, refine_ranks(mol, initial_ranks(mol)))};
}

}  // namespace synvia
