//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "synvia/reaction.hpp"
#include "synvia/rng.hpp"

using namespace synvia;

namespace {

const char *kAmide = "[C:1](=[O:2])O.[N:3]>>[C:1](=[O:2])[N:3]";

Molecule permuted(const Molecule &mol, const std::vector<int> &perm) {
  std::vector<Atom> atoms(static_cast<size_t>(mol.atom_count()));
  for (int i = 0; i < mol.atom_count(); ++i)
    atoms[static_cast<size_t>(perm[static_cast<size_t>(i)])] = mol.atom(i);
  std::vector<Bond> bonds;
  for (const Bond &b : mol.bonds())
    bonds.push_back({perm[static_cast<size_t>(b.a)], perm[static_cast<size_t>(b.b)],
                     b.order});
  return sanitize(Molecule(std::move(atoms), std::move(bonds)));
}

// Brute-force oracle: all injective maps pattern -> molecule checked directly.
std::vector<std::vector<int>> brute_force_embeddings(const PatternGraph &p,
                                                     const Molecule &mol) {
  std::vector<std::vector<int>> out;
  const int np = p.atom_count(), nm = mol.atom_count();
  if (np > nm) return out;
  std::vector<int> assign(static_cast<size_t>(np), -1);
  std::vector<char> used(static_cast<size_t>(nm), 0);
  auto atom_ok = [&](const PatternAtom &pa, int mi) {
    const Atom &a = mol.atom(mi);
    if (!pa.wildcard && (a.element != pa.element || a.aromatic != pa.aromatic))
      return false;
    if (pa.charge_given && a.charge != pa.charge) return false;
    if (pa.degree >= 0 && mol.degree(mi) != pa.degree) return false;
    return true;
  };
  auto bonds_ok = [&]() {
    for (const PatternBond &b : p.bonds()) {
      const int ma = assign[static_cast<size_t>(b.a)];
      const int mb = assign[static_cast<size_t>(b.b)];
      bool found = false;
      for (const auto &[v, order] : mol.neighbors(ma)) {
        if (v != mb) continue;
        if (b.code == 5 || b.code == static_cast<int>(order)) found = true;
      }
      if (!found) return false;
    }
    return true;
  };
  std::function<void(int)> rec = [&](int k) {
    if (k == np) {
      if (bonds_ok()) out.push_back(assign);
      return;
    }
    for (int mi = 0; mi < nm; ++mi) {
      if (used[static_cast<size_t>(mi)]) continue;
      if (!atom_ok(p.atom(k), mi)) continue;
      assign[static_cast<size_t>(k)] = mi;
      used[static_cast<size_t>(mi)] = 1;
      rec(k + 1);
      assign[static_cast<size_t>(k)] = -1;
      used[static_cast<size_t>(mi)] = 0;
    }
  };
  rec(0);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("amide template parses with a valid map bijection") {
  const ReactionTemplate t = parse_template(kAmide);
  CHECK(t.arity == 2);
  CHECK(t.reactants.size() == 2);
  CHECK(t.products.size() == 1);
  CHECK(t.reactants[0].atom_count() == 3);
  CHECK(t.reactants[1].atom_count() == 1);
}

TEST_CASE("identity template is arity 1") {
  const ReactionTemplate t = parse_template("[C:1]>>[C:1]");
  CHECK(t.arity == 1);
}

TEST_CASE("unmatched product map is a MapNumberError") {
  CHECK_THROWS_AS(parse_template("[C:1]>>[C:2]"), MapNumberError);
  CHECK_THROWS_AS(parse_template("[C:1][C:1]>>[C:1]"), MapNumberError);
  CHECK_THROWS_AS(parse_template("[C:1].[N:1]>>[C:1]"), MapNumberError);
  CHECK_THROWS_AS(parse_template("[C:1]>>[*]"), MapNumberError);
}

TEST_CASE("template grammar errors") {
  CHECK_THROWS_AS(parse_template("[C:1][C:1]"), ParseError);      // no '>>'
  CHECK_THROWS_AS(parse_template("[C:1]>>[C:1]>>[C:1]"), ParseError);
  CHECK_THROWS_AS(parse_template("[C:1].[C:2].[N:3].[O:4]>>[C:1]"), ParseError);
  CHECK_THROWS_AS(parse_template("[C:1]C.C>>[C:1]~C"), ParseError);  // product '~'
}

TEST_CASE("amide coupling matches acetic acid and methylamine exactly once") {
  const ReactionTemplate t = parse_template(kAmide);
  const Molecule acid = parse_smiles("CC(=O)O");
  const Molecule amine = parse_smiles("CN");
  const auto assignments = match_pattern(t, {acid, amine});
  CHECK(assignments.size() == 1);
  const auto none = match_pattern(t, {parse_smiles("C"), parse_smiles("C")});
  CHECK(none.empty());
  CHECK_THROWS_AS(match_pattern(t, {acid}), ArityMismatch);
}

TEST_CASE("single-atom carbon pattern matches ethane twice") {
  const ReactionTemplate t = parse_template("[C:1]>>[C:1]");
  const auto assignments = match_pattern(t, {parse_smiles("CC")});
  CHECK(assignments.size() == 2);
}

TEST_CASE("embedding enumeration equals the brute-force oracle") {
  const std::vector<std::pair<const char *, const char *>> cases = {
      {"[C:1][O:2]>>[C:1]", "CCO"},
      {"[C:1][C:2]>>[C:1]", "CCC"},
      {"[c:1][c:2]>>[c:1]", "c1ccccc1"},
      {"[C:1](=[O:2])O.[N:3]>>[C:1](=[O:2])[N:3]", "CC(=O)O"},
      {"[*:1][OD1:2]>>[*:1]", "OCC(O)CO"},
      {"[C:1]~[C:2]>>[C:1]", "CC=CC"},
  };
  for (const auto &[tmpl_text, smiles] : cases) {
    const ReactionTemplate t = parse_template(tmpl_text);
    const Molecule m = parse_smiles(smiles);
    REQUIRE(m.atom_count() <= 8);
    CHECK(enumerate_embeddings(t.reactants[0], m) ==
          brute_force_embeddings(t.reactants[0], m));
  }
}

TEST_CASE("amide coupling rewrites to N-methylacetamide") {
  const ReactionTemplate t = parse_template(kAmide);
  const ApplyResult r =
      apply_template(t, {parse_smiles("CC(=O)O"), parse_smiles("CN")});
  REQUIRE(r.products.size() == 1);
  CHECK(canonical_form(r.products[0]) == canonical_form(parse_smiles("CC(=O)NC")));
}

TEST_CASE("identity template maps methane to methane") {
  const ReactionTemplate t = parse_template("[C:1]>>[C:1]");
  const ApplyResult r = apply_template(t, {parse_smiles("C")});
  REQUIRE(r.products.size() == 1);
  CHECK(canonical_form(r.products[0]) == canonical_form(parse_smiles("C")));
}

TEST_CASE("no match yields an empty candidate list, not an error") {
  const ReactionTemplate t = parse_template(kAmide);
  const ApplyResult r = apply_template(t, {parse_smiles("C"), parse_smiles("C")});
  CHECK(r.products.empty());
  CHECK(r.match_count == 0);
}

TEST_CASE("apply output is invariant under reactant atom permutation") {
  const ReactionTemplate t = parse_template(kAmide);
  const Molecule acid = parse_smiles("CCC(=O)O");
  const Molecule amine = parse_smiles("NCC");
  const ApplyResult base = apply_template(t, {acid, amine});
  REQUIRE(!base.products.empty());
  const std::string expected = canonical_form(base.products[0]).text;
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> pa(static_cast<size_t>(acid.atom_count()));
    std::iota(pa.begin(), pa.end(), 0);
    for (size_t i = pa.size(); i > 1; --i)
      std::swap(pa[i - 1], pa[rng.uniform_int(i)]);
    std::vector<int> pb(static_cast<size_t>(amine.atom_count()));
    std::iota(pb.begin(), pb.end(), 0);
    for (size_t i = pb.size(); i > 1; --i)
      std::swap(pb[i - 1], pb[rng.uniform_int(i)]);
    const ApplyResult r =
        apply_template(t, {permuted(acid, pa), permuted(amine, pb)});
    REQUIRE(r.products.size() == base.products.size());
    CHECK(canonical_form(r.products[0]).text == expected);
  }
}

TEST_CASE("every returned product passes the valence check") {
  const ReactionTemplate t = parse_template(kAmide);
  const ApplyResult r =
      apply_template(t, {parse_smiles("OC(=O)c1ccccc1"), parse_smiles("NCCO")});
  REQUIRE(!r.products.empty());
  for (const Molecule &p : r.products) CHECK(check_valence(p).empty());
}

TEST_CASE("valence-infeasible candidates are dropped silently") {
  // tertiary amine has no H to give; the rewrite would exceed nitrogen valence
  const ReactionTemplate t = parse_template(kAmide);
  const ApplyResult r =
      apply_template(t, {parse_smiles("CC(=O)O"), parse_smiles("CN(C)C")});
  CHECK(r.match_count > 0);
  CHECK(r.products.empty());
}

TEST_CASE("multi-product templates emit one candidate per product pattern") {
  const ReactionTemplate t =
      parse_template("[C:1](=[O:2])[O:3][C:4]>>[C:1](=[O:2])O.[O:3][C:4]");
  const ApplyResult r = apply_template(t, {parse_smiles("CC(=O)OCC")});
  REQUIRE(r.products.size() == 2);
  const std::string a = canonical_form(r.products[0]).text;
  const std::string b = canonical_form(r.products[1]).text;
  CHECK(a < b);  // sorted by canonical text
  const std::string acid = canonical_form(parse_smiles("CC(=O)O")).text;
  const std::string alcohol = canonical_form(parse_smiles("OCC")).text;
  CHECK(((a == acid && b == alcohol) || (a == alcohol && b == acid)));
}

TEST_CASE("deleted pattern atoms take their exclusive substituents with them") {
  // the leaving O of the acid keeps nothing; the product never contains it
  const ReactionTemplate t = parse_template(kAmide);
  const ApplyResult r =
      apply_template(t, {parse_smiles("CC(=O)OC"), parse_smiles("CN")});
  // ester oxygen is the matched O with a methyl substituent: deleting it
  // removes the methyl too
  REQUIRE(!r.products.empty());
  CHECK(canonical_form(r.products[0]) == canonical_form(parse_smiles("CC(=O)NC")));
}

TEST_CASE("charge-overriding product atoms work") {
  const ReactionTemplate t = parse_template("[N+:1](=[O])[O-].[*:2]>>[N+0:1][*:2]");
  // contrived: bolt the reduced nitrogen onto a carbon operand
  const ApplyResult r =
      apply_template(t, {parse_smiles("O=[N+]([O-])C"), parse_smiles("C")});
  REQUIRE(!r.products.empty());
  for (const Molecule &p : r.products)
    for (const Atom &a : p.atoms()) CHECK(a.charge == 0);
}

TEST_CASE("template files parse and validate") {
  const std::string content =
      "# comment\n"
      "amide\t2\t[C:1](=[O:2])O.[N:3]>>[C:1](=[O:2])[N:3]\n"
      "ident\t1\t[C:1]>>[C:1]\n";
  const auto templates = parse_template_file(content);
  REQUIRE(templates.size() == 2);
  CHECK(templates[0].id == "amide");
  CHECK(templates[0].index == 0);
  CHECK(templates[1].arity == 1);
  CHECK_THROWS_AS(parse_template_file("x\t3\t[C:1]>>[C:1]\n"), DataError);
  CHECK_THROWS_AS(parse_template_file("x\t1\t[C:1]>>[C:1]\nx\t1\t[N:1]>>[N:1]\n"),
                  DataError);
}
