//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include "fixtures.hpp"
#include "synvia/sampler.hpp"

using namespace synvia;
using synvia::testing::env;

TEST_CASE("eligibility index sorts blocks into template slots") {
  const auto &e = env();
  const EligibilityIndex index = build_eligibility_index(e.catalog, e.templates);
  const int amide = e.tmpl("amide");
  const auto &acid_slot = index.slots[static_cast<size_t>(amide)][0];
  const auto &amine_slot = index.slots[static_cast<size_t>(amide)][1];
  // acids (and the ester-acid side) under slot 0, amines under slot 1
  CHECK(std::find(acid_slot.begin(), acid_slot.end(), e.block("acid_acetic")) !=
        acid_slot.end());
  CHECK(std::find(acid_slot.begin(), acid_slot.end(), e.block("amine_methyl")) ==
        acid_slot.end());
  CHECK(std::find(amine_slot.begin(), amine_slot.end(), e.block("amine_methyl")) !=
        amine_slot.end());
  CHECK(index.unmatched_blocks.empty());
}

TEST_CASE("an inert catalog leaves slots empty with a warning entry") {
  const auto templates = parse_template_file(
      "amide\t2\t[C:1](=[O:2])O.[N:3]>>[C:1](=[O:2])[N:3]\n");
  const Catalog inert = Catalog::from_content("inert\tCCCC\n", {});
  const EligibilityIndex index = build_eligibility_index(inert, templates);
  CHECK(index.empty_slots.size() == 2);
  CHECK(index.fully_stocked.empty());
  CHECK(index.unmatched_blocks.size() == 1);
}

TEST_CASE("identity template admits every carbon-containing block") {
  const auto templates = parse_template_file("ident\t1\t[C:1]>>[C:1]\n");
  const auto &e = env();
  const EligibilityIndex index = build_eligibility_index(e.catalog, templates);
  int carbon_blocks = 0;
  for (const CatalogBlock &b : e.catalog.blocks()) {
    bool has_c = false;
    for (const Atom &a : b.mol.atoms())
      if (a.element == Element::C && !a.aromatic) has_c = true;
    if (has_c) ++carbon_blocks;
  }
  CHECK(static_cast<int>(index.slots[0][0].size()) == carbon_blocks);
}

TEST_CASE("sampled pathways execute successfully and respect the guards") {
  const auto &e = env();
  const EligibilityIndex index = build_eligibility_index(e.catalog, e.templates);
  SamplerLimits limits;
  limits.max_reactions = 5;
  limits.max_atoms = 80;
  int convergent_pathways = 0;
  for (uint64_t seed = 0; seed < 300; ++seed) {
    const SampledPathway pw = sample_pathway(index, e.ctx(), limits, seed);
    CHECK(pw.program.finalized());
    const int rxns = pw.program.reaction_count();
    CHECK(rxns >= 1);
    CHECK(rxns <= limits.max_reactions);
    CHECK(program_valid(pw.program, e.ctx()));
    const ExecutionResult result = execute(pw.program, e.ctx());
    REQUIRE(result.status == ExecStatus::Success);
    CHECK(canonical_form(*result.product) == canonical_form(pw.product));
    // programs are single-tree postfix bodies: exact tree round trip
    const SynthesisTree tree = parse_program(pw.program, e.ctx());
    CHECK(compile_tree(tree, e.ctx()) == pw.program);
    if (pw.convergent_steps > 0) ++convergent_pathways;
  }
  // branched pathways occur in the sample set
  CHECK(convergent_pathways > 0);
}

TEST_CASE("max_reactions=1 gives exactly one reaction token") {
  const auto &e = env();
  const EligibilityIndex index = build_eligibility_index(e.catalog, e.templates);
  SamplerLimits limits;
  limits.max_reactions = 1;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const SampledPathway pw = sample_pathway(index, e.ctx(), limits, seed);
    CHECK(pw.program.reaction_count() == 1);
  }
}

TEST_CASE("sampling is deterministic per seed") {
  const auto &e = env();
  const EligibilityIndex index = build_eligibility_index(e.catalog, e.templates);
  SamplerLimits limits;
  const SampledPathway a = sample_pathway(index, e.ctx(), limits, 42);
  const SampledPathway b = sample_pathway(index, e.ctx(), limits, 42);
  CHECK(a.program == b.program);
  CHECK(canonical_form(a.product) == canonical_form(b.product));
}

TEST_CASE("atom guard stops growth") {
  const auto &e = env();
  const EligibilityIndex index = build_eligibility_index(e.catalog, e.templates);
  SamplerLimits limits;
  limits.max_reactions = 50;  // atom guard must be the binding constraint
  limits.max_atoms = 12;
  for (uint64_t seed = 0; seed < 30; ++seed) {
    const SampledPathway pw = sample_pathway(index, e.ctx(), limits, seed);
    // the guard checks before each step, so the final product may exceed the
    // limit by one reaction's growth but intermediates before the last step
    // may not
    const ExecutionResult result = execute(pw.program, e.ctx());
    REQUIRE(result.status == ExecStatus::Success);
    int step = 0;
    for (const TraceStep &t : result.trace) {
      (void)t;
      ++step;
    }
    CHECK(step >= 1);
  }
}

TEST_CASE("restricted indices only use the allowed blocks") {
  const auto &e = env();
  const std::vector<int> allowed = {e.block("acid_acetic"), e.block("amine_methyl")};
  const EligibilityIndex index =
      build_eligibility_index(e.catalog, e.templates, allowed);
  SamplerLimits limits;
  limits.max_reactions = 3;
  for (uint64_t seed = 0; seed < 30; ++seed) {
    const SampledPathway pw = sample_pathway(index, e.ctx(), limits, seed);
    for (const PostfixToken &t : pw.program.tokens()) {
      if (t.kind != PostfixToken::Kind::BB) continue;
      CHECK(std::find(allowed.begin(), allowed.end(), t.id) != allowed.end());
    }
  }
}

TEST_CASE("hopeless sampling dead-ends with an error") {
  const auto templates = parse_template_file(
      "amide\t2\t[C:1](=[O:2])O.[N:3]>>[C:1](=[O:2])[N:3]\n");
  const Catalog inert = Catalog::from_content("inert\tCCCC\n", {});
  const EligibilityIndex index = build_eligibility_index(inert, templates);
  ExecutionContext ctx{inert, templates};
  SamplerLimits limits;
  CHECK_THROWS_AS(sample_pathway(index, ctx, limits, 1), DeadEnd);
}
