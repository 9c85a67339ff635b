//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include "fixtures.hpp"
#include "synvia/synthesis.hpp"

using namespace synvia;
using synvia::testing::env;

namespace {

// The two-step plan: amide(acid_pbb, amine_methyl) then suzuki with
// boronic_ph on the intermediate.
SynthesisTree two_step_tree() {
  const auto &e = env();
  SynthesisTree tree;
  tree.root = SynthesisTree::Node::apply(
      e.tmpl("suzuki"),
      {SynthesisTree::Node::apply(e.tmpl("amide"),
                                  {SynthesisTree::Node::leaf(e.block("acid_pbb")),
                                   SynthesisTree::Node::leaf(e.block("amine_methyl"))}),
       SynthesisTree::Node::leaf(e.block("boronic_ph"))});
  return tree;
}

}  // namespace

TEST_CASE("compile_tree emits the post-order token sequence") {
  const auto &e = env();
  const PostfixProgram prog = compile_tree(two_step_tree(), e.ctx());
  const auto body = prog.body();
  REQUIRE(body.size() == 5);
  CHECK(body[0] == PostfixToken::bb(e.block("acid_pbb")));
  CHECK(body[1] == PostfixToken::bb(e.block("amine_methyl")));
  CHECK(body[2] == PostfixToken::rxn(e.tmpl("amide")));
  CHECK(body[3] == PostfixToken::bb(e.block("boronic_ph")));
  CHECK(body[4] == PostfixToken::rxn(e.tmpl("suzuki")));
  CHECK(prog.finalized());
}

TEST_CASE("single-leaf tree compiles to one BB token") {
  const auto &e = env();
  SynthesisTree tree;
  tree.root = SynthesisTree::Node::leaf(e.block("acid_acetic"));
  const PostfixProgram prog = compile_tree(tree, e.ctx());
  REQUIRE(prog.body().size() == 1);
  CHECK(prog.body()[0] == PostfixToken::bb(e.block("acid_acetic")));
}

TEST_CASE("trimolecular apply emits three leaves before the reaction") {
  const auto &e = env();
  SynthesisTree tree;
  tree.root = SynthesisTree::Node::apply(
      e.tmpl("nn_link"), {SynthesisTree::Node::leaf(e.block("bromide_et")),
                          SynthesisTree::Node::leaf(e.block("amine_methyl")),
                          SynthesisTree::Node::leaf(e.block("bromide_bn"))});
  const auto body = compile_tree(tree, e.ctx()).body();
  REQUIRE(body.size() == 4);
  CHECK(body[3] == PostfixToken::rxn(e.tmpl("nn_link")));
}

TEST_CASE("parse_program inverts compile_tree") {
  const auto &e = env();
  const SynthesisTree tree = two_step_tree();
  const PostfixProgram prog = compile_tree(tree, e.ctx());
  const SynthesisTree parsed = parse_program(prog, e.ctx());
  CHECK(parsed == tree);
  CHECK(compile_tree(parsed, e.ctx()) == prog);
}

TEST_CASE("single BB program parses to a leaf") {
  const auto &e = env();
  PostfixProgram prog;
  prog.push(PostfixToken::bb(e.block("amine_ethyl")));
  prog.push(PostfixToken::end());
  const SynthesisTree tree = parse_program(prog, e.ctx());
  CHECK(tree.root.is_leaf());
  CHECK(tree.root.block == e.block("amine_ethyl"));
}

TEST_CASE("reaction on an empty stack is an invalid program") {
  const auto &e = env();
  PostfixProgram prog;
  prog.push(PostfixToken::rxn(e.tmpl("amide")));
  prog.push(PostfixToken::end());
  CHECK_THROWS_AS(parse_program(prog, e.ctx()), InvalidProgram);
  CHECK_FALSE(program_valid(prog, e.ctx()));
}

TEST_CASE("executing the two-step program reproduces the trace") {
  const auto &e = env();
  const PostfixProgram prog = compile_tree(two_step_tree(), e.ctx());
  const ExecutionResult result = execute(prog, e.ctx());
  REQUIRE(result.status == ExecStatus::Success);
  REQUIRE(result.trace.size() == 5);
  const std::vector<std::string> expected_ops = {"push", "push", "apply", "push",
                                                 "apply"};
  const std::vector<int> expected_depths = {1, 2, 1, 2, 1};
  for (size_t i = 0; i < 5; ++i) {
    CHECK(result.trace[i].op == expected_ops[i]);
    CHECK(result.trace[i].depth_after == expected_depths[i]);
  }
  CHECK(canonical_form(*result.product) ==
        canonical_form(parse_smiles("CNC(=O)c1ccc(-c2ccccc2)cc1")));
}

TEST_CASE("single BB program executes to the block itself") {
  const auto &e = env();
  PostfixProgram prog;
  prog.push(PostfixToken::bb(e.block("acid_acetic")));
  prog.push(PostfixToken::end());
  const ExecutionResult result = execute(prog, e.ctx());
  REQUIRE(result.status == ExecStatus::Success);
  CHECK(canonical_form(*result.product) ==
        canonical_form(e.catalog.block(e.block("acid_acetic")).mol));
}

TEST_CASE("stack underflow reports through status") {
  const auto &e = env();
  PostfixProgram prog;
  prog.push(PostfixToken::bb(e.block("acid_acetic")));
  prog.push(PostfixToken::rxn(e.tmpl("amide")));
  prog.push(PostfixToken::end());
  const ExecutionResult result = execute(prog, e.ctx());
  CHECK(result.status == ExecStatus::StackUnderflow);
  CHECK(!result.product.has_value());
}

TEST_CASE("operand order matters for non-symmetric templates") {
  const auto &e = env();
  PostfixProgram ok;
  ok.push(PostfixToken::bb(e.block("acid_acetic")));
  ok.push(PostfixToken::bb(e.block("amine_methyl")));
  ok.push(PostfixToken::rxn(e.tmpl("amide")));
  ok.push(PostfixToken::end());
  PostfixProgram flipped;
  flipped.push(PostfixToken::bb(e.block("amine_methyl")));
  flipped.push(PostfixToken::bb(e.block("acid_acetic")));
  flipped.push(PostfixToken::rxn(e.tmpl("amide")));
  flipped.push(PostfixToken::end());
  const ExecutionResult r1 = execute(ok, e.ctx());
  const ExecutionResult r2 = execute(flipped, e.ctx());
  CHECK(r1.status == ExecStatus::Success);
  CHECK(r2.status == ExecStatus::NoMatch);
}

TEST_CASE("execution is deterministic") {
  const auto &e = env();
  const PostfixProgram prog = compile_tree(two_step_tree(), e.ctx());
  const ExecutionResult r1 = execute(prog, e.ctx());
  const ExecutionResult r2 = execute(prog, e.ctx());
  REQUIRE(r1.status == ExecStatus::Success);
  CHECK(canonical_form(*r1.product) == canonical_form(*r2.product));
  REQUIRE(r1.trace.size() == r2.trace.size());
  for (size_t i = 0; i < r1.trace.size(); ++i)
    CHECK(r1.trace[i].canonical == r2.trace[i].canonical);
}

TEST_CASE("multi-product reactions honor the recorded product rank") {
  const auto &e = env();
  for (int rank = 0; rank < 2; ++rank) {
    PostfixProgram prog;
    prog.push(PostfixToken::bb(e.block("ester_ethyl")));
    prog.push(PostfixToken::rxn(e.tmpl("ester_hyd"), rank));
    prog.push(PostfixToken::end());
    const ExecutionResult result = execute(prog, e.ctx());
    REQUIRE(result.status == ExecStatus::Success);
    const SynthesisTree tree = parse_program(prog, e.ctx());
    CHECK(tree.root.product_rank == rank);
    CHECK(compile_tree(tree, e.ctx()) == prog);
  }
  // the two ranks give different molecules
  PostfixProgram p0, p1;
  p0.push(PostfixToken::bb(e.block("ester_ethyl")));
  p0.push(PostfixToken::rxn(e.tmpl("ester_hyd"), 0));
  p0.push(PostfixToken::end());
  p1.push(PostfixToken::bb(e.block("ester_ethyl")));
  p1.push(PostfixToken::rxn(e.tmpl("ester_hyd"), 1));
  p1.push(PostfixToken::end());
  CHECK(canonical_form(*execute(p0, e.ctx()).product) !=
        canonical_form(*execute(p1, e.ctx()).product));
}

TEST_CASE("execute requires a finalized program and known ids") {
  const auto &e = env();
  PostfixProgram unfinished;
  unfinished.push(PostfixToken::bb(0));
  CHECK_THROWS_AS(execute(unfinished, e.ctx()), InvalidProgram);
  PostfixProgram bad_block;
  bad_block.push(PostfixToken::bb(9999));
  bad_block.push(PostfixToken::end());
  CHECK_THROWS_AS(execute(bad_block, e.ctx()), DataError);
}

TEST_CASE("programs serialize as one JSON line and back") {
  const auto &e = env();
  const PostfixProgram prog = compile_tree(two_step_tree(), e.ctx());
  const std::string line = prog.to_json();
  CHECK(line.find('\n') == std::string::npos);
  CHECK(PostfixProgram::from_json(line) == prog);
  // rank only appears when nonzero
  CHECK(line.find("rank") == std::string::npos);
  PostfixProgram ranked;
  ranked.push(PostfixToken::bb(e.block("ester_ethyl")));
  ranked.push(PostfixToken::rxn(e.tmpl("ester_hyd"), 1));
  ranked.push(PostfixToken::end());
  const std::string ranked_line = ranked.to_json();
  CHECK(ranked_line.find("rank") != std::string::npos);
  CHECK(PostfixProgram::from_json(ranked_line) == ranked);
  CHECK_THROWS_AS(PostfixProgram::from_json("{\"nope\":1}"), DataError);
}
