//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "fixtures.hpp"
#include "synvia/model.hpp"
#include "synvia/rng.hpp"
#include "synvia/training.hpp"

using namespace synvia;
using synvia::testing::env;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.d_model = 8;
  c.n_heads = 2;
  c.n_encoder_layers = 1;
  c.n_decoder_layers = 1;
  c.n_reaction_types = static_cast<int>(env().templates.size());
  c.max_seq_len = 8;
  c.ffn_mult = 2;
  c.seed = 5;
  return c;
}

ModelConfig desk_config() {
  ModelConfig c = tiny_config();
  c.d_model = 16;
  c.max_seq_len = 16;
  return c;
}

SampledPathway pathway_from_program(const PostfixProgram &prog) {
  const ExecutionResult result = execute(prog, env().ctx());
  REQUIRE(result.status == ExecStatus::Success);
  SampledPathway pw;
  pw.program = prog;
  pw.product = *result.product;
  return pw;
}

Batch small_batch() {
  const auto &e = env();
  PostfixProgram p1;
  p1.push(PostfixToken::bb(e.block("acid_acetic")));
  p1.push(PostfixToken::bb(e.block("amine_methyl")));
  p1.push(PostfixToken::rxn(e.tmpl("amide")));
  p1.push(PostfixToken::end());
  PostfixProgram p2;
  p2.push(PostfixToken::bb(e.block("ester_ethyl")));
  p2.push(PostfixToken::rxn(e.tmpl("ester_hyd")));
  p2.push(PostfixToken::end());
  return make_training_batch({pathway_from_program(p1), pathway_from_program(p2)},
                             e.catalog, tiny_config());
}

double loss_value(const ModelParams &params, const Batch &batch) {
  const ForwardResult out = forward(params, batch, false);
  return compute_loss(out, batch.seq)->value.data[0];
}

}  // namespace

TEST_CASE("gradient check across every parameter group") {
  ModelParams params = ModelParams::init(tiny_config());
  const Batch batch = small_batch();

  ForwardResult out = forward(params, batch, true);
  nn::Var loss = compute_loss(out, batch.seq);
  nn::backward(loss);

  const double h = 1e-4;
  double worst = 0;
  std::string worst_name;
  for (size_t e = 0; e < params.entries.size(); ++e) {
    const Tensor &grad = out.params[e]->grad;
    REQUIRE_MESSAGE(!grad.data.empty(),
                    "no gradient for " << params.entries[e].name);
    // check the largest-magnitude analytic entries of each group
    std::vector<size_t> order(grad.data.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return std::abs(grad.data[a]) > std::abs(grad.data[b]);
    });
    const size_t checks = std::min<size_t>(3, order.size());
    for (size_t c = 0; c < checks; ++c) {
      const size_t i = order[c];
      const double saved = params.entries[e].value.data[i];
      params.entries[e].value.data[i] = saved + h;
      const double up = loss_value(params, batch);
      params.entries[e].value.data[i] = saved - h;
      const double down = loss_value(params, batch);
      params.entries[e].value.data[i] = saved;
      const double fd = (up - down) / (2 * h);
      const double rel = std::abs(grad.data[i] - fd) /
                         std::max({std::abs(grad.data[i]), std::abs(fd), 1e-6});
      if (rel > worst) {
        worst = rel;
        worst_name = params.entries[e].name;
      }
    }
  }
  CHECK_MESSAGE(worst <= 1e-4, "worst group: " << worst_name);
}

TEST_CASE("uniform type logits give ln 3 type loss") {
  ModelParams params = ModelParams::init(tiny_config());
  // zero the type head's output layer -> identical logits everywhere
  params.value_of("head.type.w2") = Tensor::zeros({tiny_config().d_model, 3});
  params.value_of("head.type.b2") = Tensor::zeros({3});
  const Batch batch = small_batch();
  const ForwardResult out = forward(params, batch, false);
  LossBreakdown breakdown;
  compute_loss(out, batch.seq, &breakdown);
  CHECK(breakdown.type == doctest::Approx(std::log(3.0)).epsilon(1e-9));
}

TEST_CASE("loss decomposes exactly into its three terms") {
  ModelParams params = ModelParams::init(tiny_config());
  const Batch batch = small_batch();
  const ForwardResult out = forward(params, batch, false);
  LossBreakdown b;
  compute_loss(out, batch.seq, &b);
  CHECK(std::abs(b.total - (b.type + b.bb + b.rxn)) < 1e-12);
}

TEST_CASE("loss matches an independent scalar re-implementation") {
  // one sequence, two body tokens: [Start, BB, RXN] -> targets [BB, RXN, END]
  const auto &e = env();
  ModelParams params = ModelParams::init(tiny_config());
  PostfixProgram prog;
  prog.push(PostfixToken::bb(e.block("ester_ethyl")));
  prog.push(PostfixToken::rxn(e.tmpl("ester_hyd")));
  prog.push(PostfixToken::end());
  const Batch batch = make_training_batch({pathway_from_program(prog)}, e.catalog,
                                          tiny_config());
  const ForwardResult out = forward(params, batch, false);
  LossBreakdown b;
  compute_loss(out, batch.seq, &b);

  // oracle: recompute from the raw head outputs with plain scalar loops
  const Tensor &type_logits = out.type_logits->value;
  const Tensor &fp_probs = out.fp_probs->value;
  const Tensor &rxn_logits = out.rxn_logits->value;
  auto ce = [](const Tensor &logits, long long row, int target) {
    const long long C = logits.shape[1];
    double zmax = -1e300;
    for (long long j = 0; j < C; ++j)
      zmax = std::max(zmax, logits.data[static_cast<size_t>(row * C + j)]);
    double denom = 0;
    for (long long j = 0; j < C; ++j)
      denom += std::exp(logits.data[static_cast<size_t>(row * C + j)] - zmax);
    return zmax + std::log(denom) -
           logits.data[static_cast<size_t>(row * C + target)];
  };
  const double l_type = (ce(type_logits, 0, kTargetBB) + ce(type_logits, 1, kTargetRXN) +
                         ce(type_logits, 2, kTargetEND)) / 3.0;
  double l_bb = 0;
  for (int j = 0; j < 256; ++j) {
    const double p =
        std::clamp(fp_probs.data[static_cast<size_t>(j)], 1e-7, 1.0 - 1e-7);
    const double y = batch.seq.target_fp.data[static_cast<size_t>(j)];
    l_bb += -(y * std::log(p) + (1 - y) * std::log(1 - p));
  }
  const double l_rxn = ce(rxn_logits, 1, e.tmpl("ester_hyd"));
  CHECK(std::abs(b.type - l_type) < 1e-10);
  CHECK(std::abs(b.bb - l_bb) < 1e-10);
  CHECK(std::abs(b.rxn - l_rxn) < 1e-10);
  CHECK(std::abs(b.total - (l_type + l_bb + l_rxn)) < 1e-10);
}

TEST_CASE("causal masking: later tokens cannot affect earlier outputs") {
  const auto &e = env();
  ModelParams params = ModelParams::init(tiny_config());
  PostfixProgram a;
  a.push(PostfixToken::bb(e.block("acid_acetic")));
  a.push(PostfixToken::bb(e.block("amine_methyl")));
  a.push(PostfixToken::rxn(e.tmpl("amide")));
  a.push(PostfixToken::end());
  PostfixProgram b;
  b.push(PostfixToken::bb(e.block("acid_acetic")));
  b.push(PostfixToken::bb(e.block("amine_ethyl")));  // differs at position 2
  b.push(PostfixToken::rxn(e.tmpl("amide")));
  b.push(PostfixToken::end());
  // same encoder input for both: causality concerns token positions only
  const SampledPathway pa = pathway_from_program(a);
  SampledPathway pb;
  pb.program = b;
  pb.product = pa.product;
  const Batch ba = make_training_batch({pa}, e.catalog, tiny_config());
  const Batch bb = make_training_batch({pb}, e.catalog, tiny_config());
  const ForwardResult fa = forward(params, ba, false);
  const ForwardResult fb = forward(params, bb, false);
  // positions 0 and 1 see identical prefixes
  for (long long row : {0, 1}) {
    for (long long j = 0; j < 3; ++j) {
      const double da = fa.type_logits->value.data[static_cast<size_t>(row * 3 + j)];
      const double db = fb.type_logits->value.data[static_cast<size_t>(row * 3 + j)];
      CHECK(std::abs(da - db) <= 1e-6);
    }
  }
}

TEST_CASE("encoder output is permutation equivariant") {
  ModelParams params = ModelParams::init(tiny_config());
  const Molecule mol = parse_smiles("CC(=O)Oc1ccccc1");
  const GraphBatch g1 = make_graph_batch({&mol});
  const Tensor e1 = encode_graph(params, g1);

  // permute the molecule
  std::vector<int> perm(static_cast<size_t>(mol.atom_count()));
  for (int i = 0; i < mol.atom_count(); ++i)
    perm[static_cast<size_t>(i)] = (i + 3) % mol.atom_count();
  std::vector<Atom> atoms(static_cast<size_t>(mol.atom_count()));
  for (int i = 0; i < mol.atom_count(); ++i)
    atoms[static_cast<size_t>(perm[static_cast<size_t>(i)])] = mol.atom(i);
  std::vector<Bond> bonds;
  for (const Bond &b : mol.bonds())
    bonds.push_back({perm[static_cast<size_t>(b.a)], perm[static_cast<size_t>(b.b)],
                     b.order});
  const Molecule shuffled = sanitize(Molecule(atoms, bonds));
  const Tensor e2 = encode_graph(params, make_graph_batch({&shuffled}));

  const int d = params.config.d_model;
  for (int i = 0; i < mol.atom_count(); ++i) {
    const int pi = perm[static_cast<size_t>(i)];
    for (int j = 0; j < d; ++j) {
      const double v1 = e1.data[static_cast<size_t>(i * d + j)];
      const double v2 = e2.data[static_cast<size_t>(pi * d + j)];
      CHECK(std::abs(v1 - v2) < 1e-5);
    }
  }
}

TEST_CASE("batched encoding equals per-molecule encoding") {
  ModelParams params = ModelParams::init(tiny_config());
  const Molecule m1 = parse_smiles("CCO");
  const Molecule m2 = parse_smiles("c1ccccc1C(=O)O");
  const Tensor joint = encode_graph(params, make_graph_batch({&m1, &m2}));
  const Tensor solo1 = encode_graph(params, make_graph_batch({&m1}));
  const Tensor solo2 = encode_graph(params, make_graph_batch({&m2}));
  const int d = params.config.d_model;
  const int A = static_cast<int>(joint.shape[0]) / 2;
  for (int i = 0; i < m1.atom_count(); ++i)
    for (int j = 0; j < d; ++j)
      CHECK(std::abs(joint.data[static_cast<size_t>(i * d + j)] -
                     solo1.data[static_cast<size_t>(i * d + j)]) < 1e-5);
  for (int i = 0; i < m2.atom_count(); ++i)
    for (int j = 0; j < d; ++j)
      CHECK(std::abs(joint.data[static_cast<size_t>((A + i) * d + j)] -
                     solo2.data[static_cast<size_t>(i * d + j)]) < 1e-5);
}

TEST_CASE("token embeddings follow the additive structure") {
  const auto &e = env();
  ModelParams params = ModelParams::init(tiny_config());
  const int d = params.config.d_model;
  const Tensor pe = positional_encoding(params.config.max_seq_len, d);

  // [Start] alone: e_start + PE(0)
  const SeqBatch start_only =
      make_prefix_batch({PostfixToken::start()}, e.catalog, params.config);
  const Tensor h0 = embed_tokens(params, start_only);
  const Tensor &estart = params.value_of("e_start");
  for (int j = 0; j < d; ++j)
    CHECK(h0.data[static_cast<size_t>(j)] ==
          doctest::Approx(estart.data[static_cast<size_t>(j)] +
                          pe.data[static_cast<size_t>(j)]));

  // identical token at two positions differs exactly by the PE difference
  const PostfixToken bb = PostfixToken::bb(e.block("acid_acetic"));
  const SeqBatch prefix = make_prefix_batch(
      {PostfixToken::start(), bb, PostfixToken::bb(e.block("amine_methyl")), bb},
      e.catalog, params.config);
  const Tensor h = embed_tokens(params, prefix);
  for (int j = 0; j < d; ++j) {
    const double diff = h.data[static_cast<size_t>(1 * d + j)] -
                        h.data[static_cast<size_t>(3 * d + j)];
    const double pe_diff = pe.data[static_cast<size_t>(1 * d + j)] -
                           pe.data[static_cast<size_t>(3 * d + j)];
    CHECK(diff == doctest::Approx(pe_diff).epsilon(1e-9));
  }
}

TEST_CASE("overlong prefixes are rejected") {
  const auto &e = env();
  ModelParams params = ModelParams::init(tiny_config());
  std::vector<PostfixToken> prefix{PostfixToken::start()};
  for (int i = 0; i < params.config.max_seq_len; ++i)
    prefix.push_back(PostfixToken::bb(e.block("acid_acetic")));
  CHECK_THROWS_AS(make_prefix_batch(prefix, e.catalog, params.config),
                  SequenceTooLong);
}

TEST_CASE("fingerprint probabilities stay in (0,1) and logits finite at init") {
  ModelParams params = ModelParams::init(tiny_config());
  const Batch batch = small_batch();
  const ForwardResult out = forward(params, batch, false);
  CHECK(out.type_logits->value.all_finite());
  CHECK(out.rxn_logits->value.all_finite());
  for (double p : out.fp_probs->value.data) {
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
}

TEST_CASE("one training step from the same state is bit-identical") {
  const Batch batch = small_batch();
  AdamWConfig opt;
  ModelParams p1 = ModelParams::init(tiny_config());
  ModelParams p2 = ModelParams::init(tiny_config());
  train_step(p1, batch, opt);
  train_step(p2, batch, opt);
  REQUIRE(p1.entries.size() == p2.entries.size());
  for (size_t i = 0; i < p1.entries.size(); ++i) {
    CHECK(p1.entries[i].value.data == p2.entries[i].value.data);
    CHECK(p1.entries[i].m.data == p2.entries[i].m.data);
    CHECK(p1.entries[i].v.data == p2.entries[i].v.data);
  }
}

TEST_CASE("zero learning rate only touches the moment buffers") {
  const Batch batch = small_batch();
  AdamWConfig opt;
  opt.lr = 0.0;
  ModelParams params = ModelParams::init(tiny_config());
  const ModelParams before = params;
  train_step(params, batch, opt);
  bool moments_changed = false;
  for (size_t i = 0; i < params.entries.size(); ++i) {
    CHECK(params.entries[i].value.data == before.entries[i].value.data);
    if (params.entries[i].m.data != before.entries[i].m.data)
      moments_changed = true;
  }
  CHECK(moments_changed);
}

TEST_CASE("overfitting a single batch halves the loss in 200 steps") {
  const Batch batch = small_batch();
  ModelParams params = ModelParams::init(desk_config());
  AdamWConfig opt;
  opt.lr = 1e-3;
  double first = 0, last = 0;
  for (int step = 0; step < 200; ++step) {
    const LossBreakdown l = train_step(params, batch, opt);
    if (step == 0) first = l.total;
    last = l.total;
  }
  CHECK(last <= 0.5 * first);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  const auto path = std::string("/tmp/synvia_test_ckpt.svck");
  ModelParams params = ModelParams::init(tiny_config());
  // give it some non-trivial state
  train_step(params, small_batch(), AdamWConfig{});
  params.save(path);
  const ModelParams loaded = ModelParams::load(path);
  CHECK(loaded.config == params.config);
  CHECK(loaded.step == params.step);
  REQUIRE(loaded.entries.size() == params.entries.size());
  for (size_t i = 0; i < params.entries.size(); ++i) {
    CHECK(loaded.entries[i].name == params.entries[i].name);
    CHECK(loaded.entries[i].value.data == params.entries[i].value.data);
    CHECK(loaded.entries[i].m.data == params.entries[i].m.data);
    CHECK(loaded.entries[i].v.data == params.entries[i].v.data);
  }
  // forward outputs bit-identical
  const Batch batch = small_batch();
  const ForwardResult a = forward(params, batch, false);
  const ForwardResult b = forward(loaded, batch, false);
  CHECK(a.type_logits->value.data == b.type_logits->value.data);
  CHECK(a.fp_probs->value.data == b.fp_probs->value.data);
  std::remove(path.c_str());
}

TEST_CASE("truncated checkpoints are rejected") {
  const auto path = std::string("/tmp/synvia_test_ckpt_trunc.svck");
  ModelParams params = ModelParams::init(tiny_config());
  params.save(path);
  // truncate the file
  {
    std::ifstream in(path, std::ios::binary);
    std::string buf((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size() / 2));
  }
  CHECK_THROWS_AS(ModelParams::load(path), DataError);
  std::remove(path.c_str());
}

TEST_CASE("checkpoints from a different architecture are rejected") {
  const auto path = std::string("/tmp/synvia_test_ckpt_arch.svck");
  ModelParams params = ModelParams::init(tiny_config());
  params.save(path);
  const ModelParams loaded = ModelParams::load(path);
  // a caller expecting a different reaction vocabulary must notice
  ModelConfig other = tiny_config();
  other.n_reaction_types += 1;
  CHECK_FALSE(loaded.config == other);
  std::remove(path.c_str());
}

TEST_CASE("non-finite gradients abort the step") {
  ModelParams params = ModelParams::init(tiny_config());
  // poison one parameter
  params.value_of("head.type.b2").data[0] =
      std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(train_step(params, small_batch(), AdamWConfig{}),
                  NonFiniteGradient);
}
