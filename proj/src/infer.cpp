//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "synvia/infer.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "synvia/rng.hpp"

namespace synvia {

namespace {

int sample_categorical(Rng &rng, const std::vector<double> &logits,
                       double temperature) {
  if (temperature <= 0.0) {
    int best = 0;
    for (size_t i = 1; i < logits.size(); ++i)
      if (logits[i] > logits[static_cast<size_t>(best)]) best = static_cast<int>(i);
    return best;
  }
  double zmax = logits[0];
  for (double z : logits) zmax = std::max(zmax, z);
  std::vector<double> p(logits.size());
  double total = 0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp((logits[i] - zmax) / temperature);
    total += p[i];
  }
  const double target = rng.uniform() * total;
  double acc = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (acc >= target) return static_cast<int>(i);
  }
  return static_cast<int>(p.size()) - 1;
}

std::vector<double> row_of(const Tensor &t, long long row) {
  const long long C = t.shape[1];
  std::vector<double> out(static_cast<size_t>(C));
  for (long long j = 0; j < C; ++j)
    out[static_cast<size_t>(j)] = t.data[static_cast<size_t>(row * C + j)];
  return out;
}

}  // namespace

DecodeOutcome decode_once(const ModelParams &params, const BlockIndex &index,
                          const ExecutionContext &ctx, const Molecule &input,
                          const DecodeOptions &opts, uint64_t seed) {
  if (opts.max_len > params.config.max_seq_len)
    throw SequenceTooLong("max_len exceeds the model's max_seq_len");
  Rng rng(seed);
  DecodeOutcome out;
  std::vector<PostfixToken> prefix{PostfixToken::start()};
  std::vector<Molecule> stack;

  Batch batch;
  batch.graph = make_graph_batch({&input});

  int step = 0;
  for (;;) {
    batch.seq = make_prefix_batch(prefix, ctx.catalog, params.config);
    const ForwardResult fwd = forward(params, batch, false);
    const long long last = static_cast<long long>(prefix.size()) - 1;

    const std::vector<double> type_logits = row_of(fwd.type_logits->value, last);
    const int kind = sample_categorical(rng, type_logits, opts.temperature);

    if (kind == kTargetEND) {
      if (stack.empty()) {
        out.exec.status = ExecStatus::StackUnderflow;
        return out;
      }
      out.program.push(PostfixToken::end());
      out.exec.status = ExecStatus::Success;
      out.exec.product = stack.back();
      return out;
    }
    if (static_cast<int>(prefix.size()) >= opts.max_len) {
      out.exec.status = ExecStatus::LengthLimit;
      return out;
    }

    if (kind == kTargetBB) {
      const std::vector<double> fp_pred = row_of(fwd.fp_probs->value, last);
      const auto candidates = index.nearest(fp_pred, opts.top_k);
      int pick = 0;
      if (candidates.size() > 1 && opts.temperature > 0.0) {
        std::vector<double> neg_dist(candidates.size());
        for (size_t i = 0; i < candidates.size(); ++i)
          neg_dist[i] = -candidates[i].second;
        pick = sample_categorical(rng, neg_dist, opts.temperature);
      }
      const int block = candidates[static_cast<size_t>(pick)].first;
      stack.push_back(ctx.catalog.block(block).mol);
      const PostfixToken token = PostfixToken::bb(block);
      prefix.push_back(token);
      out.program.push(token);
      out.exec.trace.push_back({step++, "push", token,
                                static_cast<int>(stack.size()),
                                ctx.catalog.block(block).canon.text});
      continue;
    }

    // Reaction token.
    const std::vector<double> rxn_logits = row_of(fwd.rxn_logits->value, last);
    const int r = sample_categorical(rng, rxn_logits,
                                     opts.argmax_reaction ? 0.0 : opts.temperature);
    const ReactionTemplate &tmpl = ctx.templates[static_cast<size_t>(r)];
    if (static_cast<int>(stack.size()) < tmpl.arity) {
      out.exec.status = ExecStatus::StackUnderflow;
      return out;
    }
    std::vector<Molecule> operands(stack.end() - tmpl.arity, stack.end());
    const ApplyResult applied = apply_template(tmpl, operands);
    if (applied.products.empty()) {
      out.exec.status = applied.match_count > 0 ? ExecStatus::ValenceFail
                                                : ExecStatus::NoMatch;
      return out;
    }
    int rank = 0;
    if (opts.branch_product_rank && applied.products.size() > 1)
      rank = static_cast<int>(rng.uniform_int(applied.products.size()));
    stack.erase(stack.end() - tmpl.arity, stack.end());
    stack.push_back(applied.products[static_cast<size_t>(rank)]);
    const PostfixToken token = PostfixToken::rxn(r, rank);
    prefix.push_back(token);
    out.program.push(token);
    out.exec.trace.push_back({step++, "apply", token,
                              static_cast<int>(stack.size()),
                              canonical_form(stack.back()).text});
  }
}

namespace {

std::optional<double> run_score_hook(const std::string &cmd,
                                     const std::string &canonical) {
  // The hook reads the molecule from stdin and prints one decimal score.
  const std::string tmp =
      "/tmp/synvia_score_" + std::to_string(::getpid()) + ".smi";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << canonical << "\n";
  }
  const std::string full = cmd + " < " + tmp;
  FILE *pipe = popen(full.c_str(), "r");
  if (!pipe) return std::nullopt;
  char buffer[256];
  std::string text;
  while (fgets(buffer, sizeof(buffer), pipe)) text += buffer;
  const int rc = pclose(pipe);
  std::remove(tmp.c_str());
  if (rc != 0) return std::nullopt;
  try {
    return std::stod(text);
  } catch (...) {
    return std::nullopt;
  }
}

ProjectionResult run_decodes(const ModelParams &params, const BlockIndex &index,
                             const ExecutionContext &ctx, const Molecule &input,
                             int attempts, const DecodeOptions &opts) {
  ProjectionResult result;
  const FingerprintBits input_fp = morgan_fingerprint(input, 2, 4096);
  std::vector<Analog> analogs;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    DecodeOutcome outcome = decode_once(params, index, ctx, input, opts,
                                        derive_seed(opts.seed, static_cast<uint64_t>(attempt)));
    result.attempt_statuses.push_back(outcome.exec.status);
    if (outcome.exec.status != ExecStatus::Success) continue;
    Analog analog;
    analog.program = std::move(outcome.program);
    analog.product = std::move(*outcome.exec.product);
    analog.canonical = canonical_form(analog.product).text;
    analog.sim_morgan =
        tanimoto(input_fp, morgan_fingerprint(analog.product, 2, 4096));
    analog.sim_scaffold = scaffold_similarity(input, analog.product);
    analogs.push_back(std::move(analog));
  }
  std::sort(analogs.begin(), analogs.end(), [](const Analog &a, const Analog &b) {
    if (a.sim_morgan != b.sim_morgan) return a.sim_morgan > b.sim_morgan;
    return a.canonical < b.canonical;
  });
  for (Analog &a : analogs) {
    if (!result.analogs.empty() && result.analogs.back().canonical == a.canonical)
      continue;
    const bool dup =
        std::any_of(result.analogs.begin(), result.analogs.end(),
                    [&](const Analog &x) { return x.canonical == a.canonical; });
    if (!dup) result.analogs.push_back(std::move(a));
  }
  return result;
}

}  // namespace

ProjectionResult project(const ModelParams &params, const BlockIndex &index,
                         const ExecutionContext &ctx, const Molecule &input,
                         const DecodeOptions &opts) {
  return run_decodes(params, index, ctx, input, opts.samples_per_input, opts);
}

ProjectionResult expand_hit(const ModelParams &params, const BlockIndex &index,
                            const ExecutionContext &ctx, const Molecule &hit,
                            int n, const DecodeOptions &opts,
                            const std::string &score_cmd) {
  if (n < 1) throw Error("expand_hit requires n >= 1");
  ProjectionResult result = run_decodes(params, index, ctx, hit, n, opts);
  if (!score_cmd.empty()) {
    for (Analog &a : result.analogs) {
      const auto score = run_score_hook(score_cmd, a.canonical);
      if (score) a.external_score = *score;
    }
  }
  return result;
}

}  // namespace synvia
