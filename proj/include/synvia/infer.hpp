//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SYNVIA_INFER_HPP
#define SYNVIA_INFER_HPP

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "synvia/bbindex.hpp"
#include "synvia/model.hpp"
#include "synvia/synthesis.hpp"

namespace synvia {

struct DecodeOptions {
  int max_len = 16;           // tokens including Start; must be <= max_seq_len
  int samples_per_input = 5;
  double temperature = 1.0;   // 0 = greedy everywhere
  int top_k = 1;              // building-block candidates per BB token
  bool branch_product_rank = false;  // sample among candidate products
  bool argmax_reaction = false;      // argmax instead of sampling Eq-style
  uint64_t seed = 0;
};

struct DecodeOutcome {
  ExecutionResult exec;
  PostfixProgram program;
};

/// One autoregressive decode interleaved with stack execution. Failures are
/// conveyed through exec.status, never thrown.
DecodeOutcome decode_once(const ModelParams &params, const BlockIndex &index,
                          const ExecutionContext &ctx, const Molecule &input,
                          const DecodeOptions &opts, uint64_t seed);

struct Analog {
  PostfixProgram program;
  Molecule product;
  std::string canonical;
  double sim_morgan = 0;
  double sim_scaffold = 0;
  // Filled by the external scoring hook when configured; NaN otherwise.
  double external_score = std::numeric_limits<double>::quiet_NaN();
};

struct ProjectionResult {
  std::vector<Analog> analogs;              // deduplicated, best similarity first
  std::vector<ExecStatus> attempt_statuses; // one per decode attempt
};

/// samples_per_input independent decodes with derived seeds; successes are
/// ranked by Morgan-4096 Tanimoto similarity to the input, deduplicated by
/// product canonical form.
ProjectionResult project(const ModelParams &params, const BlockIndex &index,
                         const ExecutionContext &ctx, const Molecule &input,
                         const DecodeOptions &opts);

/// Hit expansion: n decodes around `hit`. When `score_cmd` is nonempty it is
/// run once per unique analog with the canonical text on stdin and must
/// print one decimal score.
ProjectionResult expand_hit(const ModelParams &params, const BlockIndex &index,
                            const ExecutionContext &ctx, const Molecule &hit,
                            int n, const DecodeOptions &opts,
                            const std::string &score_cmd = "");

}  // namespace synvia

#endif  // SYNVIA_INFER_HPP
