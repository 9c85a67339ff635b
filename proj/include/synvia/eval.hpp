//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SYNVIA_EVAL_HPP
#define SYNVIA_EVAL_HPP

#include <string>
#include <vector>

#include "synvia/infer.hpp"

namespace synvia {

struct SimilarityScores {
  double morgan = 0;
  double scaffold = 0;
  // Gobbi pharmacophore similarity needs a pharmacophore feature model that
  // is outside this engine; it is reported as unsupported, never substituted.
  const char *gobbi = "unsupported";
};

/// Morgan-4096 Tanimoto and scaffold similarity of two molecules.
SimilarityScores similarity_scores(const Molecule &a, const Molecule &b);

struct EvalRow {
  std::string name;
  std::string input_canonical;
  bool success = false;
  bool reconstructed = false;
  double sim_morgan = 0;   // best analog; 0 on failure
  double sim_scaffold = 0;
  std::string best_program;  // JSON, empty on failure
  std::vector<ExecStatus> statuses;
};

struct EvalReport {
  double success_rate = 0;
  double reconstruction_rate = 0;
  double mean_sim_morgan = 0;
  double mean_sim_scaffold = 0;
  std::string sim_gobbi = "unsupported";
  std::vector<EvalRow> rows;
  // Config fingerprint for reproducibility.
  uint64_t seed = 0;
  int samples_per_input = 0;
  double temperature = 0;
  int top_k = 0;
  int scaffold_fp_bits = 4096;
  std::string notes;

  std::string to_json() const;
  std::string to_table() const;
  std::string to_csv() const;
};

struct EvalOptions {
  DecodeOptions decode;
  int workers = 1;
  std::string notes;  // e.g. which split produced the dataset
};

/// Projects every dataset molecule and aggregates the benchmark metrics:
/// success = any finalized valid program, reconstruction = any product
/// canonically equal to the input, similarities from the best product and 0
/// for failures. Deterministic for fixed seeds, independent of workers.
EvalReport evaluate(const ModelParams &params, const BlockIndex &index,
                    const ExecutionContext &ctx,
                    const std::vector<std::pair<std::string, Molecule>> &dataset,
                    const EvalOptions &options);

}  // namespace synvia

#endif  // SYNVIA_EVAL_HPP
