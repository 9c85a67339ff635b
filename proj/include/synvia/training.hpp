//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SYNVIA_TRAINING_HPP
#define SYNVIA_TRAINING_HPP

#include <iosfwd>
#include <vector>

#include "synvia/model.hpp"
#include "synvia/sampler.hpp"

namespace synvia {

struct TrainOptions {
  int steps = 5000;
  int batch_size = 16;
  uint64_t seed = 0;
  // pool > 0 cycles over a fixed set of pathway indices, so the model sees
  // the same pathways repeatedly; pool == 0 samples fresh data every step.
  int pool = 0;
  SamplerLimits limits;
  AdamWConfig adamw;
  int log_every = 100;
};

/// Pathway for pool index `idx`, deterministic in (seed, idx). Pathways whose
/// programs do not fit max_seq_len are resampled with derived retry seeds.
SampledPathway pathway_for_index(const EligibilityIndex &index,
                                 const ExecutionContext &ctx,
                                 const SamplerLimits &limits, int max_seq_len,
                                 uint64_t seed, long long idx);

Batch make_training_batch(const std::vector<SampledPathway> &pathways,
                          const Catalog &catalog, const ModelConfig &config);

struct TrainResult {
  LossBreakdown first;
  LossBreakdown last;
  std::vector<double> losses;  // one total per logged step
};

/// On-the-fly training: each step samples `batch_size` pathways (from the
/// pool or fresh), builds a teacher-forcing batch, and applies one AdamW
/// step. Deterministic per seed.
TrainResult train_model(ModelParams &params, const EligibilityIndex &index,
                        const ExecutionContext &ctx, const TrainOptions &options,
                        std::ostream *log = nullptr);

}  // namespace synvia

#endif  // SYNVIA_TRAINING_HPP
