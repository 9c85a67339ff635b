//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "synvia/training.hpp"

#include <ostream>

#include "synvia/rng.hpp"

namespace synvia {

SampledPathway pathway_for_index(const EligibilityIndex &index,
                                 const ExecutionContext &ctx,
                                 const SamplerLimits &limits, int max_seq_len,
                                 uint64_t seed, long long idx) {
  const uint64_t base = derive_seed(seed, static_cast<uint64_t>(idx));
  for (int retry = 0; retry < 64; ++retry) {
    SampledPathway pw =
        sample_pathway(index, ctx, limits, derive_seed(base, static_cast<uint64_t>(retry)));
    if (1 + static_cast<int>(pw.program.body().size()) <= max_seq_len) return pw;
  }
  throw DeadEnd("could not sample a pathway within max_seq_len");
}

Batch make_training_batch(const std::vector<SampledPathway> &pathways,
                          const Catalog &catalog, const ModelConfig &config) {
  std::vector<const Molecule *> mols;
  std::vector<const PostfixProgram *> programs;
  mols.reserve(pathways.size());
  programs.reserve(pathways.size());
  for (const SampledPathway &p : pathways) {
    mols.push_back(&p.product);
    programs.push_back(&p.program);
  }
  Batch batch;
  batch.graph = make_graph_batch(mols);
  batch.seq = make_seq_batch(programs, catalog, config);
  return batch;
}

TrainResult train_model(ModelParams &params, const EligibilityIndex &index,
                        const ExecutionContext &ctx, const TrainOptions &options,
                        std::ostream *log) {
  TrainResult result;
  for (int step = 0; step < options.steps; ++step) {
    std::vector<SampledPathway> pathways;
    pathways.reserve(static_cast<size_t>(options.batch_size));
    for (int j = 0; j < options.batch_size; ++j) {
      long long idx = static_cast<long long>(step) * options.batch_size + j;
      if (options.pool > 0) idx %= options.pool;
      pathways.push_back(pathway_for_index(index, ctx, options.limits,
                                           params.config.max_seq_len,
                                           options.seed, idx));
    }
    const Batch batch = make_training_batch(pathways, ctx.catalog, params.config);
    const LossBreakdown losses = train_step(params, batch, options.adamw);
    if (step == 0) result.first = losses;
    result.last = losses;
    if (options.log_every > 0 &&
        (step % options.log_every == 0 || step + 1 == options.steps)) {
      result.losses.push_back(losses.total);
      if (log)
        (*log) << "step=" << step << " loss=" << losses.total
               << " type=" << losses.type << " bb=" << losses.bb
               << " rxn=" << losses.rxn << "\n";
    }
  }
  return result;
}

}  // namespace synvia
