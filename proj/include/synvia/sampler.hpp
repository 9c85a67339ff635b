//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SYNVIA_SAMPLER_HPP
#define SYNVIA_SAMPLER_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "synvia/synthesis.hpp"

namespace synvia {

/// Per-template, per-slot lists of eligible blocks (the map H), plus the
/// bookkeeping needed to answer which reactions are available for a molecule
/// (the function F, evaluated on demand against reactant patterns).
struct EligibilityIndex {
  // slots[t][s] = dense block ids whose molecule matches reactant s of
  // template t, restricted to the allowed block set.
  std::vector<std::vector<std::vector<int>>> slots;
  // Templates whose every slot has at least one eligible block.
  std::vector<int> fully_stocked;
  // (template, slot) pairs with no eligible block; warning-level.
  std::vector<std::pair<int, int>> empty_slots;
  // Blocks in the allowed set that match no slot of any template.
  std::vector<int> unmatched_blocks;

  bool empty() const { return slots.empty(); }
};

/// Builds the eligibility index over `catalog`, optionally restricted to a
/// subset of dense block ids (train/test splits).
EligibilityIndex build_eligibility_index(
    const Catalog &catalog, const std::vector<ReactionTemplate> &templates,
    const std::optional<std::vector<int>> &restrict_ids = std::nullopt);

struct SampledPathway {
  PostfixProgram program;
  Molecule product;
  // Number of reaction steps that consumed >= 2 stack intermediates.
  int convergent_steps = 0;
};

struct SamplerLimits {
  int max_reactions = 5;   // m_r
  int max_atoms = 80;      // m_a
  int retries_per_step = 16;
  int restarts = 8;
  // Probability of starting a fresh branch (pushing a full operand set on
  // top of a nonempty stack). The literal one-pass scheme keeps the stack at
  // depth one forever, so convergent pathways need occasional fresh starts.
  double fresh_branch_prob = 0.25;
};

/// Draws one valid (program, product) pair. Deterministic per seed.
/// Throws DeadEnd when the retry/restart budget is exhausted.
SampledPathway sample_pathway(const EligibilityIndex &index,
                              const ExecutionContext &ctx,
                              const SamplerLimits &limits, uint64_t seed);

}  // namespace synvia

#endif  // SYNVIA_SAMPLER_HPP
