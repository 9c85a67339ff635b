//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "synvia/sampler.hpp"

#include <algorithm>

#include "synvia/rng.hpp"

namespace synvia {

EligibilityIndex build_eligibility_index(
    const Catalog &catalog, const std::vector<ReactionTemplate> &templates,
    const std::optional<std::vector<int>> &restrict_ids) {
  if (catalog.empty()) throw DataError("eligibility index over an empty catalog");
  std::vector<int> allowed;
  if (restrict_ids) {
    allowed = *restrict_ids;
    std::sort(allowed.begin(), allowed.end());
    allowed.erase(std::unique(allowed.begin(), allowed.end()), allowed.end());
    for (int id : allowed)
      if (id < 0 || id >= catalog.size())
        throw DataError("restricted block id out of range: " + std::to_string(id));
  } else {
    allowed.resize(static_cast<size_t>(catalog.size()));
    for (int i = 0; i < catalog.size(); ++i) allowed[static_cast<size_t>(i)] = i;
  }

  EligibilityIndex index;
  index.slots.resize(templates.size());
  std::vector<char> matched(static_cast<size_t>(catalog.size()), 0);
  for (size_t t = 0; t < templates.size(); ++t) {
    index.slots[t].resize(templates[t].reactants.size());
    for (size_t s = 0; s < templates[t].reactants.size(); ++s) {
      for (int b : allowed) {
        if (pattern_matches(templates[t].reactants[s], catalog.block(b).mol)) {
          index.slots[t][s].push_back(b);
          matched[static_cast<size_t>(b)] = 1;
        }
      }
      if (index.slots[t][s].empty())
        index.empty_slots.emplace_back(static_cast<int>(t), static_cast<int>(s));
    }
    bool stocked = true;
    for (const auto &slot : index.slots[t])
      if (slot.empty()) stocked = false;
    if (stocked) index.fully_stocked.push_back(static_cast<int>(t));
  }
  for (int b : allowed)
    if (!matched[static_cast<size_t>(b)]) index.unmatched_blocks.push_back(b);
  return index;
}

namespace {

struct StepChoice {
  int tmpl = -1;
  int consume = 0;              // stack items bound to the low slots
  std::vector<int> fresh;       // block ids for slots consume..arity-1
};

// Templates applicable to the current stack configuration. `consume_depth`
// decides how many stack items bind (normal: min(arity, depth); fresh
// branch: 0). Bound stack items must match their slots; the remaining slots
// need nonempty eligibility lists.
std::vector<int> feasible_templates(const EligibilityIndex &index,
                                    const ExecutionContext &ctx,
                                    const std::vector<Molecule> &stack,
                                    bool fresh_branch) {
  std::vector<int> out;
  const int depth = static_cast<int>(stack.size());
  for (size_t t = 0; t < ctx.templates.size(); ++t) {
    const ReactionTemplate &tmpl = ctx.templates[t];
    const int consume = fresh_branch ? 0 : std::min(tmpl.arity, depth);
    bool ok = true;
    for (int s = 0; s < consume; ++s) {
      const Molecule &operand =
          stack[static_cast<size_t>(depth - consume + s)];
      if (!pattern_matches(tmpl.reactants[static_cast<size_t>(s)], operand)) {
        ok = false;
        break;
      }
    }
    for (int s = consume; ok && s < tmpl.arity; ++s)
      if (index.slots[t][static_cast<size_t>(s)].empty()) ok = false;
    if (ok) out.push_back(static_cast<int>(t));
  }
  return out;
}

}  // namespace

SampledPathway sample_pathway(const EligibilityIndex &index,
                              const ExecutionContext &ctx,
                              const SamplerLimits &limits, uint64_t seed) {
  if (limits.max_reactions < 1 || limits.max_atoms < 1)
    throw Error("sampler limits must be positive");
  if (index.empty() || ctx.templates.empty())
    throw DataError("sampler requires a nonempty eligibility index");

  Rng rng(seed);
  for (int restart = 0; restart <= limits.restarts; ++restart) {
    // A postfix body is the concatenation of one self-contained segment per
    // stack entry (bottom to top); body_start marks where an entry's segment
    // begins so stranded branches can be trimmed away at finalization.
    struct StackEntry {
      Molecule mol;
      size_t body_start = 0;
      int convergent = 0;
    };
    std::vector<PostfixToken> body;
    std::vector<StackEntry> stack;
    int rxn_count = 0;
    bool failed = false;

    auto stack_mols = [&stack]() {
      std::vector<Molecule> mols;
      mols.reserve(stack.size());
      for (const StackEntry &e : stack) mols.push_back(e.mol);
      return mols;
    };

    while (rxn_count < limits.max_reactions &&
           (stack.empty() ? 0 : stack.back().mol.atom_count()) < limits.max_atoms) {
      bool committed = false;
      for (int attempt = 0; attempt < limits.retries_per_step; ++attempt) {
        const bool fresh_branch =
            !stack.empty() && rng.uniform() < limits.fresh_branch_prob;
        const std::vector<int> feasible =
            feasible_templates(index, ctx, stack_mols(), fresh_branch);
        if (feasible.empty()) continue;
        StepChoice choice;
        choice.tmpl = feasible[rng.uniform_int(feasible.size())];
        const ReactionTemplate &tmpl =
            ctx.templates[static_cast<size_t>(choice.tmpl)];
        choice.consume =
            fresh_branch ? 0
                         : std::min(tmpl.arity, static_cast<int>(stack.size()));
        for (int s = choice.consume; s < tmpl.arity; ++s) {
          const auto &slot =
              index.slots[static_cast<size_t>(choice.tmpl)][static_cast<size_t>(s)];
          choice.fresh.push_back(slot[rng.uniform_int(slot.size())]);
        }
        // Operands: bound stack suffix, then fresh blocks in slot order.
        std::vector<Molecule> operands;
        for (int s = 0; s < choice.consume; ++s)
          operands.push_back(
              stack[stack.size() - static_cast<size_t>(choice.consume) +
                    static_cast<size_t>(s)]
                  .mol);
        for (int b : choice.fresh)
          operands.push_back(ctx.catalog.block(b).mol);
        const ApplyResult applied = apply_template(tmpl, operands);
        if (applied.products.empty()) continue;

        StackEntry entry;
        entry.convergent = choice.consume >= 2 ? 1 : 0;
        if (choice.consume > 0) {
          const StackEntry &first =
              stack[stack.size() - static_cast<size_t>(choice.consume)];
          entry.body_start = first.body_start;
          for (int s = 0; s < choice.consume; ++s)
            entry.convergent += stack[stack.size() - static_cast<size_t>(choice.consume) +
                                      static_cast<size_t>(s)]
                                    .convergent;
        } else {
          entry.body_start = body.size();
        }
        for (int b : choice.fresh) body.push_back(PostfixToken::bb(b));
        body.push_back(PostfixToken::rxn(choice.tmpl, 0));
        for (int s = 0; s < choice.consume; ++s) stack.pop_back();
        entry.mol = applied.products.front();
        stack.push_back(std::move(entry));
        ++rxn_count;
        committed = true;
        break;
      }
      if (!committed) {
        failed = true;
        break;
      }
    }
    if (failed || rxn_count == 0) continue;  // restart
    // Keep only the top entry's segment: stranded siblings never feed the
    // final product and would leave the stack deeper than one.
    PostfixProgram prog;
    for (size_t i = stack.back().body_start; i < body.size(); ++i)
      prog.push(body[i]);
    prog.push(PostfixToken::end());
    SampledPathway out;
    out.program = std::move(prog);
    out.product = stack.back().mol;
    out.convergent_steps = stack.back().convergent;
    return out;
  }
  throw DeadEnd("pathway sampling exhausted its restart budget");
}

}  // namespace synvia
