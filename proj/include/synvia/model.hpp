//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SYNVIA_MODEL_HPP
#define SYNVIA_MODEL_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "synvia/autodiff.hpp"
#include "synvia/catalog.hpp"
#include "synvia/synthesis.hpp"
#include "synvia/tensor.hpp"

namespace synvia {

struct ModelConfig {
  int d_model = 64;
  int n_heads = 4;
  int n_encoder_layers = 2;
  int n_decoder_layers = 2;
  int n_reaction_types = 0;
  int max_seq_len = 16;
  int fingerprint_dim = 256;
  int ffn_mult = 2;  // hidden width of FFN and fingerprint MLPs, x d_model
  uint64_t seed = 0;

  void validate() const;
  bool operator==(const ModelConfig &o) const;
};

// Atom vocabulary for the encoder embedding table: element x hydrogen count
// (clamped to 4) x aromatic flag x charge (clamped to [-1,1]).
inline constexpr int kAtomVocabSize = 11 * 5 * 2 * 3;
int atom_invariant_id(const Atom &a);

// Bond codes for the attention bias table: 0 none, 1..3 orders, 4 aromatic.
inline constexpr int kBondCodeCount = 5;

struct GraphBatch {
  int batch = 0;
  int max_atoms = 0;
  std::vector<int> invariants;   // [B*A], -1 on padding
  std::vector<int> bond_codes;   // [B*A*A], 0 on padding pairs
  std::vector<double> atom_mask; // [B*A], 1 real / 0 pad
};
GraphBatch make_graph_batch(const std::vector<const Molecule *> &mols);

// Teacher-forcing layout: inputs are [Start, body...]; the target at
// position i is token i+1, with a virtual End target at the last position.
struct SeqBatch {
  int batch = 0;
  int max_len = 0;
  std::vector<int> kind;         // [B*L] input kind: 0 start, 1 bb, 2 rxn, -1 pad
  Tensor fp;                     // [B*L, fp_dim] fingerprints of BB inputs
  std::vector<int> rxn_id;       // [B*L], -1 when not a reaction token
  std::vector<double> valid;     // [B*L] positions that carry a target
  std::vector<int> target_kind;  // [B*L]: 0 BB, 1 RXN, 2 END, -1 pad
  Tensor target_fp;              // [B*L, fp_dim]
  std::vector<int> target_rxn;   // [B*L], -1 when not a reaction target
};
inline constexpr int kTargetBB = 0;
inline constexpr int kTargetRXN = 1;
inline constexpr int kTargetEND = 2;

SeqBatch make_seq_batch(const std::vector<const PostfixProgram *> &programs,
                        const Catalog &catalog, const ModelConfig &config);
/// Inference-time batch of one prefix, without targets.
SeqBatch make_prefix_batch(const std::vector<PostfixToken> &prefix,
                           const Catalog &catalog, const ModelConfig &config);

struct Batch {
  GraphBatch graph;
  SeqBatch seq;
};

/// All learnable tensors plus AdamW moments, in fixed declaration order.
/// Values (and moments) are kept exactly representable as 32-bit floats so
/// checkpoints round-trip bit-exactly.
class ModelParams {
public:
  ModelConfig config;
  struct Entry {
    std::string name;
    Tensor value;
    Tensor m;
    Tensor v;
  };
  std::vector<Entry> entries;
  long long step = 0;

  static ModelParams init(const ModelConfig &config);

  int find(const std::string &name) const;
  Tensor &value_of(const std::string &name);

  void save(const std::string &path) const;
  static ModelParams load(const std::string &path);
};

Tensor positional_encoding(int max_len, int d_model);

struct ForwardResult {
  nn::Var atom_embeddings;  // [B*A, d]
  nn::Var type_logits;      // [B*L, 3]
  nn::Var fp_probs;         // [B*L, fp_dim], sigmoid outputs
  nn::Var rxn_logits;       // [B*L, n_reaction_types]
  std::vector<nn::Var> params;  // leaves aligned with ModelParams::entries
};

/// Full encoder/decoder/heads pass. Set `requires_grad` only for training.
ForwardResult forward(const ModelParams &params, const Batch &batch,
                      bool requires_grad = false);

/// Per-atom embeddings only (value, no gradients).
Tensor encode_graph(const ModelParams &params, const GraphBatch &graph);

/// Initial token embeddings h0 (value, no gradients): PE(i) + source row.
Tensor embed_tokens(const ModelParams &params, const SeqBatch &seq);

struct LossBreakdown {
  double total = 0, type = 0, bb = 0, rxn = 0;
};

/// L = L_type + L_bb + L_rxn. L_type averages over all target positions,
/// L_bb sums binary cross-entropies over fingerprint bits and averages over
/// BB positions, L_rxn averages over reaction positions. Empty BB/RXN sets
/// contribute zero. Throws on a batch with no valid positions.
nn::Var compute_loss(const ForwardResult &out, const SeqBatch &seq,
                     LossBreakdown *breakdown = nullptr);

struct AdamWConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// One optimizer step on `batch`. Deterministic; throws NonFiniteGradient
/// and leaves parameters untouched when gradients are not finite.
LossBreakdown train_step(ModelParams &params, const Batch &batch,
                         const AdamWConfig &opt);

/// Teacher-forced next-token-type accuracy over the batch's valid positions.
double type_accuracy(const ModelParams &params, const Batch &batch);

}  // namespace synvia

#endif  // SYNVIA_MODEL_HPP
