//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SYNVIA_AUTODIFF_HPP
#define SYNVIA_AUTODIFF_HPP

#include <functional>
#include <memory>
#include <vector>

#include "synvia/tensor.hpp"

namespace synvia::nn {

// Reverse-mode tape over a small fixed op set. Nodes form a DAG through
// parent pointers; backward() walks reachable nodes in reverse creation
// order. Forward-only use (inference) never allocates gradients.
struct Node {
  Tensor value;
  Tensor grad;  // allocated lazily during backward
  bool requires_grad = false;
  long long id = 0;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node &)> backward_fn;

  void ensure_grad() {
    if (grad.data.empty()) grad = Tensor::zeros(value.shape);
  }
};

using Var = std::shared_ptr<Node>;

Var make_leaf(Tensor value, bool requires_grad);

/// Seeds d(root)/d(root) = 1 and accumulates gradients into every reachable
/// node with requires_grad. Root must be a scalar.
void backward(const Var &root);

// --- primitive ops -------------------------------------------------------

Var matmul(const Var &a, const Var &b);
Var add(const Var &a, const Var &b);                 // same shape
Var add_bias(const Var &a, const Var &bias);         // [m,n] + [n]
Var add_const(const Var &a, const Tensor &c);        // same shape constant
Var scale(const Var &a, double s);
Var relu(const Var &a);
Var sigmoid(const Var &a);
Var layer_norm(const Var &x, const Var &gamma, const Var &beta, double eps = 1e-5);

/// out[i] = table[idx[i]]; idx < 0 yields a zero row.
Var gather_rows(const Var &table, const std::vector<int> &idx);

/// out[b,h,i,j] = table[h, codes[(b*A+i)*A+j]] for an [H,C] table.
Var gather_bias(const Var &table, const std::vector<int> &codes, int batch, int tokens);

/// Fused multi-head scaled-dot-product attention.
/// q: [B*Lq, d], k/v: [B*Lk, d]; bias (optional): [B,H,Lq,Lk]; mask:
/// additive [B,Lq,Lk] constant (0 or large negative). Returns [B*Lq, d].
Var multihead_attention(const Var &q, const Var &k, const Var &v, const Var &bias,
                        const Tensor &mask, int batch, int heads);

/// Row r of the output comes from a (kind 0), b (kind 1) or c (kind 2);
/// kind < 0 gives a zero row.
Var select_rows_3way(const std::vector<int> &kind, const Var &a, const Var &b,
                     const Var &c);

/// Sum over rows of weights[i] * cross_entropy(logits[i], targets[i]).
/// Rows with weight 0 are skipped; targets may be -1 there.
Var softmax_xent_sum(const Var &logits, const std::vector<int> &targets,
                     const std::vector<double> &weights);

/// Sum over rows of weights[i] * sum_j BCE(clip(probs[i,j]), targets[i,j]).
/// Probabilities are clipped into [clip, 1-clip]; the clipped region
/// contributes zero gradient.
Var bce_sum(const Var &probs, const Tensor &targets,
            const std::vector<double> &weights, double clip = 1e-7);

/// argmax over the last dim of each row (ties to the lowest index).
std::vector<int> argmax_rows(const Tensor &t);

}  // namespace synvia::nn

#endif  // SYNVIA_AUTODIFF_HPP
