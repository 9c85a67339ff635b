//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "synvia/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_set>

#include <Eigen/Dense>

namespace synvia::nn {

namespace {

std::atomic<long long> g_next_id{1};

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatrixRM>;
using MapCM = Eigen::Map<const MatrixRM>;

MapCM as_matrix(const Tensor &t) {
  if (t.ndim() != 2) throw ShapeMismatch("expected a 2-D tensor");
  return MapCM(t.data.data(), t.shape[0], t.shape[1]);
}
MapM as_matrix(Tensor &t) {
  if (t.ndim() != 2) throw ShapeMismatch("expected a 2-D tensor");
  return MapM(t.data.data(), t.shape[0], t.shape[1]);
}

Var make_node(Tensor value, std::vector<Var> parents,
              std::function<void(Node &)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  bool grad = false;
  for (const Var &p : parents) grad = grad || p->requires_grad;
  node->requires_grad = grad;
  if (grad) {
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
  }
  return node;
}

}  // namespace

Var make_leaf(Tensor value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return node;
}

void backward(const Var &root) {
  if (root->value.numel() != 1) throw ShapeMismatch("backward root must be scalar");
  // Collect reachable nodes.
  std::vector<Node *> order;
  std::unordered_set<Node *> seen;
  std::vector<Node *> stack{root.get()};
  seen.insert(root.get());
  while (!stack.empty()) {
    Node *n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const Var &p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](Node *a, Node *b) { return a->id > b->id; });
  root->ensure_grad();
  root->grad.data[0] = 1.0;
  for (Node *n : order)
    if (n->backward_fn && !n->grad.data.empty()) n->backward_fn(*n);
}

Var matmul(const Var &a, const Var &b) {
  if (a->value.ndim() != 2 || b->value.ndim() != 2 ||
      a->value.shape[1] != b->value.shape[0])
    throw ShapeMismatch("matmul shape mismatch");
  Tensor out = Tensor::zeros({a->value.shape[0], b->value.shape[1]});
  as_matrix(out) = as_matrix(a->value) * as_matrix(b->value);
  Var av = a, bv = b;
  return make_node(std::move(out), {a, b}, [av, bv](Node &n) {
    const auto dc = as_matrix(n.grad);
    if (av->requires_grad) {
      av->ensure_grad();
      as_matrix(av->grad) += dc * as_matrix(bv->value).transpose();
    }
    if (bv->requires_grad) {
      bv->ensure_grad();
      as_matrix(bv->grad) += as_matrix(av->value).transpose() * dc;
    }
  });
}

Var add(const Var &a, const Var &b) {
  if (!a->value.same_shape(b->value)) throw ShapeMismatch("add shape mismatch");
  Tensor out = a->value;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b->value.data[i];
  Var av = a, bv = b;
  return make_node(std::move(out), {a, b}, [av, bv](Node &n) {
    for (const Var &p : {av, bv}) {
      if (!p->requires_grad) continue;
      p->ensure_grad();
      for (size_t i = 0; i < n.grad.data.size(); ++i)
        p->grad.data[i] += n.grad.data[i];
    }
  });
}

Var add_bias(const Var &a, const Var &bias) {
  if (a->value.ndim() != 2 || bias->value.ndim() != 1 ||
      a->value.shape[1] != bias->value.shape[0])
    throw ShapeMismatch("add_bias shape mismatch");
  Tensor out = a->value;
  const long long m = out.shape[0], k = out.shape[1];
  for (long long i = 0; i < m; ++i)
    for (long long j = 0; j < k; ++j)
      out.data[static_cast<size_t>(i * k + j)] += bias->value.data[static_cast<size_t>(j)];
  Var av = a, bv = bias;
  return make_node(std::move(out), {a, bias}, [av, bv, m, k](Node &n) {
    if (av->requires_grad) {
      av->ensure_grad();
      for (size_t i = 0; i < n.grad.data.size(); ++i) av->grad.data[i] += n.grad.data[i];
    }
    if (bv->requires_grad) {
      bv->ensure_grad();
      for (long long i = 0; i < m; ++i)
        for (long long j = 0; j < k; ++j)
          bv->grad.data[static_cast<size_t>(j)] +=
              n.grad.data[static_cast<size_t>(i * k + j)];
    }
  });
}

Var add_const(const Var &a, const Tensor &c) {
  if (!a->value.same_shape(c)) throw ShapeMismatch("add_const shape mismatch");
  Tensor out = a->value;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += c.data[i];
  Var av = a;
  return make_node(std::move(out), {a}, [av](Node &n) {
    av->ensure_grad();
    for (size_t i = 0; i < n.grad.data.size(); ++i) av->grad.data[i] += n.grad.data[i];
  });
}

Var scale(const Var &a, double s) {
  Tensor out = a->value;
  for (double &v : out.data) v *= s;
  Var av = a;
  return make_node(std::move(out), {a}, [av, s](Node &n) {
    av->ensure_grad();
    for (size_t i = 0; i < n.grad.data.size(); ++i)
      av->grad.data[i] += s * n.grad.data[i];
  });
}

Var relu(const Var &a) {
  Tensor out = a->value;
  for (double &v : out.data) v = v > 0 ? v : 0.0;
  Var av = a;
  return make_node(std::move(out), {a}, [av](Node &n) {
    av->ensure_grad();
    for (size_t i = 0; i < n.grad.data.size(); ++i)
      if (av->value.data[i] > 0) av->grad.data[i] += n.grad.data[i];
  });
}

Var sigmoid(const Var &a) {
  Tensor out = a->value;
  for (double &v : out.data) v = 1.0 / (1.0 + std::exp(-v));
  Var av = a;
  auto node = make_node(std::move(out), {a}, nullptr);
  if (node->requires_grad) {
    Node *raw = node.get();
    node->backward_fn = [av, raw](Node &n) {
      av->ensure_grad();
      for (size_t i = 0; i < n.grad.data.size(); ++i) {
        const double y = raw->value.data[i];
        av->grad.data[i] += n.grad.data[i] * y * (1.0 - y);
      }
    };
  }
  return node;
}

Var layer_norm(const Var &x, const Var &gamma, const Var &beta, double eps) {
  if (x->value.ndim() != 2) throw ShapeMismatch("layer_norm expects 2-D input");
  const long long m = x->value.shape[0], k = x->value.shape[1];
  if (gamma->value.numel() != k || beta->value.numel() != k)
    throw ShapeMismatch("layer_norm parameter shape mismatch");
  Tensor out = Tensor::zeros({m, k});
  auto stats = std::make_shared<Tensor>(Tensor::zeros({m, 2}));  // mean, inv_std
  for (long long i = 0; i < m; ++i) {
    double mean = 0;
    for (long long j = 0; j < k; ++j) mean += x->value.data[static_cast<size_t>(i * k + j)];
    mean /= static_cast<double>(k);
    double var = 0;
    for (long long j = 0; j < k; ++j) {
      const double d = x->value.data[static_cast<size_t>(i * k + j)] - mean;
      var += d * d;
    }
    var /= static_cast<double>(k);
    const double inv_std = 1.0 / std::sqrt(var + eps);
    stats->data[static_cast<size_t>(i * 2)] = mean;
    stats->data[static_cast<size_t>(i * 2 + 1)] = inv_std;
    for (long long j = 0; j < k; ++j) {
      const double xhat =
          (x->value.data[static_cast<size_t>(i * k + j)] - mean) * inv_std;
      out.data[static_cast<size_t>(i * k + j)] =
          xhat * gamma->value.data[static_cast<size_t>(j)] +
          beta->value.data[static_cast<size_t>(j)];
    }
  }
  Var xv = x, gv = gamma, bv = beta;
  return make_node(std::move(out), {x, gamma, beta}, [xv, gv, bv, stats, m, k](Node &n) {
    if (gv->requires_grad) gv->ensure_grad();
    if (bv->requires_grad) bv->ensure_grad();
    if (xv->requires_grad) xv->ensure_grad();
    for (long long i = 0; i < m; ++i) {
      const double mean = stats->data[static_cast<size_t>(i * 2)];
      const double inv_std = stats->data[static_cast<size_t>(i * 2 + 1)];
      double sum_gdy = 0, sum_gdy_xhat = 0;
      for (long long j = 0; j < k; ++j) {
        const double xhat =
            (xv->value.data[static_cast<size_t>(i * k + j)] - mean) * inv_std;
        const double dy = n.grad.data[static_cast<size_t>(i * k + j)];
        const double g = gv->value.data[static_cast<size_t>(j)];
        if (gv->requires_grad)
          gv->grad.data[static_cast<size_t>(j)] += dy * xhat;
        if (bv->requires_grad) bv->grad.data[static_cast<size_t>(j)] += dy;
        sum_gdy += g * dy;
        sum_gdy_xhat += g * dy * xhat;
      }
      if (!xv->requires_grad) continue;
      const double inv_k = 1.0 / static_cast<double>(k);
      for (long long j = 0; j < k; ++j) {
        const double xhat =
            (xv->value.data[static_cast<size_t>(i * k + j)] - mean) * inv_std;
        const double dy = n.grad.data[static_cast<size_t>(i * k + j)];
        const double g = gv->value.data[static_cast<size_t>(j)];
        xv->grad.data[static_cast<size_t>(i * k + j)] +=
            inv_std * (g * dy - inv_k * sum_gdy - xhat * inv_k * sum_gdy_xhat);
      }
    }
  });
}

Var gather_rows(const Var &table, const std::vector<int> &idx) {
  if (table->value.ndim() != 2) throw ShapeMismatch("gather_rows expects a 2-D table");
  const long long d = table->value.shape[1];
  Tensor out = Tensor::zeros({static_cast<long long>(idx.size()), d});
  for (size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0) continue;
    if (idx[i] >= table->value.shape[0]) throw ShapeMismatch("gather index out of range");
    for (long long j = 0; j < d; ++j)
      out.data[i * static_cast<size_t>(d) + static_cast<size_t>(j)] =
          table->value.data[static_cast<size_t>(idx[i]) * static_cast<size_t>(d) +
                            static_cast<size_t>(j)];
  }
  Var tv = table;
  auto idx_copy = std::make_shared<std::vector<int>>(idx);
  return make_node(std::move(out), {table}, [tv, idx_copy, d](Node &n) {
    tv->ensure_grad();
    for (size_t i = 0; i < idx_copy->size(); ++i) {
      const int row = (*idx_copy)[i];
      if (row < 0) continue;
      for (long long j = 0; j < d; ++j)
        tv->grad.data[static_cast<size_t>(row) * static_cast<size_t>(d) +
                      static_cast<size_t>(j)] +=
            n.grad.data[i * static_cast<size_t>(d) + static_cast<size_t>(j)];
    }
  });
}

Var gather_bias(const Var &table, const std::vector<int> &codes, int batch,
                int tokens) {
  const long long H = table->value.shape[0];
  const long long C = table->value.shape[1];
  const long long A = tokens;
  if (static_cast<long long>(codes.size()) != batch * A * A)
    throw ShapeMismatch("gather_bias codes size mismatch");
  Tensor out = Tensor::zeros({batch, H, A, A});
  for (long long b = 0; b < batch; ++b)
    for (long long h = 0; h < H; ++h)
      for (long long i = 0; i < A; ++i)
        for (long long j = 0; j < A; ++j) {
          const int code = codes[static_cast<size_t>((b * A + i) * A + j)];
          if (code < 0 || code >= C) throw ShapeMismatch("bond code out of range");
          out.data[static_cast<size_t>(((b * H + h) * A + i) * A + j)] =
              table->value.data[static_cast<size_t>(h * C + code)];
        }
  Var tv = table;
  auto codes_copy = std::make_shared<std::vector<int>>(codes);
  return make_node(std::move(out), {table}, [tv, codes_copy, batch, H, C, A](Node &n) {
    tv->ensure_grad();
    for (long long b = 0; b < batch; ++b)
      for (long long h = 0; h < H; ++h)
        for (long long i = 0; i < A; ++i)
          for (long long j = 0; j < A; ++j) {
            const int code = (*codes_copy)[static_cast<size_t>((b * A + i) * A + j)];
            tv->grad.data[static_cast<size_t>(h * C + code)] +=
                n.grad.data[static_cast<size_t>(((b * H + h) * A + i) * A + j)];
          }
  });
}

Var multihead_attention(const Var &q, const Var &k, const Var &v, const Var &bias,
                        const Tensor &mask, int batch, int heads) {
  const long long d = q->value.shape[1];
  if (d % heads != 0) throw ShapeMismatch("d_model not divisible by heads");
  const long long dh = d / heads;
  const long long Lq = q->value.shape[0] / batch;
  const long long Lk = k->value.shape[0] / batch;
  if (q->value.shape[0] != batch * Lq || k->value.shape[0] != batch * Lk ||
      !k->value.same_shape(v->value))
    throw ShapeMismatch("attention shape mismatch");
  if (mask.numel() != batch * Lq * Lk) throw ShapeMismatch("attention mask mismatch");
  const double scl = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor out = Tensor::zeros({batch * Lq, d});
  auto probs = std::make_shared<Tensor>(Tensor::zeros({batch, heads, Lq, Lk}));

  auto head_block = [dh](const Tensor &t, long long b, long long L, long long h,
                         long long row) -> const double * {
    return t.data.data() + static_cast<size_t>((b * L + row) * t.shape[1] + h * dh);
  };

  for (long long b = 0; b < batch; ++b) {
    for (long long h = 0; h < heads; ++h) {
      for (long long i = 0; i < Lq; ++i) {
        // scores
        std::vector<double> s(static_cast<size_t>(Lk));
        const double *qi = head_block(q->value, b, Lq, h, i);
        double smax = -1e300;
        for (long long j = 0; j < Lk; ++j) {
          const double *kj = head_block(k->value, b, Lk, h, j);
          double dot = 0;
          for (long long c = 0; c < dh; ++c) dot += qi[c] * kj[c];
          dot *= scl;
          if (bias)
            dot += bias->value.data[static_cast<size_t>(((b * heads + h) * Lq + i) * Lk + j)];
          dot += mask.data[static_cast<size_t>((b * Lq + i) * Lk + j)];
          s[static_cast<size_t>(j)] = dot;
          smax = std::max(smax, dot);
        }
        double denom = 0;
        for (long long j = 0; j < Lk; ++j) {
          const double e = std::exp(s[static_cast<size_t>(j)] - smax);
          s[static_cast<size_t>(j)] = e;
          denom += e;
        }
        double *pi = probs->data.data() +
                     static_cast<size_t>(((b * heads + h) * Lq + i) * Lk);
        for (long long j = 0; j < Lk; ++j) pi[j] = s[static_cast<size_t>(j)] / denom;
        // output
        double *oi = out.data.data() + static_cast<size_t>((b * Lq + i) * d + h * dh);
        for (long long j = 0; j < Lk; ++j) {
          const double *vj = head_block(v->value, b, Lk, h, j);
          const double p = pi[j];
          if (p == 0.0) continue;
          for (long long c = 0; c < dh; ++c) oi[c] += p * vj[c];
        }
      }
    }
  }

  Var qv = q, kv = k, vv = v, bv = bias;
  std::vector<Var> parents{q, k, v};
  if (bias) parents.push_back(bias);
  return make_node(std::move(out), std::move(parents),
                   [qv, kv, vv, bv, probs, batch, heads, dh, Lq, Lk, d, scl](Node &n) {
    if (qv->requires_grad) qv->ensure_grad();
    if (kv->requires_grad) kv->ensure_grad();
    if (vv->requires_grad) vv->ensure_grad();
    if (bv && bv->requires_grad) bv->ensure_grad();
    auto block = [dh](Tensor &t, long long b, long long L, long long h,
                      long long row) -> double * {
      return t.data.data() + static_cast<size_t>((b * L + row) * t.shape[1] + h * dh);
    };
    auto cblock = [dh](const Tensor &t, long long b, long long L, long long h,
                       long long row) -> const double * {
      return t.data.data() + static_cast<size_t>((b * L + row) * t.shape[1] + h * dh);
    };
    for (long long b = 0; b < batch; ++b) {
      for (long long h = 0; h < heads; ++h) {
        for (long long i = 0; i < Lq; ++i) {
          const double *pi = probs->data.data() +
                             static_cast<size_t>(((b * heads + h) * Lq + i) * Lk);
          const double *doi =
              n.grad.data.data() + static_cast<size_t>((b * Lq + i) * d + h * dh);
          // dP[j] = dO . V_j ; dV_j += P[j] * dO
          std::vector<double> dp(static_cast<size_t>(Lk), 0.0);
          double dp_dot_p = 0;
          for (long long j = 0; j < Lk; ++j) {
            const double *vj = cblock(vv->value, b, Lk, h, j);
            double acc = 0;
            for (long long c = 0; c < dh; ++c) acc += doi[c] * vj[c];
            dp[static_cast<size_t>(j)] = acc;
            dp_dot_p += acc * pi[j];
            if (vv->requires_grad && pi[j] != 0.0) {
              double *dvj = block(vv->grad, b, Lk, h, j);
              for (long long c = 0; c < dh; ++c) dvj[c] += pi[j] * doi[c];
            }
          }
          // dS[j] = P[j] * (dP[j] - sum(dP*P))
          const double *qi = cblock(qv->value, b, Lq, h, i);
          for (long long j = 0; j < Lk; ++j) {
            const double ds = pi[j] * (dp[static_cast<size_t>(j)] - dp_dot_p);
            if (ds == 0.0) continue;
            if (bv && bv->requires_grad)
              bv->grad.data[static_cast<size_t>(((b * heads + h) * Lq + i) * Lk + j)] += ds;
            const double *kj = cblock(kv->value, b, Lk, h, j);
            if (qv->requires_grad) {
              double *dqi = block(qv->grad, b, Lq, h, i);
              for (long long c = 0; c < dh; ++c) dqi[c] += scl * ds * kj[c];
            }
            if (kv->requires_grad) {
              double *dkj = block(kv->grad, b, Lk, h, j);
              for (long long c = 0; c < dh; ++c) dkj[c] += scl * ds * qi[c];
            }
          }
        }
      }
    }
  });
}

Var select_rows_3way(const std::vector<int> &kind, const Var &a, const Var &b,
                     const Var &c) {
  const long long m = static_cast<long long>(kind.size());
  const long long d = a->value.shape[1];
  if (!a->value.same_shape(b->value) || !a->value.same_shape(c->value) ||
      a->value.shape[0] != m)
    throw ShapeMismatch("select_rows_3way shape mismatch");
  Tensor out = Tensor::zeros({m, d});
  const Tensor *sources[3] = {&a->value, &b->value, &c->value};
  for (long long i = 0; i < m; ++i) {
    const int kk = kind[static_cast<size_t>(i)];
    if (kk < 0 || kk > 2) continue;
    for (long long j = 0; j < d; ++j)
      out.data[static_cast<size_t>(i * d + j)] =
          sources[kk]->data[static_cast<size_t>(i * d + j)];
  }
  Var av = a, bv = b, cv = c;
  auto kind_copy = std::make_shared<std::vector<int>>(kind);
  return make_node(std::move(out), {a, b, c}, [av, bv, cv, kind_copy, m, d](Node &n) {
    Var targets[3] = {av, bv, cv};
    for (long long i = 0; i < m; ++i) {
      const int kk = (*kind_copy)[static_cast<size_t>(i)];
      if (kk < 0 || kk > 2) continue;
      Var &t = targets[kk];
      if (!t->requires_grad) continue;
      t->ensure_grad();
      for (long long j = 0; j < d; ++j)
        t->grad.data[static_cast<size_t>(i * d + j)] +=
            n.grad.data[static_cast<size_t>(i * d + j)];
    }
  });
}

Var softmax_xent_sum(const Var &logits, const std::vector<int> &targets,
                     const std::vector<double> &weights) {
  const long long m = logits->value.shape[0];
  const long long C = logits->value.shape[1];
  if (static_cast<long long>(targets.size()) != m ||
      static_cast<long long>(weights.size()) != m)
    throw ShapeMismatch("xent target/weight size mismatch");
  auto probs = std::make_shared<Tensor>(Tensor::zeros({m, C}));
  double loss = 0;
  for (long long i = 0; i < m; ++i) {
    if (weights[static_cast<size_t>(i)] == 0.0) continue;
    const double *zi = logits->value.data.data() + static_cast<size_t>(i * C);
    double zmax = zi[0];
    for (long long j = 1; j < C; ++j) zmax = std::max(zmax, zi[j]);
    double denom = 0;
    for (long long j = 0; j < C; ++j) denom += std::exp(zi[j] - zmax);
    const double lse = zmax + std::log(denom);
    const int t = targets[static_cast<size_t>(i)];
    if (t < 0 || t >= C) throw ShapeMismatch("xent target out of range");
    loss += weights[static_cast<size_t>(i)] * (lse - zi[t]);
    double *pi = probs->data.data() + static_cast<size_t>(i * C);
    for (long long j = 0; j < C; ++j) pi[j] = std::exp(zi[j] - lse);
  }
  Var lv = logits;
  auto t_copy = std::make_shared<std::vector<int>>(targets);
  auto w_copy = std::make_shared<std::vector<double>>(weights);
  return make_node(Tensor::scalar(loss), {logits},
                   [lv, probs, t_copy, w_copy, m, C](Node &n) {
    lv->ensure_grad();
    const double g = n.grad.data[0];
    for (long long i = 0; i < m; ++i) {
      const double w = (*w_copy)[static_cast<size_t>(i)];
      if (w == 0.0) continue;
      const double *pi = probs->data.data() + static_cast<size_t>(i * C);
      double *dzi = lv->grad.data.data() + static_cast<size_t>(i * C);
      const int t = (*t_copy)[static_cast<size_t>(i)];
      for (long long j = 0; j < C; ++j)
        dzi[j] += g * w * (pi[j] - (j == t ? 1.0 : 0.0));
    }
  });
}

Var bce_sum(const Var &probs, const Tensor &targets,
            const std::vector<double> &weights, double clip) {
  const long long m = probs->value.shape[0];
  const long long C = probs->value.shape[1];
  if (!probs->value.same_shape(targets) ||
      static_cast<long long>(weights.size()) != m)
    throw ShapeMismatch("bce shape mismatch");
  double loss = 0;
  for (long long i = 0; i < m; ++i) {
    const double w = weights[static_cast<size_t>(i)];
    if (w == 0.0) continue;
    for (long long j = 0; j < C; ++j) {
      const double p =
          std::clamp(probs->value.data[static_cast<size_t>(i * C + j)], clip, 1.0 - clip);
      const double y = targets.data[static_cast<size_t>(i * C + j)];
      loss += -w * (y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    }
  }
  Var pv = probs;
  auto t_copy = std::make_shared<Tensor>(targets);
  auto w_copy = std::make_shared<std::vector<double>>(weights);
  return make_node(Tensor::scalar(loss), {probs},
                   [pv, t_copy, w_copy, m, C, clip](Node &n) {
    pv->ensure_grad();
    const double g = n.grad.data[0];
    for (long long i = 0; i < m; ++i) {
      const double w = (*w_copy)[static_cast<size_t>(i)];
      if (w == 0.0) continue;
      for (long long j = 0; j < C; ++j) {
        const double raw = pv->value.data[static_cast<size_t>(i * C + j)];
        if (raw <= clip || raw >= 1.0 - clip) continue;  // clipped: flat
        const double y = t_copy->data[static_cast<size_t>(i * C + j)];
        pv->grad.data[static_cast<size_t>(i * C + j)] +=
            g * w * (-y / raw + (1.0 - y) / (1.0 - raw));
      }
    }
  });
}

std::vector<int> argmax_rows(const Tensor &t) {
  const long long m = t.shape[0], C = t.shape[1];
  std::vector<int> out(static_cast<size_t>(m), 0);
  for (long long i = 0; i < m; ++i) {
    const double *row = t.data.data() + static_cast<size_t>(i * C);
    int best = 0;
    for (long long j = 1; j < C; ++j)
      if (row[j] > row[best]) best = static_cast<int>(j);
    out[static_cast<size_t>(i)] = best;
  }
  return out;
}

}  // namespace synvia::nn

namespace synvia {
bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}
}  // namespace synvia
