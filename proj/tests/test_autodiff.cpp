//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <cmath>
#include <functional>

#include "synvia/autodiff.hpp"
#include "synvia/rng.hpp"

using namespace synvia;
using nn::Var;

namespace {

Tensor random_tensor(std::vector<long long> shape, Rng &rng, double scale = 0.5) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double &v : t.data) v = scale * rng.normal();
  return t;
}

// Scalar loss = sum of fixed random weights times output entries.
double weighted_sum(const Tensor &out, const Tensor &weights) {
  double s = 0;
  for (size_t i = 0; i < out.data.size(); ++i) s += out.data[i] * weights.data[i];
  return s;
}

// Central-difference gradient of f at x[i].
double central_diff(const std::function<double(double)> &f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

}  // namespace

TEST_CASE("matmul forward and backward agree with finite differences") {
  Rng rng(1);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({4, 2}, rng);
  const Tensor w = random_tensor({3, 2}, rng, 1.0);

  auto loss_value = [&](const Tensor &at, const Tensor &bt) {
    Var av = nn::make_leaf(at, false);
    Var bv = nn::make_leaf(bt, false);
    return weighted_sum(nn::matmul(av, bv)->value, w);
  };

  Var av = nn::make_leaf(a, true);
  Var bv = nn::make_leaf(b, true);
  Var out = nn::matmul(av, bv);
  // loss = sum w .* out, gradient of out is w
  Var loss = nn::make_leaf(Tensor::scalar(weighted_sum(out->value, w)), false);
  // drive backward manually through the op: seed out with w
  out->ensure_grad();
  out->grad = w;
  out->backward_fn(*out);
  (void)loss;

  for (size_t i = 0; i < a.data.size(); ++i) {
    const double fd = central_diff(
        [&](double x) {
          Tensor at = a;
          at.data[i] = x;
          return loss_value(at, b);
        },
        a.data[i], 1e-5);
    CHECK(rel_err(av->grad.data[i], fd) < 1e-6);
  }
  for (size_t i = 0; i < b.data.size(); ++i) {
    const double fd = central_diff(
        [&](double x) {
          Tensor bt = b;
          bt.data[i] = x;
          return loss_value(a, bt);
        },
        b.data[i], 1e-5);
    CHECK(rel_err(bv->grad.data[i], fd) < 1e-6);
  }
}

TEST_CASE("layer_norm backward agrees with finite differences") {
  Rng rng(2);
  Tensor x = random_tensor({2, 6}, rng);
  Tensor g = random_tensor({6}, rng, 0.3);
  for (double &v : g.data) v += 1.0;
  Tensor b = random_tensor({6}, rng, 0.1);
  const Tensor w = random_tensor({2, 6}, rng, 1.0);

  auto loss_value = [&](const Tensor &xt, const Tensor &gt, const Tensor &bt) {
    return weighted_sum(
        nn::layer_norm(nn::make_leaf(xt, false), nn::make_leaf(gt, false),
                       nn::make_leaf(bt, false))
            ->value,
        w);
  };

  Var xv = nn::make_leaf(x, true);
  Var gv = nn::make_leaf(g, true);
  Var bv = nn::make_leaf(b, true);
  Var out = nn::layer_norm(xv, gv, bv);
  out->ensure_grad();
  out->grad = w;
  out->backward_fn(*out);

  for (size_t i = 0; i < x.data.size(); ++i) {
    const double fd = central_diff(
        [&](double v) {
          Tensor xt = x;
          xt.data[i] = v;
          return loss_value(xt, g, b);
        },
        x.data[i], 1e-5);
    CHECK(rel_err(xv->grad.data[i], fd) < 1e-5);
  }
  for (size_t i = 0; i < g.data.size(); ++i) {
    const double fd = central_diff(
        [&](double v) {
          Tensor gt = g;
          gt.data[i] = v;
          return loss_value(x, gt, b);
        },
        g.data[i], 1e-5);
    CHECK(rel_err(gv->grad.data[i], fd) < 1e-5);
  }
}

TEST_CASE("attention backward agrees with finite differences") {
  Rng rng(3);
  const int B = 2, H = 2, Lq = 3, Lk = 4, d = 4;
  Tensor q = random_tensor({B * Lq, d}, rng);
  Tensor k = random_tensor({B * Lk, d}, rng);
  Tensor v = random_tensor({B * Lk, d}, rng);
  Tensor bias = random_tensor({B, H, Lq, Lk}, rng, 0.2);
  Tensor mask = Tensor::zeros({B, Lq, Lk});
  mask.data[3] = -1e30;  // mask one key for one query
  const Tensor w = random_tensor({B * Lq, d}, rng, 1.0);

  auto loss_value = [&](const Tensor &qt, const Tensor &kt, const Tensor &vt,
                        const Tensor &biast) {
    return weighted_sum(
        nn::multihead_attention(nn::make_leaf(qt, false), nn::make_leaf(kt, false),
                                nn::make_leaf(vt, false),
                                nn::make_leaf(biast, false), mask, B, H)
            ->value,
        w);
  };

  Var qv = nn::make_leaf(q, true);
  Var kv = nn::make_leaf(k, true);
  Var vv = nn::make_leaf(v, true);
  Var biasv = nn::make_leaf(bias, true);
  Var out = nn::multihead_attention(qv, kv, vv, biasv, mask, B, H);
  out->ensure_grad();
  out->grad = w;
  out->backward_fn(*out);

  Rng pick(10);
  auto check_some = [&](Var node, Tensor &base, auto rebuild) {
    for (int t = 0; t < 12; ++t) {
      const size_t i = pick.uniform_int(base.data.size());
      const double fd = central_diff(
          [&](double x) {
            Tensor bt = base;
            bt.data[i] = x;
            return rebuild(bt);
          },
          base.data[i], 1e-5);
      CHECK(rel_err(node->grad.data[i], fd) < 1e-5);
    }
  };
  check_some(qv, q, [&](const Tensor &t) { return loss_value(t, k, v, bias); });
  check_some(kv, k, [&](const Tensor &t) { return loss_value(q, t, v, bias); });
  check_some(vv, v, [&](const Tensor &t) { return loss_value(q, k, t, bias); });
  check_some(biasv, bias, [&](const Tensor &t) { return loss_value(q, k, v, t); });
}

TEST_CASE("softmax cross-entropy matches the analytic value and gradient") {
  Rng rng(4);
  Tensor logits = random_tensor({3, 4}, rng, 1.0);
  const std::vector<int> targets = {1, 3, 0};
  const std::vector<double> weights = {1.0, 0.0, 1.0};

  Var lv = nn::make_leaf(logits, true);
  Var loss = nn::softmax_xent_sum(lv, targets, weights);
  nn::backward(loss);

  // analytic value
  double expected = 0;
  for (int i : {0, 2}) {
    double zmax = -1e300, denom = 0;
    for (int j = 0; j < 4; ++j)
      zmax = std::max(zmax, logits.data[static_cast<size_t>(i * 4 + j)]);
    for (int j = 0; j < 4; ++j)
      denom += std::exp(logits.data[static_cast<size_t>(i * 4 + j)] - zmax);
    expected += zmax + std::log(denom) -
                logits.data[static_cast<size_t>(i * 4 + targets[static_cast<size_t>(i)])];
  }
  CHECK(loss->value.data[0] == doctest::Approx(expected).epsilon(1e-12));

  for (size_t i = 0; i < logits.data.size(); ++i) {
    const double fd = central_diff(
        [&](double x) {
          Tensor lt = logits;
          lt.data[i] = x;
          Var l2 = nn::make_leaf(lt, false);
          return nn::softmax_xent_sum(l2, targets, weights)->value.data[0];
        },
        logits.data[i], 1e-5);
    CHECK(rel_err(lv->grad.data[i], fd) < 1e-5);
  }
}

TEST_CASE("bce sum clips and differentiates") {
  Tensor probs = Tensor::zeros({1, 4});
  probs.data = {0.3, 0.99, 1.0, 0.0};  // last two hit the clip
  Tensor targets = Tensor::zeros({1, 4});
  targets.data = {1.0, 1.0, 1.0, 0.0};
  Var pv = nn::make_leaf(probs, true);
  Var loss = nn::bce_sum(pv, targets, {1.0});
  nn::backward(loss);
  const double expected = -(std::log(0.3) + std::log(0.99) +
                            std::log(1.0 - 1e-7) + std::log(1.0 - 1e-7));
  CHECK(loss->value.data[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(pv->grad.data[0] == doctest::Approx(-1.0 / 0.3));
  CHECK(pv->grad.data[2] == 0.0);  // clipped region is flat
  CHECK(pv->grad.data[3] == 0.0);
}

TEST_CASE("gather and select route gradients to the right rows") {
  Rng rng(5);
  Tensor table = random_tensor({4, 3}, rng);
  Var tv = nn::make_leaf(table, true);
  Var rows = nn::gather_rows(tv, {2, -1, 2});
  CHECK(rows->value.data[3] == 0.0);  // -1 gives a zero row
  rows->ensure_grad();
  for (double &g : rows->grad.data) g = 1.0;
  rows->backward_fn(*rows);
  // row 2 selected twice -> gradient 2 per entry
  for (int j = 0; j < 3; ++j)
    CHECK(tv->grad.data[static_cast<size_t>(2 * 3 + j)] == doctest::Approx(2.0));
}

TEST_CASE("backward traverses shared subgraphs once") {
  // f = (x + x) scaled: df/dx = 2s
  Tensor x = Tensor::scalar(3.0);
  x.shape = {1, 1};
  Var xv = nn::make_leaf(x, true);
  Var sum = nn::add(xv, xv);
  Var loss = nn::scale(sum, 0.5);
  nn::backward(loss);
  CHECK(xv->grad.data[0] == doctest::Approx(1.0));
}
