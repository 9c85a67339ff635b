//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SYNVIA_TENSOR_HPP
#define SYNVIA_TENSOR_HPP

#include <cstdint>
#include <initializer_list>
#include <vector>

#include "synvia/errors.hpp"

namespace synvia {

/// Dense row-major tensor of doubles. All model arithmetic is 64-bit; the
/// checkpoint format stores 32-bit floats, so persisted values are kept
/// exactly representable in f32 (see ModelParams).
struct Tensor {
  std::vector<long long> shape;
  std::vector<double> data;

  Tensor() = default;

  static Tensor zeros(std::vector<long long> shape_) {
    Tensor t;
    t.shape = std::move(shape_);
    t.data.assign(static_cast<size_t>(numel_of(t.shape)), 0.0);
    return t;
  }
  static Tensor scalar(double v) {
    Tensor t;
    t.shape = {1};
    t.data = {v};
    return t;
  }

  static long long numel_of(const std::vector<long long> &shape) {
    long long n = 1;
    for (long long d : shape) n *= d;
    return n;
  }
  long long numel() const { return static_cast<long long>(data.size()); }

  long long dim(size_t i) const { return shape[i]; }
  size_t ndim() const { return shape.size(); }

  double &operator[](size_t i) { return data[i]; }
  double operator[](size_t i) const { return data[i]; }

  bool same_shape(const Tensor &o) const { return shape == o.shape; }
  bool all_finite() const;
};

}  // namespace synvia

#endif  // SYNVIA_TENSOR_HPP
