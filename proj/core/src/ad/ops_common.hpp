// Copyright 2026 The gatspoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GATSPOOF_SRC_AD_OPS_COMMON_HPP
#define GATSPOOF_SRC_AD_OPS_COMMON_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "gatspoof/ad/tensor.hpp"

namespace gatspoof::ad::detail {

inline std::vector<std::size_t> row_major_strides(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) {
    strides[i - 1] = strides[i] * shape[i];
  }
  return strides;
}

/// Precomputed numpy-style broadcast of two shapes. Operand strides
/// are right-aligned to the output rank, with stride 0 on broadcast
/// dimensions so the odometer walk below can index both operands.
struct BroadcastPlan {
  Shape out_shape;
  std::vector<std::size_t> a_stride;
  std::vector<std::size_t> b_stride;
  std::size_t out_numel = 0;
};

inline BroadcastPlan make_broadcast_plan(const Shape& a, const Shape& b,
                                         const char* op) {
  const std::size_t nd = std::max(a.size(), b.size());
  BroadcastPlan plan;
  plan.out_shape.resize(nd);
  for (std::size_t i = 0; i < nd; ++i) {
    const std::size_t da = i < nd - a.size() ? 1 : a[i - (nd - a.size())];
    const std::size_t db = i < nd - b.size() ? 1 : b[i - (nd - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError(std::string(op) + ": shapes " + shape_str(a) + " and " +
                       shape_str(b) + " are not broadcastable");
    }
    plan.out_shape[i] = std::max(da, db);
  }
  plan.out_numel = shape_numel(plan.out_shape);
  auto aligned_strides = [&](const Shape& s) {
    std::vector<std::size_t> full(nd, 0);
    const auto native = row_major_strides(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::size_t d = nd - s.size() + i;
      full[d] = (s[i] == 1 && plan.out_shape[d] != 1) ? 0 : native[i];
    }
    return full;
  };
  plan.a_stride = aligned_strides(a);
  plan.b_stride = aligned_strides(b);
  return plan;
}

/// Calls f(out_index, a_index, b_index) for every output element, in
/// row-major order, advancing operand offsets with an odometer.
template <typename F>
void for_each_broadcast(const BroadcastPlan& plan, F&& f) {
  const std::size_t nd = plan.out_shape.size();
  if (nd == 0) {
    f(std::size_t{0}, std::size_t{0}, std::size_t{0});
    return;
  }
  std::vector<std::size_t> idx(nd, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t out = 0; out < plan.out_numel; ++out) {
    f(out, ia, ib);
    for (std::size_t d = nd; d-- > 0;) {
      ++idx[d];
      ia += plan.a_stride[d];
      ib += plan.b_stride[d];
      if (idx[d] < plan.out_shape[d]) break;
      ia -= plan.a_stride[d] * plan.out_shape[d];
      ib -= plan.b_stride[d] * plan.out_shape[d];
      idx[d] = 0;
    }
  }
}

/// Splits a shape around one axis into (outer, n, inner) extents so a
/// reduction or softmax can walk lanes with plain index arithmetic.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t n = 1;
  std::size_t inner = 1;
};

inline AxisSplit split_axis(const Shape& shape, std::size_t axis,
                            const char* op) {
  if (axis >= shape.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                     " out of range for shape " + shape_str(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.n = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace gatspoof::ad::detail

#endif  // GATSPOOF_SRC_AD_OPS_COMMON_HPP
