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

#include <algorithm>
#include <numeric>

#include "gatspoof/ad/ops.hpp"
#include "ops_common.hpp"

namespace gatspoof::ad {

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (shape_numel(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                     shape_str(shape));
  }
  Tensor<T> out(std::move(shape),
                std::vector<T>(a.value().begin(), a.value().end()));
  if (tracing<T>({&a})) {
    out.set_requires_grad(true);
    Tape<T>::active()->record([an = a.node(), on = out.node()] {
      if (on->grad.empty() || !an->requires_grad) return;
      an->ensure_grad();
      for (std::size_t i = 0; i < an->grad.size(); ++i) {
        an->grad[i] += on->grad[i];
      }
    });
  }
  return out;
}

namespace {

// out[i0,...,ik] = in[i_axes[0],...]: gathers the permuted index map
// once; forward and backward reuse it in opposite directions.
std::vector<std::size_t> permute_index_map(
    const Shape& in_shape, const std::vector<std::size_t>& axes) {
  const std::size_t nd = in_shape.size();
  Shape out_shape(nd);
  for (std::size_t i = 0; i < nd; ++i) out_shape[i] = in_shape[axes[i]];
  const auto in_strides = detail::row_major_strides(in_shape);
  std::vector<std::size_t> src_stride(nd);
  for (std::size_t i = 0; i < nd; ++i) src_stride[i] = in_strides[axes[i]];

  std::vector<std::size_t> map(shape_numel(out_shape));
  std::vector<std::size_t> idx(nd, 0);
  std::size_t src = 0;
  for (std::size_t out = 0; out < map.size(); ++out) {
    map[out] = src;
    for (std::size_t d = nd; d-- > 0;) {
      ++idx[d];
      src += src_stride[d];
      if (idx[d] < out_shape[d]) break;
      src -= src_stride[d] * out_shape[d];
      idx[d] = 0;
    }
  }
  return map;
}

}  // namespace

template <typename T>
Tensor<T> permute(const Tensor<T>& a, const std::vector<std::size_t>& axes) {
  const std::size_t nd = a.ndim();
  if (axes.size() != nd) {
    throw ShapeError("permute: axis list of length " +
                     std::to_string(axes.size()) + " for shape " +
                     shape_str(a.shape()));
  }
  std::vector<bool> seen(nd, false);
  for (std::size_t ax : axes) {
    if (ax >= nd || seen[ax]) {
      throw ShapeError("permute: invalid axis permutation for shape " +
                       shape_str(a.shape()));
    }
    seen[ax] = true;
  }
  Shape out_shape(nd);
  for (std::size_t i = 0; i < nd; ++i) out_shape[i] = a.dim(axes[i]);
  const auto map = permute_index_map(a.shape(), axes);
  Tensor<T> out(out_shape);
  auto av = a.value();
  auto ov = out.value();
  for (std::size_t i = 0; i < map.size(); ++i) ov[i] = av[map[i]];
  if (tracing<T>({&a})) {
    out.set_requires_grad(true);
    Tape<T>::active()->record([an = a.node(), on = out.node(), map] {
      if (on->grad.empty() || !an->requires_grad) return;
      an->ensure_grad();
      for (std::size_t i = 0; i < map.size(); ++i) {
        an->grad[map[i]] += on->grad[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) {
    throw ShapeError("concat: axis " + std::to_string(axis) +
                     " out of range for shape " + shape_str(first));
  }
  Shape out_shape = first;
  for (std::size_t p = 1; p < parts.size(); ++p) {
    const Shape& s = parts[p].shape();
    if (s.size() != first.size()) {
      throw ShapeError("concat: rank mismatch between " + shape_str(first) +
                       " and " + shape_str(s));
    }
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (d != axis && s[d] != first[d]) {
        throw ShapeError("concat: shapes " + shape_str(first) + " and " +
                         shape_str(s) + " differ off axis " +
                         std::to_string(axis));
      }
    }
    out_shape[axis] += s[axis];
  }

  const auto split = detail::split_axis(out_shape, axis, "concat");
  Tensor<T> out(out_shape);
  auto ov = out.value();
  std::vector<std::size_t> offsets(parts.size());
  std::size_t off = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    offsets[p] = off;
    const std::size_t np = parts[p].dim(axis);
    auto pv = parts[p].value();
    for (std::size_t o = 0; o < split.outer; ++o) {
      const T* src = pv.data() + o * np * split.inner;
      T* dst = ov.data() + (o * split.n + off) * split.inner;
      std::copy(src, src + np * split.inner, dst);
    }
    off += np;
  }

  bool any_grad = false;
  for (const auto& p : parts) any_grad = any_grad || p.requires_grad();
  if (Tape<T>::active() != nullptr && any_grad) {
    out.set_requires_grad(true);
    std::vector<std::shared_ptr<TensorNode<T>>> nodes;
    std::vector<std::size_t> widths;
    nodes.reserve(parts.size());
    for (const auto& p : parts) {
      nodes.push_back(p.node());
      widths.push_back(p.dim(axis));
    }
    Tape<T>::active()->record(
        [nodes, widths, offsets, split, on = out.node()] {
          if (on->grad.empty()) return;
          for (std::size_t p = 0; p < nodes.size(); ++p) {
            if (!nodes[p]->requires_grad) continue;
            nodes[p]->ensure_grad();
            for (std::size_t o = 0; o < split.outer; ++o) {
              const T* src =
                  on->grad.data() + (o * split.n + offsets[p]) * split.inner;
              T* dst = nodes[p]->grad.data() + o * widths[p] * split.inner;
              for (std::size_t i = 0; i < widths[p] * split.inner; ++i) {
                dst[i] += src[i];
              }
            }
          }
        });
  }
  return out;
}

#define GATSPOOF_INSTANTIATE(T)                                  \
  template Tensor<T> reshape(const Tensor<T>&, Shape);           \
  template Tensor<T> permute(const Tensor<T>&,                   \
                             const std::vector<std::size_t>&);   \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, std::size_t);

GATSPOOF_INSTANTIATE(float)
GATSPOOF_INSTANTIATE(double)
#undef GATSPOOF_INSTANTIATE

}  // namespace gatspoof::ad
