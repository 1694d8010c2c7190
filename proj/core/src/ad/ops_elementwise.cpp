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

#include <cmath>

#include "gatspoof/ad/ops.hpp"
#include "ops_common.hpp"

namespace gatspoof::ad {

namespace {

enum class BinKind { kAdd, kSub, kMul };

template <typename T>
Tensor<T> binary_op(const Tensor<T>& a, const Tensor<T>& b, BinKind kind,
                    const char* name) {
  const auto plan = detail::make_broadcast_plan(a.shape(), b.shape(), name);
  Tensor<T> out(plan.out_shape);
  auto av = a.value();
  auto bv = b.value();
  auto ov = out.value();
  switch (kind) {
    case BinKind::kAdd:
      detail::for_each_broadcast(
          plan, [&](auto o, auto ia, auto ib) { ov[o] = av[ia] + bv[ib]; });
      break;
    case BinKind::kSub:
      detail::for_each_broadcast(
          plan, [&](auto o, auto ia, auto ib) { ov[o] = av[ia] - bv[ib]; });
      break;
    case BinKind::kMul:
      detail::for_each_broadcast(
          plan, [&](auto o, auto ia, auto ib) { ov[o] = av[ia] * bv[ib]; });
      break;
  }
  if (tracing<T>({&a, &b})) {
    out.set_requires_grad(true);
    Tape<T>::active()->record(
        [an = a.node(), bn = b.node(), on = out.node(), plan, kind] {
          if (on->grad.empty()) return;
          const auto& g = on->grad;
          if (an->requires_grad) {
            an->ensure_grad();
            auto& ga = an->grad;
            const auto& bval = bn->value;
            detail::for_each_broadcast(plan, [&](auto o, auto ia, auto ib) {
              switch (kind) {
                case BinKind::kAdd:
                case BinKind::kSub:
                  ga[ia] += g[o];
                  (void)ib;
                  break;
                case BinKind::kMul:
                  ga[ia] += g[o] * bval[ib];
                  break;
              }
            });
          }
          if (bn->requires_grad) {
            bn->ensure_grad();
            auto& gb = bn->grad;
            const auto& aval = an->value;
            detail::for_each_broadcast(plan, [&](auto o, auto ia, auto ib) {
              switch (kind) {
                case BinKind::kAdd:
                  gb[ib] += g[o];
                  (void)ia;
                  break;
                case BinKind::kSub:
                  gb[ib] -= g[o];
                  break;
                case BinKind::kMul:
                  gb[ib] += g[o] * aval[ia];
                  break;
              }
            });
          }
        });
  }
  return out;
}

// dfdy receives (x, y) so each op can use whichever is cheaper.
template <typename T, typename Fwd, typename Dfdy>
Tensor<T> unary_op(const Tensor<T>& a, Fwd fwd, Dfdy dfdy) {
  Tensor<T> out(a.shape());
  auto av = a.value();
  auto ov = out.value();
  for (std::size_t i = 0; i < av.size(); ++i) ov[i] = fwd(av[i]);
  if (tracing<T>({&a})) {
    out.set_requires_grad(true);
    Tape<T>::active()->record([an = a.node(), on = out.node(), dfdy] {
      if (on->grad.empty() || !an->requires_grad) return;
      an->ensure_grad();
      for (std::size_t i = 0; i < an->grad.size(); ++i) {
        an->grad[i] += on->grad[i] * dfdy(an->value[i], on->value[i]);
      }
    });
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op(a, b, BinKind::kAdd, "add");
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op(a, b, BinKind::kSub, "sub");
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op(a, b, BinKind::kMul, "mul");
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T c) {
  return unary_op(
      a, [c](T x) { return x + c; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T c) {
  return unary_op(
      a, [c](T x) { return x * c; }, [c](T, T) { return c; });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
  return unary_op(
      a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& a) {
  return unary_op(
      a, [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}

template <typename T>
Tensor<T> sqrt(const Tensor<T>& a) {
  return unary_op(
      a, [](T x) { return std::sqrt(x); },
      [](T, T y) { return T(1) / (T(2) * y); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  return unary_op(
      a, [](T x) { return std::tanh(x); },
      [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return unary_op(
      a,
      [](T x) {
        // Evaluate through exp(-|x|) only, so neither branch overflows.
        if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
        const T e = std::exp(x);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> selu(const Tensor<T>& a) {
  const T alpha = static_cast<T>(kSeluAlpha);
  const T lambda = static_cast<T>(kSeluLambda);
  return unary_op(
      a,
      [alpha, lambda](T x) {
        return x > T(0) ? lambda * x : lambda * alpha * (std::exp(x) - T(1));
      },
      [alpha, lambda](T x, T y) {
        return x > T(0) ? lambda : y + lambda * alpha;
      });
}

template <typename T>
Tensor<T> sum_axis(const Tensor<T>& a, std::size_t axis) {
  const auto s = detail::split_axis(a.shape(), axis, "sum_axis");
  Shape out_shape = a.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor<T> out(out_shape);
  auto av = a.value();
  auto ov = out.value();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t j = 0; j < s.n; ++j) {
      const T* src = av.data() + (o * s.n + j) * s.inner;
      T* dst = ov.data() + o * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
    }
  }
  if (tracing<T>({&a})) {
    out.set_requires_grad(true);
    Tape<T>::active()->record([an = a.node(), on = out.node(), s] {
      if (on->grad.empty() || !an->requires_grad) return;
      an->ensure_grad();
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t j = 0; j < s.n; ++j) {
          T* dst = an->grad.data() + (o * s.n + j) * s.inner;
          const T* src = on->grad.data() + o * s.inner;
          for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> mean_axis(const Tensor<T>& a, std::size_t axis) {
  const auto s = detail::split_axis(a.shape(), axis, "mean_axis");
  if (s.n == 0) throw ShapeError("mean_axis: axis of extent 0");
  return mul_scalar(sum_axis(a, axis), T(1) / static_cast<T>(s.n));
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& a) {
  Tensor<T> out(Shape{});
  auto av = a.value();
  T acc = T(0);
  for (T v : av) acc += v;
  out.value()[0] = acc;
  if (tracing<T>({&a})) {
    out.set_requires_grad(true);
    Tape<T>::active()->record([an = a.node(), on = out.node()] {
      if (on->grad.empty() || !an->requires_grad) return;
      an->ensure_grad();
      const T g = on->grad[0];
      for (auto& v : an->grad) v += g;
    });
  }
  return out;
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& a) {
  if (a.size() == 0) throw ShapeError("mean_all: empty tensor");
  return mul_scalar(sum_all(a), T(1) / static_cast<T>(a.size()));
}

template <typename T>
Tensor<T> softmax_axis(const Tensor<T>& a, std::size_t axis) {
  const auto s = detail::split_axis(a.shape(), axis, "softmax_axis");
  Tensor<T> out(a.shape());
  auto av = a.value();
  auto ov = out.value();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.n * s.inner + i;
      T mx = av[base];
      for (std::size_t j = 1; j < s.n; ++j) {
        mx = std::max(mx, av[base + j * s.inner]);
      }
      T denom = T(0);
      for (std::size_t j = 0; j < s.n; ++j) {
        const T e = std::exp(av[base + j * s.inner] - mx);
        ov[base + j * s.inner] = e;
        denom += e;
      }
      const T inv = T(1) / denom;
      for (std::size_t j = 0; j < s.n; ++j) ov[base + j * s.inner] *= inv;
    }
  }
  if (tracing<T>({&a})) {
    out.set_requires_grad(true);
    Tape<T>::active()->record([an = a.node(), on = out.node(), s] {
      if (on->grad.empty() || !an->requires_grad) return;
      an->ensure_grad();
      const auto& y = on->value;
      const auto& g = on->grad;
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t i = 0; i < s.inner; ++i) {
          const std::size_t base = o * s.n * s.inner + i;
          T dot = T(0);
          for (std::size_t j = 0; j < s.n; ++j) {
            const std::size_t k = base + j * s.inner;
            dot += g[k] * y[k];
          }
          for (std::size_t j = 0; j < s.n; ++j) {
            const std::size_t k = base + j * s.inner;
            an->grad[k] += y[k] * (g[k] - dot);
          }
        }
      }
    });
  }
  return out;
}

#define GATSPOOF_INSTANTIATE(T)                                        \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);          \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);          \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);          \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                  \
  template Tensor<T> mul_scalar(const Tensor<T>&, T);                  \
  template Tensor<T> exp(const Tensor<T>&);                            \
  template Tensor<T> log(const Tensor<T>&);                            \
  template Tensor<T> sqrt(const Tensor<T>&);                           \
  template Tensor<T> tanh(const Tensor<T>&);                           \
  template Tensor<T> sigmoid(const Tensor<T>&);                        \
  template Tensor<T> selu(const Tensor<T>&);                           \
  template Tensor<T> sum_axis(const Tensor<T>&, std::size_t);          \
  template Tensor<T> mean_axis(const Tensor<T>&, std::size_t);         \
  template Tensor<T> sum_all(const Tensor<T>&);                        \
  template Tensor<T> mean_all(const Tensor<T>&);                       \
  template Tensor<T> softmax_axis(const Tensor<T>&, std::size_t);

GATSPOOF_INSTANTIATE(float)
GATSPOOF_INSTANTIATE(double)
#undef GATSPOOF_INSTANTIATE

}  // namespace gatspoof::ad
