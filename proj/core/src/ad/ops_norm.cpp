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

// Both supported layouts reduce per channel c over outer*spatial
// elements at ((o*C + c) * spatial + p). [M,C] maps to outer=M,
// spatial=1; [B,C,H,W] to outer=B, spatial=H*W.
struct BnLayout {
  std::size_t outer, channels, spatial;
  std::size_t count() const { return outer * spatial; }
};

template <typename T>
BnLayout bn_layout(const Tensor<T>& x) {
  if (x.ndim() == 2) return {x.dim(0), x.dim(1), 1};
  if (x.ndim() == 4) return {x.dim(0), x.dim(1), x.dim(2) * x.dim(3)};
  throw ShapeError("batchnorm: expected [M,C] or [B,C,H,W], got " +
                   shape_str(x.shape()));
}

}  // namespace

template <typename T>
Tensor<T> batchnorm(const Tensor<T>& x, const Tensor<T>& gamma,
                    const Tensor<T>& beta, BatchNormState<T>& state,
                    Mode mode) {
  const BnLayout l = bn_layout(x);
  const std::size_t C = l.channels;
  if (gamma.ndim() != 1 || gamma.dim(0) != C || beta.ndim() != 1 ||
      beta.dim(0) != C) {
    throw ShapeError("batchnorm: gamma " + shape_str(gamma.shape()) +
                     " / beta " + shape_str(beta.shape()) +
                     " do not match input " + shape_str(x.shape()));
  }
  if (state.running_mean.size() != C || state.running_var.size() != C) {
    throw ShapeError("batchnorm: state holds " +
                     std::to_string(state.running_mean.size()) +
                     " channels, input has " + std::to_string(C));
  }
  const std::size_t n = l.count();
  if (mode == Mode::kTrain && n < 2) {
    throw ContractError(
        "batchnorm: training needs at least 2 elements per channel, got " +
        std::to_string(n));
  }

  auto xv = x.value();
  std::vector<T> mean(C, T(0)), var(C, T(0));
  if (mode == Mode::kTrain) {
    // Two-pass batch statistics; normalization uses the biased
    // variance, the running update the unbiased one.
    for (std::size_t o = 0; o < l.outer; ++o) {
      for (std::size_t c = 0; c < C; ++c) {
        const T* p = xv.data() + (o * C + c) * l.spatial;
        T acc = T(0);
        for (std::size_t s = 0; s < l.spatial; ++s) acc += p[s];
        mean[c] += acc;
      }
    }
    for (std::size_t c = 0; c < C; ++c) mean[c] /= static_cast<T>(n);
    for (std::size_t o = 0; o < l.outer; ++o) {
      for (std::size_t c = 0; c < C; ++c) {
        const T* p = xv.data() + (o * C + c) * l.spatial;
        T acc = T(0);
        for (std::size_t s = 0; s < l.spatial; ++s) {
          const T dv = p[s] - mean[c];
          acc += dv * dv;
        }
        var[c] += acc;
      }
    }
    for (std::size_t c = 0; c < C; ++c) var[c] /= static_cast<T>(n);
    for (std::size_t c = 0; c < C; ++c) {
      state.running_mean[c] = (T(1) - state.momentum) * state.running_mean[c] +
                              state.momentum * mean[c];
      const T unbiased = var[c] * static_cast<T>(n) / static_cast<T>(n - 1);
      state.running_var[c] = (T(1) - state.momentum) * state.running_var[c] +
                             state.momentum * unbiased;
    }
  } else {
    mean = state.running_mean;
    var = state.running_var;
  }

  auto invstd = std::make_shared<std::vector<T>>(C);
  for (std::size_t c = 0; c < C; ++c) {
    (*invstd)[c] = T(1) / std::sqrt(var[c] + state.eps);
  }

  Tensor<T> out(x.shape());
  auto xhat = std::make_shared<std::vector<T>>(xv.size());
  auto gv = gamma.value();
  auto bv = beta.value();
  auto ov = out.value();
  for (std::size_t o = 0; o < l.outer; ++o) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t base = (o * C + c) * l.spatial;
      for (std::size_t s = 0; s < l.spatial; ++s) {
        const T xh = (xv[base + s] - mean[c]) * (*invstd)[c];
        (*xhat)[base + s] = xh;
        ov[base + s] = gv[c] * xh + bv[c];
      }
    }
  }

  if (tracing<T>({&x, &gamma, &beta})) {
    out.set_requires_grad(true);
    Tape<T>::active()->record([xn = x.node(), gn = gamma.node(),
                               bn = beta.node(), on = out.node(), l, xhat,
                               invstd, mode] {
      if (on->grad.empty()) return;
      const std::size_t C = l.channels;
      const T n = static_cast<T>(l.count());
      const auto& g = on->grad;
      // Channel sums s1 = sum(dy), s2 = sum(dy * xhat) feed all three
      // gradients.
      std::vector<T> s1(C, T(0)), s2(C, T(0));
      for (std::size_t o = 0; o < l.outer; ++o) {
        for (std::size_t c = 0; c < C; ++c) {
          const std::size_t base = (o * C + c) * l.spatial;
          T a1 = T(0), a2 = T(0);
          for (std::size_t s = 0; s < l.spatial; ++s) {
            a1 += g[base + s];
            a2 += g[base + s] * (*xhat)[base + s];
          }
          s1[c] += a1;
          s2[c] += a2;
        }
      }
      if (gn->requires_grad) {
        gn->ensure_grad();
        for (std::size_t c = 0; c < C; ++c) gn->grad[c] += s2[c];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t c = 0; c < C; ++c) bn->grad[c] += s1[c];
      }
      if (xn->requires_grad) {
        xn->ensure_grad();
        for (std::size_t o = 0; o < l.outer; ++o) {
          for (std::size_t c = 0; c < C; ++c) {
            const std::size_t base = (o * C + c) * l.spatial;
            const T gscale = gn->value[c] * (*invstd)[c];
            for (std::size_t s = 0; s < l.spatial; ++s) {
              if (mode == Mode::kTrain) {
                // Batch statistics depend on x, so their gradient
                // contributions are folded in.
                xn->grad[base + s] +=
                    gscale / n *
                    (n * g[base + s] - s1[c] - (*xhat)[base + s] * s2[c]);
              } else {
                xn->grad[base + s] += gscale * g[base + s];
              }
            }
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> bce_with_logits(const Tensor<T>& logits,
                          const std::vector<T>& targets) {
  if (logits.ndim() != 1) {
    throw ShapeError("bce_with_logits: expected logits [B], got " +
                     shape_str(logits.shape()));
  }
  const std::size_t B = logits.dim(0);
  if (B == 0) throw ContractError("bce_with_logits: empty batch");
  if (targets.size() != B) {
    throw ContractError("bce_with_logits: " + std::to_string(B) +
                        " logits vs " + std::to_string(targets.size()) +
                        " targets");
  }
  for (T y : targets) {
    if (y != T(0) && y != T(1)) {
      throw ContractError("bce_with_logits: targets must be exactly 0 or 1");
    }
  }

  auto zv = logits.value();
  T acc = T(0);
  for (std::size_t i = 0; i < B; ++i) {
    const T z = zv[i];
    // max(z,0) - z*y + log1p(exp(-|z|)): never exponentiates a
    // positive argument, so large |z| cannot overflow.
    acc += std::max(z, T(0)) - z * targets[i] + std::log1p(std::exp(-std::abs(z)));
  }
  Tensor<T> out = Tensor<T>::scalar(acc / static_cast<T>(B));

  if (tracing<T>({&logits})) {
    out.set_requires_grad(true);
    Tape<T>::active()->record([zn = logits.node(), on = out.node(), targets,
                               B] {
      if (on->grad.empty() || !zn->requires_grad) return;
      zn->ensure_grad();
      const T g = on->grad[0] / static_cast<T>(B);
      for (std::size_t i = 0; i < B; ++i) {
        const T z = zn->value[i];
        T sig;
        if (z >= T(0)) {
          sig = T(1) / (T(1) + std::exp(-z));
        } else {
          const T e = std::exp(z);
          sig = e / (T(1) + e);
        }
        zn->grad[i] += g * (sig - targets[i]);
      }
    });
  }
  return out;
}

#define GATSPOOF_INSTANTIATE(T)                                       \
  template Tensor<T> batchnorm(const Tensor<T>&, const Tensor<T>&,    \
                               const Tensor<T>&, BatchNormState<T>&,  \
                               Mode);                                 \
  template Tensor<T> bce_with_logits(const Tensor<T>&,                \
                                     const std::vector<T>&);

GATSPOOF_INSTANTIATE(float)
GATSPOOF_INSTANTIATE(double)
#undef GATSPOOF_INSTANTIATE

}  // namespace gatspoof::ad
