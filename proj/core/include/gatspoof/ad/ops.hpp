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

#ifndef GATSPOOF_AD_OPS_HPP
#define GATSPOOF_AD_OPS_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "gatspoof/ad/tensor.hpp"

namespace gatspoof::ad {

enum class Mode { kTrain, kEval };

// Self-normalizing ELU constants (Klambauer et al. values, pinned so
// float and double builds agree on the same reals).
inline constexpr double kSeluAlpha = 1.6732632423543772;
inline constexpr double kSeluLambda = 1.0507009873554805;

/// Output extent of a strided, zero-padded sliding window.
inline std::size_t conv_out_dim(std::size_t in, std::size_t k, std::size_t s,
                                std::size_t p) {
  const std::size_t padded = in + 2 * p;
  if (padded < k) return 0;
  return (padded - k) / s + 1;
}

// Elementwise binary ops with numpy-style broadcasting: shapes are
// right-aligned and each dimension pair must match or contain a 1.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T c);
template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T c);

template <typename T>
Tensor<T> exp(const Tensor<T>& a);
template <typename T>
Tensor<T> log(const Tensor<T>& a);
template <typename T>
Tensor<T> sqrt(const Tensor<T>& a);
template <typename T>
Tensor<T> tanh(const Tensor<T>& a);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a);
template <typename T>
Tensor<T> selu(const Tensor<T>& a);

// Reductions. *_axis removes the reduced dimension.
template <typename T>
Tensor<T> sum_axis(const Tensor<T>& a, std::size_t axis);
template <typename T>
Tensor<T> mean_axis(const Tensor<T>& a, std::size_t axis);
template <typename T>
Tensor<T> sum_all(const Tensor<T>& a);
template <typename T>
Tensor<T> mean_all(const Tensor<T>& a);

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape);
template <typename T>
Tensor<T> permute(const Tensor<T>& a, const std::vector<std::size_t>& axes);
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis);

/// Numerically stable softmax along one axis (max is subtracted
/// before exponentiation).
template <typename T>
Tensor<T> softmax_axis(const Tensor<T>& a, std::size_t axis);

/// Matrix product. Accepts [M,K]x[K,N], batched [B,M,K]x[B,K,N], and
/// the mixed case [B,M,K]x[K,N] where the right operand is shared
/// across the batch.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

/// 2-D cross-correlation. x is [B,C,H,W], w is [F,C,kh,kw], zero
/// padding, no dilation, no groups.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, std::size_t sh,
                 std::size_t sw, std::size_t ph, std::size_t pw);

/// Max pooling over [B,C,H,W]. Padding cells take part as -infinity,
/// and the first (row-major) maximal element wins ties so the
/// backward scatter target is well defined.
template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& x, std::size_t kh, std::size_t kw,
                    std::size_t sh, std::size_t sw, std::size_t ph,
                    std::size_t pw);

/// Adaptive average pooling to a fixed output grid. Window i covers
/// [floor(i*in/out), ceil((i+1)*in/out)), which also upsamples
/// correctly when out > in.
template <typename T>
Tensor<T> adaptive_avg_pool2d(const Tensor<T>& x, std::size_t oh,
                              std::size_t ow);

/// Running statistics owned by the call site; batchnorm reads them in
/// eval mode and updates them in train mode. eps is configurable so
/// callers can pin exact identity transforms in tests.
template <typename T>
struct BatchNormState {
  std::vector<T> running_mean;
  std::vector<T> running_var;
  T momentum = T(0.1);
  T eps = T(1e-5);

  explicit BatchNormState(std::size_t channels)
      : running_mean(channels, T(0)), running_var(channels, T(1)) {}
};

/// Batch normalization over [M,C] (per column) or [B,C,H,W] (per
/// channel across B*H*W). Normalization uses the biased batch
/// variance; the running variance update uses the unbiased one.
template <typename T>
Tensor<T> batchnorm(const Tensor<T>& x, const Tensor<T>& gamma,
                    const Tensor<T>& beta, BatchNormState<T>& state,
                    Mode mode);

/// Mean binary cross-entropy on raw logits [B], fused with the
/// sigmoid in the stable max(z,0) - z*y + log1p(exp(-|z|)) form.
/// Targets must be exactly 0 or 1.
template <typename T>
Tensor<T> bce_with_logits(const Tensor<T>& logits,
                          const std::vector<T>& targets);

}  // namespace gatspoof::ad

#endif  // GATSPOOF_AD_OPS_HPP
