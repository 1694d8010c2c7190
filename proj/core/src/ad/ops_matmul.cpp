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

#include "gatspoof/ad/ops.hpp"
#include "gemm.hpp"
#include "ops_common.hpp"

namespace gatspoof::ad {

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  const bool a_batched = sa.size() == 3;
  const bool b_batched = sb.size() == 3;
  if ((sa.size() != 2 && sa.size() != 3) ||
      (sb.size() != 2 && sb.size() != 3) || (b_batched && !a_batched)) {
    throw ShapeError("matmul: unsupported ranks " + shape_str(sa) + " x " +
                     shape_str(sb));
  }
  const std::size_t batch = a_batched ? sa[0] : 1;
  const std::size_t m = a_batched ? sa[1] : sa[0];
  const std::size_t k = a_batched ? sa[2] : sa[1];
  const std::size_t kb = b_batched ? sb[1] : sb[0];
  const std::size_t n = b_batched ? sb[2] : sb[1];
  if (k != kb || (b_batched && sb[0] != batch)) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(sa) + " x " +
                     shape_str(sb));
  }

  Shape out_shape = a_batched ? Shape{batch, m, n} : Shape{m, n};
  Tensor<T> out(out_shape);
  const T* ap = a.value().data();
  const T* bp = b.value().data();
  T* op = out.value().data();
  for (std::size_t i = 0; i < batch; ++i) {
    detail::gemm(false, false, m, n, k, T(1), ap + i * m * k,
                 bp + (b_batched ? i * k * n : 0), T(0), op + i * m * n);
  }

  if (tracing<T>({&a, &b})) {
    out.set_requires_grad(true);
    Tape<T>::active()->record([an = a.node(), bn = b.node(), on = out.node(),
                               batch, m, n, k, b_batched] {
      if (on->grad.empty()) return;
      const T* g = on->grad.data();
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::size_t i = 0; i < batch; ++i) {
          // dA = dC * B^T
          detail::gemm(false, true, m, k, n, T(1), g + i * m * n,
                       bn->value.data() + (b_batched ? i * k * n : 0), T(1),
                       an->grad.data() + i * m * k);
        }
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < batch; ++i) {
          // dB = A^T * dC, accumulated over the batch when B is shared.
          detail::gemm(true, false, k, n, m, T(1),
                       an->value.data() + i * m * k, g + i * m * n, T(1),
                       bn->grad.data() + (b_batched ? i * k * n : 0));
        }
      }
    });
  }
  return out;
}

template Tensor<float> matmul(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> matmul(const Tensor<double>&, const Tensor<double>&);

}  // namespace gatspoof::ad
