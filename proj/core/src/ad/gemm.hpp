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

#ifndef GATSPOOF_SRC_AD_GEMM_HPP
#define GATSPOOF_SRC_AD_GEMM_HPP

#include <cstddef>

namespace gatspoof::ad::detail {

// C[m,n] = alpha * op(A) * op(B) + beta * C, row-major. op(A) is A or
// A^T depending on trans_a; A is stored [m,k] untransposed or [k,m]
// transposed (likewise for B). Backed by OpenBLAS when available,
// pinned to one thread for reproducibility.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, float alpha, const float* a, const float* b,
          float beta, float* c);
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, double alpha, const double* a, const double* b,
          double beta, double* c);

}  // namespace gatspoof::ad::detail

#endif  // GATSPOOF_SRC_AD_GEMM_HPP
