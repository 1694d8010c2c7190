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

#include "gemm.hpp"

#include <vector>

#if defined(GATSPOOF_USE_CBLAS)
#if defined(GATSPOOF_CBLAS_OPENBLAS_HEADER)
#include <cblas-openblas.h>
#else
#include <cblas.h>
#endif
#endif

namespace gatspoof::ad::detail {

#if defined(GATSPOOF_USE_CBLAS)

namespace {
// Multi-threaded BLAS reorders reductions nondeterministically, so the
// whole library runs single-threaded GEMM.
struct BlasInit {
  BlasInit() {
#if defined(OPENBLAS_VERSION) || defined(GATSPOOF_CBLAS_OPENBLAS_HEADER)
    openblas_set_num_threads(1);
#endif
  }
};
const BlasInit blas_init;
}  // namespace

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, float alpha, const float* a, const float* b,
          float beta, float* c) {
  cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), alpha, a,
              static_cast<int>(trans_a ? m : k), b,
              static_cast<int>(trans_b ? k : n), beta, c,
              static_cast<int>(n));
}

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, double alpha, const double* a, const double* b,
          double beta, double* c) {
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), alpha, a,
              static_cast<int>(trans_a ? m : k), b,
              static_cast<int>(trans_b ? k : n), beta, c,
              static_cast<int>(n));
}

#else  // fallback kernel

namespace {

// Packs op(A) row-major so the inner loops below always stream
// contiguously. Slow compared to a tuned BLAS but portable.
template <typename T>
void gemm_impl(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
               std::size_t k, T alpha, const T* a, const T* b, T beta, T* c) {
  std::vector<T> at;
  if (trans_a) {
    at.resize(m * k);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) at[i * k + p] = a[p * m + i];
    a = at.data();
  }
  std::vector<T> bt;
  if (trans_b) {
    bt.resize(k * n);
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t j = 0; j < n; ++j) bt[p * n + j] = b[j * k + p];
    b = bt.data();
  }
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    if (beta == T(0)) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = T(0);
    } else if (beta != T(1)) {
      for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
    }
    const T* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = alpha * arow[p];
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, float alpha, const float* a, const float* b,
          float beta, float* c) {
  gemm_impl(trans_a, trans_b, m, n, k, alpha, a, b, beta, c);
}

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, double alpha, const double* a, const double* b,
          double beta, double* c) {
  gemm_impl(trans_a, trans_b, m, n, k, alpha, a, b, beta, c);
}

#endif

}  // namespace gatspoof::ad::detail
