#pragma once

// Small single-threaded matrix products for the patch-matrix convolution and
// the dense layers. Row-major; the innermost loop always runs over contiguous
// memory so it vectorizes. Callers parallelize at the sample level.

#include <algorithm>
#include <cstddef>

namespace orient::detail {

/// C[m,n] (+)= sum_k A[m,k] * B[k,n]
inline void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c,
                    bool accumulate) {
  if (!accumulate) {
    std::fill(c, c + m * n, 0.0F);
  }
  constexpr std::size_t kBlock = 256;
  for (std::size_t k0 = 0; k0 < k; k0 += kBlock) {
    const std::size_t k1 = std::min(k, k0 + kBlock);
    for (std::size_t i = 0; i < m; ++i) {
      float* __restrict crow = c + i * n;
      const float* arow = a + i * k;
      for (std::size_t p = k0; p < k1; ++p) {
        const float av = arow[p];
        const float* __restrict brow = b + p * n;
        for (std::size_t j = 0; j < n; ++j) {
          crow[j] += av * brow[j];
        }
      }
    }
  }
}

/// C[m,n] (+)= sum_k A[k,m] * B[k,n]
inline void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b, float* c,
                    bool accumulate) {
  if (!accumulate) {
    std::fill(c, c + m * n, 0.0F);
  }
  for (std::size_t p = 0; p < k; ++p) {
    const float* arow = a + p * m;
    const float* __restrict brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const float av = arow[i];
      float* __restrict crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        crow[j] += av * brow[j];
      }
    }
  }
}

}  // namespace orient::detail
