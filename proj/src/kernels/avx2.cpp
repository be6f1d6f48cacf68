// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include "phiap/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace phiap::kernels::detail {
namespace {

void linear_predictor_avx2(const double* x, std::size_t n, std::size_t p,
                           const double* beta, double* eta) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (std::size_t j = 0; j < p; ++j) {
      const __m256d b = _mm256_broadcast_sd(beta + j);
      const double* col = x + j * n + i;
      acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(col), b, acc0);
      acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(col + 4), b, acc1);
    }
    _mm256_storeu_pd(eta + i, acc0);
    _mm256_storeu_pd(eta + i + 4, acc1);
  }
  for (; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < p; ++j) acc += x[j * n + i] * beta[j];
    eta[i] = acc;
  }
}

void transpose_times_avx2(const double* x, std::size_t n, std::size_t p,
                          const double* w, double* out) {
  for (std::size_t j = 0; j < p; ++j) {
    const double* col = x + j * n;
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd();
    __m256d a3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
      a0 = _mm256_fmadd_pd(_mm256_loadu_pd(col + i), _mm256_loadu_pd(w + i), a0);
      a1 = _mm256_fmadd_pd(_mm256_loadu_pd(col + i + 4), _mm256_loadu_pd(w + i + 4), a1);
      a2 = _mm256_fmadd_pd(_mm256_loadu_pd(col + i + 8), _mm256_loadu_pd(w + i + 8), a2);
      a3 = _mm256_fmadd_pd(_mm256_loadu_pd(col + i + 12), _mm256_loadu_pd(w + i + 12), a3);
    }
    const __m256d sum = _mm256_add_pd(_mm256_add_pd(a0, a1), _mm256_add_pd(a2, a3));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, sum);
    double acc = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) acc += col[i] * w[i];
    out[j] = acc;
  }
}

const KernelTable kAvx2{Isa::Avx2, &linear_predictor_avx2, &transpose_times_avx2};

}  // namespace

const KernelTable* avx2_table() { return &kAvx2; }

}  // namespace phiap::kernels::detail

#else

namespace phiap::kernels::detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace phiap::kernels::detail

#endif
