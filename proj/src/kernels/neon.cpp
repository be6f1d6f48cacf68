#include "phiap/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>

namespace phiap::kernels::detail {
namespace {

void linear_predictor_neon(const double* x, std::size_t n, std::size_t p,
                           const double* beta, double* eta) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    for (std::size_t j = 0; j < p; ++j) {
      const float64x2_t b = vdupq_n_f64(beta[j]);
      const double* col = x + j * n + i;
      acc0 = vfmaq_f64(acc0, vld1q_f64(col), b);
      acc1 = vfmaq_f64(acc1, vld1q_f64(col + 2), b);
    }
    vst1q_f64(eta + i, acc0);
    vst1q_f64(eta + i + 2, acc1);
  }
  for (; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < p; ++j) acc += x[j * n + i] * beta[j];
    eta[i] = acc;
  }
}

void transpose_times_neon(const double* x, std::size_t n, std::size_t p,
                          const double* w, double* out) {
  for (std::size_t j = 0; j < p; ++j) {
    const double* col = x + j * n;
    float64x2_t a0 = vdupq_n_f64(0.0);
    float64x2_t a1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
      a0 = vfmaq_f64(a0, vld1q_f64(col + i), vld1q_f64(w + i));
      a1 = vfmaq_f64(a1, vld1q_f64(col + i + 2), vld1q_f64(w + i + 2));
    }
    double acc = vaddvq_f64(vaddq_f64(a0, a1));
    for (; i < n; ++i) acc += col[i] * w[i];
    out[j] = acc;
  }
}

const KernelTable kNeon{Isa::Neon, &linear_predictor_neon, &transpose_times_neon};

}  // namespace

const KernelTable* neon_table() { return &kNeon; }

}  // namespace phiap::kernels::detail

#else

namespace phiap::kernels::detail {
const KernelTable* neon_table() { return nullptr; }
}  // namespace phiap::kernels::detail

#endif
