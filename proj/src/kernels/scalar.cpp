#include "phiap/kernels.hpp"

namespace phiap::kernels::detail {
namespace {

void linear_predictor_scalar(const double* x, std::size_t n, std::size_t p,
                             const double* beta, double* eta) {
  for (std::size_t i = 0; i < n; ++i) eta[i] = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    const double b = beta[j];
    const double* col = x + j * n;
    for (std::size_t i = 0; i < n; ++i) eta[i] += col[i] * b;
  }
}

void transpose_times_scalar(const double* x, std::size_t n, std::size_t p,
                            const double* w, double* out) {
  for (std::size_t j = 0; j < p; ++j) {
    const double* col = x + j * n;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += col[i] * w[i];
    out[j] = acc;
  }
}

const KernelTable kScalar{Isa::Scalar, &linear_predictor_scalar, &transpose_times_scalar};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace phiap::kernels::detail
