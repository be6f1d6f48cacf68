#pragma once

// Row-parallel arithmetic kernels behind the likelihood.
//
// Every kernel has a scalar reference implementation and vectorized variants
// (AVX2+FMA on x86-64, NEON on aarch64). The variant is picked once at first
// use from the CPU's capabilities; PHIAP_KERNELS=scalar in the environment
// forces the reference path. Variants agree with the reference up to
// floating-point reassociation, not bit-for-bit.

#include <cstddef>
#include <span>
#include <string_view>

namespace phiap::kernels {

enum class Isa { Scalar, Avx2, Neon };

struct KernelTable {
  Isa isa;
  /// eta[i] = sum_j x[j * n + i] * beta[j]  (x column-major, n rows, p cols)
  void (*linear_predictor)(const double* x, std::size_t n, std::size_t p,
                           const double* beta, double* eta);
  /// out[j] = sum_i x[j * n + i] * w[i]
  void (*transpose_times)(const double* x, std::size_t n, std::size_t p,
                          const double* w, double* out);
};

bool available(Isa isa);
const KernelTable& table(Isa isa);
/// The table selected for this process.
const KernelTable& active();

std::string_view name(Isa isa);

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
const KernelTable* neon_table();
}  // namespace detail

}  // namespace phiap::kernels
