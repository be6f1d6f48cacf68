#include <cstdlib>
#include <string>

#include "phiap/error.hpp"
#include "phiap/kernels.hpp"

namespace phiap::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select() {
  if (const char* env = std::getenv("PHIAP_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return detail::scalar_table();
    if (want == "avx2" && available(Isa::Avx2)) return *detail::avx2_table();
    if (want == "neon" && available(Isa::Neon)) return *detail::neon_table();
  }
  if (available(Isa::Avx2)) return *detail::avx2_table();
  if (available(Isa::Neon)) return *detail::neon_table();
  return detail::scalar_table();
}

}  // namespace

bool available(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
      return detail::avx2_table() != nullptr && cpu_has_avx2();
    case Isa::Neon:
      // NEON is mandatory on aarch64, so compiled-in means usable.
      return detail::neon_table() != nullptr;
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!available(isa)) throw Error("kernel variant not available: " + std::string(name(isa)));
  switch (isa) {
    case Isa::Avx2:
      return *detail::avx2_table();
    case Isa::Neon:
      return *detail::neon_table();
    case Isa::Scalar:
      break;
  }
  return detail::scalar_table();
}

const KernelTable& active() {
  static const KernelTable& chosen = select();
  return chosen;
}

std::string_view name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

}  // namespace phiap::kernels
