#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include "phiap/kernels.hpp"

using namespace phiap::kernels;

namespace {

std::vector<Isa> vector_variants() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::Avx2, Isa::Neon})
    if (available(isa)) out.push_back(isa);
  return out;
}

struct Problem {
  std::size_t n, p;
  std::vector<double> x, beta, w;
};

Problem random_problem(std::size_t n, std::size_t p, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d(0.0, 3.0);
  Problem pr{n, p, std::vector<double>(n * p), std::vector<double>(p), std::vector<double>(n)};
  for (auto& v : pr.x) v = d(gen);
  for (auto& v : pr.beta) v = d(gen);
  for (auto& v : pr.w) v = d(gen);
  return pr;
}

}  // namespace

TEST(Kernels, ScalarAlwaysAvailable) {
  EXPECT_TRUE(available(Isa::Scalar));
  EXPECT_EQ(table(Isa::Scalar).isa, Isa::Scalar);
}

TEST(Kernels, ActiveRespectsEnvironmentOverride) {
  const char* env = std::getenv("PHIAP_KERNELS");
  if (env && std::string(env) == "scalar") {
    EXPECT_EQ(active().isa, Isa::Scalar);
  } else {
    const auto variants = vector_variants();
    if (!variants.empty()) EXPECT_NE(active().isa, Isa::Scalar);
  }
}

TEST(Kernels, ScalarLinearPredictorMatchesNaiveLoop) {
  const auto pr = random_problem(37, 5, 1);
  std::vector<double> eta(pr.n);
  table(Isa::Scalar).linear_predictor(pr.x.data(), pr.n, pr.p, pr.beta.data(), eta.data());
  for (std::size_t i = 0; i < pr.n; ++i) {
    double e = 0.0;
    for (std::size_t j = 0; j < pr.p; ++j) e += pr.x[j * pr.n + i] * pr.beta[j];
    EXPECT_NEAR(eta[i], e, 1e-12 * (1.0 + std::abs(e)));
  }
}

TEST(Kernels, VectorVariantsMatchScalarReference) {
  const auto variants = vector_variants();
  if (variants.empty()) GTEST_SKIP() << "no vector kernel on this CPU";
  const KernelTable& ref = table(Isa::Scalar);
  for (Isa isa : variants) {
    const KernelTable& vec = table(isa);
    for (std::size_t n : {1u, 2u, 3u, 7u, 8u, 9u, 15u, 16u, 17u, 33u, 100u, 1001u}) {
      for (std::size_t p : {1u, 2u, 4u, 10u, 13u}) {
        const auto pr = random_problem(n, p, n * 31 + p);
        std::vector<double> e_ref(n), e_vec(n), t_ref(p), t_vec(p);
        ref.linear_predictor(pr.x.data(), n, p, pr.beta.data(), e_ref.data());
        vec.linear_predictor(pr.x.data(), n, p, pr.beta.data(), e_vec.data());
        ref.transpose_times(pr.x.data(), n, p, pr.w.data(), t_ref.data());
        vec.transpose_times(pr.x.data(), n, p, pr.w.data(), t_vec.data());
        // Same sums in a different association order.
        for (std::size_t i = 0; i < n; ++i)
          EXPECT_NEAR(e_ref[i], e_vec[i], 1e-12 * (10.0 + std::abs(e_ref[i]))) << name(isa) << " n=" << n << " p=" << p;
        for (std::size_t j = 0; j < p; ++j)
          EXPECT_NEAR(t_ref[j], t_vec[j], 1e-11 * (std::sqrt(double(n)) * 10.0 + std::abs(t_ref[j])))
              << name(isa) << " n=" << n << " p=" << p;
      }
    }
  }
}

TEST(Kernels, UnavailableVariantThrows) {
  for (Isa isa : {Isa::Avx2, Isa::Neon})
    if (!available(isa)) EXPECT_ANY_THROW(table(isa));
}
