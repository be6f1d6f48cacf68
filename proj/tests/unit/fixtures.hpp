#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "phiap/dataset.hpp"
#include "phiap/model.hpp"

namespace fixtures {

/// Random PU data: intercept plus (p-1) standard-normal columns, Y from the
/// logistic model, S ~ Bernoulli(c_Z) among cases. Anchors are forced into
/// every stratum and at least one unlabeled row is kept so the Dataset is valid.
inline phiap::Dataset random_dataset(std::size_t n, std::size_t p, std::uint64_t seed,
                                     const Eigen::VectorXd& beta, const std::vector<double>& c,
                                     bool stratified = false) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> norm(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  std::vector<std::uint8_t> s(n);
  std::vector<int> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = 1.0;
    for (std::size_t j = 1; j < p; ++j) x(r, static_cast<Eigen::Index>(j)) = norm(gen);
    z[i] = stratified ? static_cast<int>(i % c.size()) : 0;
    const double eta = x.row(r).dot(beta);
    const bool y = unif(gen) < 1.0 / (1.0 + std::exp(-eta));
    s[i] = y && unif(gen) < c[static_cast<std::size_t>(z[i])] ? 1 : 0;
  }
  const std::size_t groups = stratified ? c.size() : 1;
  for (std::size_t g = 0; g < groups; ++g) s[g] = 1;
  s[n - 1] = 0;
  if (stratified) return phiap::Dataset(x, s, {}, z);
  return phiap::Dataset(x, s, {});
}

/// Straightforward double loop, written without any production helper.
inline double oracle_loglik(const Eigen::MatrixXd& x, const std::vector<std::uint8_t>& s,
                            const std::vector<double>& beta, const std::vector<double>& c_row) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double eta = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) eta += x(i, j) * beta[static_cast<std::size_t>(j)];
    const double prob = 1.0 / (1.0 + std::exp(-eta));
    const double cp = c_row[static_cast<std::size_t>(i)] * prob;
    total += s[static_cast<std::size_t>(i)] ? std::log(cp) : std::log(1.0 - cp);
  }
  return total;
}

inline std::vector<std::uint8_t> anchors_of(const phiap::Dataset& d) {
  return {d.anchor().begin(), d.anchor().end()};
}

}  // namespace fixtures

namespace fixtures {

struct GridOptimum {
  double b0 = 0.0, b1 = 0.0, c = 0.0;
  double loglik = -HUGE_VAL;
  /// The optimum sits on the edge of the search box.
  bool on_boundary = false;
};

/// Brute-force maximizer of the two-coefficient likelihood over
/// beta in [-5,5]^2, c in [0.05,0.95]: a 0.05 grid, then a 0.01 grid on a
/// +-0.1 box around the best point, then a 0.001 grid on a +-0.01 box.
inline GridOptimum grid_search(const Eigen::MatrixXd& x, const std::vector<std::uint8_t>& s) {
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<double> prob(n);
  GridOptimum best;
  auto scan = [&](double b0_lo, double b0_hi, double b1_lo, double b1_hi, double c_lo, double c_hi, double step) {
    const int nb0 = static_cast<int>(std::lround((b0_hi - b0_lo) / step));
    const int nb1 = static_cast<int>(std::lround((b1_hi - b1_lo) / step));
    const int nc = static_cast<int>(std::lround((c_hi - c_lo) / step));
    for (int a = 0; a <= nb0; ++a) {
      const double b0 = b0_lo + a * step;
      for (int b = 0; b <= nb1; ++b) {
        const double b1 = b1_lo + b * step;
        for (std::size_t i = 0; i < n; ++i)
          prob[i] = 1.0 / (1.0 + std::exp(-(b0 + b1 * x(static_cast<Eigen::Index>(i), 1))));
        for (int k = 0; k <= nc; ++k) {
          const double c = c_lo + k * step;
          double ll = 0.0;
          for (std::size_t i = 0; i < n; ++i) ll += s[i] ? std::log(c * prob[i]) : std::log(1.0 - c * prob[i]);
          if (ll > best.loglik) best = {b0, b1, c, ll, false};
        }
      }
    }
  };
  scan(-5.0, 5.0, -5.0, 5.0, 0.05, 0.95, 0.05);
  best.on_boundary = std::abs(best.b0) > 4.99 || std::abs(best.b1) > 4.99 || best.c < 0.051 || best.c > 0.949;
  const bool boundary = best.on_boundary;
  // Each level recentres until its optimum stops moving, so flat ridges are followed.
  for (double step : {0.01, 0.001}) {
    const double r = step * 10.0;
    for (int pass = 0; pass < 200; ++pass) {
      const GridOptimum centre = best;
      scan(centre.b0 - r, centre.b0 + r, centre.b1 - r, centre.b1 + r, std::max(0.05, centre.c - r),
           std::min(0.95, centre.c + r), step);
      if (best.b0 == centre.b0 && best.b1 == centre.b1 && best.c == centre.c) break;
    }
  }
  // Refinement may still walk onto the edge of the search box.
  best.on_boundary = boundary || std::abs(best.b0) > 4.999 || std::abs(best.b1) > 4.999 || best.c < 0.0501 ||
                     best.c > 0.9499;
  return best;
}

/// Tiny one-covariate fixture for the grid oracle.
inline phiap::Dataset tiny_fixture(std::size_t n, std::uint64_t seed) {
  Eigen::VectorXd beta(2);
  beta << -0.5, 2.0;
  return random_dataset(n, 2, seed, beta, {0.6});
}

}  // namespace fixtures
