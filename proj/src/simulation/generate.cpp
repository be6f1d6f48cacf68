#include <cmath>
#include <random>
#include <string>

#include "phiap/error.hpp"
#include "phiap/rng.hpp"
#include "phiap/simulation.hpp"

namespace phiap::sim {
namespace {

constexpr std::size_t kCovariates = 9;
constexpr double kNormalMean = 5.0;
constexpr double kNormalSecondMoment = 10.0;  // variance or SD, per NormalScale
constexpr std::uint64_t kDataStream = 1;

struct Draws {
  Eigen::MatrixXd x;
  std::vector<std::uint8_t> y, s;
  std::vector<int> z;
};

Draws draw_rows(std::size_t n, const SimDesign& design, const std::vector<double>& beta, std::mt19937_64& gen) {
  const double sd = design.normal_scale == NormalScale::Variance ? std::sqrt(kNormalSecondMoment) : kNormalSecondMoment;
  std::normal_distribution<double> normal(kNormalMean, sd);
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Draws d;
  d.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kCovariates + 1));
  d.y.resize(n);
  d.s.resize(n);
  if (design.stratified) d.z.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    d.x(r, 0) = 1.0;
    for (std::size_t g = 0; g < 3; ++g) {
      const auto col = static_cast<Eigen::Index>(1 + 3 * g);
      d.x(r, col) = normal(gen);
      d.x(r, col + 1) = coin(gen) ? 1.0 : 0.0;
      double u = unif(gen);
      while (u <= 0.0) u = unif(gen);
      d.x(r, col + 2) = std::log(u / (1.0 - u));
    }
    int z = 0;
    if (design.stratified) {
      z = coin(gen) ? 1 : 0;
      d.z[i] = z;
    }
    double eta = 0.0;
    for (std::size_t j = 0; j <= kCovariates; ++j) eta += beta[j] * d.x(r, static_cast<Eigen::Index>(j));
    const bool y = unif(gen) < sigmoid(eta);
    const double c = design.c_true[design.stratified ? static_cast<std::size_t>(z) : 0];
    d.y[i] = y ? 1 : 0;
    d.s[i] = (y && unif(gen) < c) ? 1 : 0;
  }
  return d;
}

std::vector<std::string> feature_names() {
  std::vector<std::string> names{"(Intercept)"};
  for (std::size_t j = 1; j <= kCovariates; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

Dataset to_dataset(Draws& d, bool stratified) {
  std::optional<std::vector<int>> z;
  if (stratified) z = std::move(d.z);
  return Dataset(std::move(d.x), std::move(d.s), feature_names(), std::move(z));
}

}  // namespace

double intercept_for_prevalence(double prevalence) {
  struct Row {
    double prevalence, intercept;
  };
  static constexpr Row kTable[] = {{0.05, -2.5}, {0.10, 1.0}, {0.15, 3.3}, {0.20, 5.4}};
  for (const auto& row : kTable)
    if (std::abs(row.prevalence - prevalence) < 1e-9) return row.intercept;
  throw UsageError("prevalence must be one of 0.05, 0.10, 0.15, 0.20 (or set the intercept directly)");
}

void SimDesign::validate() const {
  if (beta_true.size() != kCovariates + 1) throw UsageError("beta_true needs 10 entries (beta_0 .. beta_9)");
  if (prevalence_target) (void)intercept_for_prevalence(*prevalence_target);
  if (n_train < 1 || n_test < 1 || replicates < 1) throw UsageError("n_train, n_test and replicates must be >= 1");
  const std::size_t want = stratified ? 2 : 1;
  if (c_true.size() != want)
    throw UsageError(stratified ? "stratified design needs two sensitivities" : "design needs one sensitivity");
  for (double c : c_true)
    if (!(c > 0.0 && c <= 1.0)) throw UsageError("sensitivities must lie in (0,1]");
  for (double v : thresholds)
    if (!(v > 0.0 && v < 1.0)) throw UsageError("thresholds must lie strictly inside (0,1)");
  if (edges.size() < 2) throw UsageError("need at least two calibration edges");
  fit_config.validate();
}

std::vector<double> SimDesign::effective_beta() const {
  std::vector<double> beta = beta_true;
  if (prevalence_target) beta[0] = intercept_for_prevalence(*prevalence_target);
  return beta;
}

SimSample generate(const SimDesign& design, std::size_t replicate_index) {
  design.validate();
  const auto beta = design.effective_beta();
  auto gen = substream(design.seed, replicate_index, kDataStream);
  Draws train = draw_rows(design.n_train, design, beta, gen);
  Draws test = draw_rows(design.n_test, design, beta, gen);
  std::vector<std::uint8_t> train_y = train.y, test_y = test.y;
  return SimSample{to_dataset(train, design.stratified), std::move(train_y), to_dataset(test, design.stratified),
                   std::move(test_y)};
}

std::vector<std::size_t> fitted_columns(FittedModel model) {
  switch (model) {
    case FittedModel::DropWeak:
      return {0, 4, 5, 6, 7, 8, 9};
    case FittedModel::DropStrong:
      return {0, 1, 2, 3, 4, 5, 6};
    case FittedModel::Full:
      break;
  }
  return {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
}

}  // namespace phiap::sim
