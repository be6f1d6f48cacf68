#include <algorithm>
#include <cmath>

#include "phiap/estimation.hpp"

namespace phiap {
namespace {

constexpr int kSurrogateIterations = 25;

// Ordinary logistic regression of S on X by damped Newton steps.
Eigen::VectorXd surrogate_fit(const Dataset& data) {
  const auto& x = data.design();
  const auto s = data.anchor();
  const auto n = static_cast<Eigen::Index>(data.rows());
  const auto p = x.cols();

  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = s[static_cast<std::size_t>(i)];

  auto loglik = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = x * b;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) ll += y[i] > 0 ? -softplus(-eta[i]) : -softplus(eta[i]);
    return ll;
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  const double h = data.anchor_fraction();
  beta[0] = std::log(h / (1.0 - h));
  double ll = loglik(beta);
  for (int it = 0; it < kSurrogateIterations; ++it) {
    const Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd prob(n), weight(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      prob[i] = sigmoid(eta[i]);
      weight[i] = prob[i] * (1.0 - prob[i]);
    }
    const Eigen::VectorXd score = x.transpose() * (y - prob);
    Eigen::MatrixXd info = x.transpose() * weight.asDiagonal() * x;
    info.diagonal().array() += 1e-8 * (1.0 + info.diagonal().array().abs());
    const Eigen::VectorXd step = info.ldlt().solve(score);
    if (!step.allFinite()) break;

    double t = 1.0;
    bool accepted = false;
    for (int half = 0; half < 30; ++half, t *= 0.5) {
      const Eigen::VectorXd trial = beta + t * step;
      const double ll_trial = loglik(trial);
      if (std::isfinite(ll_trial) && ll_trial >= ll) {
        beta = trial;
        ll = ll_trial;
        accepted = true;
        break;
      }
    }
    if (!accepted || (t * step).lpNorm<Eigen::Infinity>() < 1e-8) break;
  }
  return beta;
}

}  // namespace

ModelParams default_init(const Dataset& data, bool use_strata) {
  ModelParams params;
  params.beta = surrogate_fit(data);

  const bool stratified = use_strata && data.has_strata() && data.num_strata() > 1;
  const std::size_t groups = stratified ? data.num_strata() : 1;
  std::vector<double> anchors(groups, 0.0), pred_sum(groups, 0.0), sizes(groups, 0.0);
  const Eigen::VectorXd prob = predict_probs(params.beta, data);
  const auto s = data.anchor();
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto k = stratified ? static_cast<std::size_t>(data.stratum_of(i)) : 0;
    anchors[k] += s[i];
    pred_sum[k] += prob[static_cast<Eigen::Index>(i)];
    sizes[k] += 1.0;
  }
  params.sens.resize(groups);
  for (std::size_t k = 0; k < groups; ++k) {
    const double h = anchors[k] / sizes[k];
    const double mean_pred = pred_sum[k] / sizes[k];
    const double c = mean_pred > 0.0 ? 2.0 * h / mean_pred : 0.9;
    params.sens[k] = std::clamp(c, 0.1, 0.9);
  }
  return params;
}

}  // namespace phiap
