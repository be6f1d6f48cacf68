#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "phiap/dataset.hpp"

namespace phiap {

/// Coefficients beta (intercept included) and anchor sensitivities.
///
/// `sens` holds one entry for a constant sensitivity, or one entry per
/// stratum. A single entry applies to every row even when the data carry
/// strata, which is how an unstratified fit of stratified data is expressed.
struct ModelParams {
  Eigen::VectorXd beta;
  std::vector<double> sens;

  bool stratified() const { return sens.size() > 1; }
  std::size_t num_params() const { return static_cast<std::size_t>(beta.size()) + sens.size(); }

  /// Throws Error unless beta is finite and every sensitivity is in (0,1).
  void validate() const;
};

/// Numerically stable logistic function.
double sigmoid(double eta);
/// log(1 + exp(x)) without overflow.
double softplus(double x);
/// log(1 - c * sigmoid(eta)) for c in [0,1].
double log1m_scaled_sigmoid(double c, double eta);

double predict_prob(const ModelParams& params, std::span<const double> x);
/// P(X_i; beta) for every row.
Eigen::VectorXd predict_probs(const Eigen::VectorXd& beta, const Dataset& data);

/// Sensitivity that applies to each row.
std::vector<double> row_sensitivities(const ModelParams& params, const Dataset& data);

/// sum_i S_i log(c_i P_i) + (1 - S_i) log(1 - c_i P_i)
double log_likelihood(const ModelParams& params, const Dataset& data);

/// (d/d beta, d/d c_k) of log_likelihood; length p + sens.size().
Eigen::VectorXd gradient(const ModelParams& params, const Dataset& data);

struct LikelihoodEval {
  double loglik = 0.0;
  Eigen::VectorXd grad;
};

/// log_likelihood and gradient in one pass over the rows.
LikelihoodEval evaluate(const ModelParams& params, const Dataset& data);

}  // namespace phiap
