#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "phiap/dataset.hpp"
#include "phiap/model.hpp"

namespace phiap {

struct FitConfig {
  int max_iter = 500;
  /// Converged once the sup-norm of the gradient in (beta, logit c) is below this.
  double grad_tol = 1e-6;
  /// Secondary stop on the sup-norm of the accepted step.
  double param_tol = 1e-9;
  /// Starting point; default_init() when empty.
  std::optional<ModelParams> init;
  /// Added to the negative Hessian only when a Newton rescue step finds it singular.
  double ridge = 1e-8;
  /// |beta_j| above this raises the separation warning.
  double separation_bound = 30.0;
  /// Fit one sensitivity per stratum when the data carry strata.
  bool use_strata = true;
  /// Relative finite-difference step for the information matrix.
  double hessian_step = 1e-5;

  void validate() const;
};

enum class StopReason { GradientTolerance, StepTolerance, MaxIterations, LineSearchFailure };

struct FitResult {
  ModelParams params;
  /// Inverse observed information in (beta, c); NaN-filled when singular.
  Eigen::MatrixXd vcov;
  Eigen::VectorXd se;
  double loglik = 0.0;

  /// h / c, or sum_k N_k (h_k / c_k) / N with strata.
  double q_ratio = 0.0;
  /// Delta-method SE of q_ratio, treating h and c as independent.
  double q_ratio_se = 0.0;
  /// Mean predicted probability.
  double q_avg = 0.0;
  double q_avg_se = 0.0;
  /// h_k / c_k per stratum, present for stratified fits.
  std::optional<std::vector<double>> q_by_stratum;
  /// Anchor fraction, per sensitivity group.
  std::vector<double> h;

  bool converged = false;
  int iterations = 0;
  StopReason stop_reason = StopReason::MaxIterations;
  double grad_norm = 0.0;
  bool singular_information = false;
  bool separation_warning = false;
  /// Sensitivities pinned at the upper clamp because their stratum has no unlabeled rows.
  std::vector<bool> fixed_sensitivity;
  /// Log-likelihood after each accepted iterate, starting with the initial point.
  std::vector<double> loglik_trace;
};

/// Upper clamp for a sensitivity whose stratum has no unlabeled rows.
inline constexpr double kSensitivityClamp = 1.0 - 1e-6;

/// Starting values: logistic regression of S on X for beta, and
/// c_k = clamp(2 h_k / mean surrogate prediction, 0.1, 0.9).
ModelParams default_init(const Dataset& data, bool use_strata = true);

/// Maximum-likelihood fit of (beta, c) or (beta, {c_k}).
FitResult fit(const Dataset& data, const FitConfig& config = {});

struct PrevalenceEstimate {
  double q_ratio = 0.0;
  double q_avg = 0.0;
};

PrevalenceEstimate estimate_prevalence(const FitResult& fit, const Dataset& data);

/// Two-sided Wald p-value 2 * Phi(-|z|).
double wald_p_value(double estimate, double se);

}  // namespace phiap
