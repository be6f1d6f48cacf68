#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "phiap/error.hpp"
#include "phiap/estimation.hpp"

namespace phiap {
namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 60;
// Largest sup-norm step the line search will try from one iterate.
constexpr double kMaxStep = 5.0;
constexpr int kMaxNewtonRescues = 20;

double logit(double c) { return std::log(c / (1.0 - c)); }

// Maps between the model parameters and the unconstrained vector the
// optimizer works on: (beta, logit c_k for every free sensitivity).
class Parameterization {
 public:
  Parameterization(const Dataset& data, std::size_t groups, std::vector<bool> fixed)
      : data_(data), p_(data.cols()), groups_(groups), fixed_(std::move(fixed)) {
    for (std::size_t k = 0; k < groups_; ++k)
      if (!fixed_[k]) free_.push_back(k);
  }

  Eigen::Index dim() const { return static_cast<Eigen::Index>(p_ + free_.size()); }
  const std::vector<std::size_t>& free_sens() const { return free_; }

  ModelParams to_params(const Eigen::VectorXd& theta) const {
    ModelParams out;
    out.beta = theta.head(static_cast<Eigen::Index>(p_));
    out.sens.assign(groups_, kSensitivityClamp);
    for (std::size_t f = 0; f < free_.size(); ++f)
      out.sens[free_[f]] = sigmoid(theta[static_cast<Eigen::Index>(p_ + f)]);
    return out;
  }

  Eigen::VectorXd to_theta(const ModelParams& params) const {
    Eigen::VectorXd theta(dim());
    theta.head(static_cast<Eigen::Index>(p_)) = params.beta;
    for (std::size_t f = 0; f < free_.size(); ++f)
      theta[static_cast<Eigen::Index>(p_ + f)] = logit(params.sens[free_[f]]);
    return theta;
  }

  // Log-likelihood and its gradient with respect to theta.
  LikelihoodEval eval(const Eigen::VectorXd& theta) const {
    const ModelParams params = to_params(theta);
    LikelihoodEval full = evaluate(params, data_);
    LikelihoodEval out;
    out.loglik = full.loglik;
    out.grad.resize(dim());
    out.grad.head(static_cast<Eigen::Index>(p_)) = full.grad.head(static_cast<Eigen::Index>(p_));
    for (std::size_t f = 0; f < free_.size(); ++f) {
      const double c = params.sens[free_[f]];
      out.grad[static_cast<Eigen::Index>(p_ + f)] =
          full.grad[static_cast<Eigen::Index>(p_ + free_[f])] * c * (1.0 - c);
    }
    return out;
  }

 private:
  const Dataset& data_;
  std::size_t p_;
  std::size_t groups_;
  std::vector<bool> fixed_;
  std::vector<std::size_t> free_;
};

double sup_norm(const Eigen::VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

// Central differences of an analytic gradient. Column j uses step
// rel_step * max(1, |x_j|), shrunk by `limit` when x_j is near a bound.
template <typename GradFn, typename LimitFn>
Eigen::MatrixXd fd_hessian(const Eigen::VectorXd& x, double rel_step, GradFn&& grad, LimitFn&& limit) {
  const auto d = x.size();
  Eigen::MatrixXd hess(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double h = limit(j, rel_step * std::max(1.0, std::abs(x[j])));
    Eigen::VectorXd up = x, down = x;
    up[j] += h;
    down[j] -= h;
    hess.col(j) = (grad(up) - grad(down)) / (2.0 * h);
  }
  return 0.5 * (hess + hess.transpose());
}

struct LineSearchResult {
  bool accepted = false;
  Eigen::VectorXd theta;
  LikelihoodEval eval;
};

// Backtracking on f = -loglik along `dir`. A step that fails Armijo only
// because the gain is below floating-point noise is still taken when it does
// not lower the log-likelihood and shrinks the gradient.
LineSearchResult line_search(const Parameterization& par, const Eigen::VectorXd& theta,
                             const LikelihoodEval& cur, const Eigen::VectorXd& dir) {
  LineSearchResult res;
  const double slope = cur.grad.dot(dir);  // d loglik / dt at t = 0
  if (!(slope > 0.0)) return res;
  double t = std::min(1.0, kMaxStep / std::max(sup_norm(dir), 1e-300));
  for (int k = 0; k < kMaxHalvings; ++k, t *= 0.5) {
    Eigen::VectorXd trial = theta + t * dir;
    LikelihoodEval ev = par.eval(trial);
    if (!std::isfinite(ev.loglik) || !ev.grad.allFinite()) continue;
    const bool armijo = ev.loglik >= cur.loglik + kArmijo * t * slope;
    const bool within_noise = ev.loglik >= cur.loglik && sup_norm(ev.grad) < sup_norm(cur.grad);
    if (armijo || within_noise) {
      res.accepted = true;
      res.theta = std::move(trial);
      res.eval = std::move(ev);
      return res;
    }
  }
  return res;
}

// Newton direction from a finite-difference Hessian in theta, with the
// ridge grown until the negative Hessian is positive definite.
std::optional<Eigen::VectorXd> newton_direction(const Parameterization& par, const Eigen::VectorXd& theta,
                                                const Eigen::VectorXd& grad, double ridge, double rel_step) {
  Eigen::MatrixXd neg_hess =
      -fd_hessian(theta, rel_step, [&](const Eigen::VectorXd& t) { return par.eval(t).grad; },
                  [](Eigen::Index, double h) { return h; });
  if (!neg_hess.allFinite()) return std::nullopt;
  const double scale = std::max(1.0, neg_hess.diagonal().cwiseAbs().maxCoeff());
  double lambda = 0.0;
  for (int attempt = 0; attempt < 40; ++attempt) {
    Eigen::MatrixXd m = neg_hess;
    m.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd dir = llt.solve(grad);
      if (dir.allFinite()) return dir;
    }
    lambda = lambda == 0.0 ? ridge * scale : lambda * 10.0;
  }
  return std::nullopt;
}

struct OptimizerOutput {
  Eigen::VectorXd theta;
  LikelihoodEval eval;
  int iterations = 0;
  StopReason reason = StopReason::MaxIterations;
  std::vector<double> trace;
};

OptimizerOutput maximize(const Parameterization& par, Eigen::VectorXd theta, const FitConfig& cfg) {
  OptimizerOutput out;
  LikelihoodEval cur = par.eval(theta);
  if (!std::isfinite(cur.loglik) || !cur.grad.allFinite())
    throw Error("log-likelihood is not finite at the starting values");
  out.trace.push_back(cur.loglik);

  const auto d = par.dim();
  auto scaled_identity = [&](const Eigen::VectorXd& g) {
    const double gn = g.norm();
    return Eigen::MatrixXd(Eigen::MatrixXd::Identity(d, d) * (gn > 1.0 ? 1.0 / gn : 1.0));
  };
  Eigen::MatrixXd inv_hess = scaled_identity(cur.grad);
  bool fresh = true;  // inv_hess has not been updated since the last reset
  int rescues = 0;

  int iter = 0;
  for (; iter < cfg.max_iter; ++iter) {
    if (sup_norm(cur.grad) < cfg.grad_tol) {
      out.reason = StopReason::GradientTolerance;
      break;
    }
    // Ascent direction for loglik: inv_hess approximates (-Hessian)^{-1}.
    Eigen::VectorXd dir = inv_hess * cur.grad;
    LineSearchResult ls = line_search(par, theta, cur, dir);
    if (!ls.accepted && !fresh) {
      inv_hess = scaled_identity(cur.grad);
      fresh = true;
      dir = inv_hess * cur.grad;
      ls = line_search(par, theta, cur, dir);
    }
    if (!ls.accepted) {
      if (rescues++ >= kMaxNewtonRescues) {
        out.reason = StopReason::LineSearchFailure;
        break;
      }
      auto newton = newton_direction(par, theta, cur.grad, cfg.ridge, cfg.hessian_step);
      if (newton) ls = line_search(par, theta, cur, *newton);
      if (!ls.accepted) {
        out.reason = StopReason::LineSearchFailure;
        break;
      }
      dir = *newton;
    }

    const Eigen::VectorXd s = ls.theta - theta;
    // Curvature pair for the minimization of -loglik.
    const Eigen::VectorXd y = cur.grad - ls.eval.grad;
    theta = std::move(ls.theta);
    cur = std::move(ls.eval);
    out.trace.push_back(cur.loglik);

    const double ys = y.dot(s);
    if (ys > 1e-12 * s.norm() * y.norm()) {
      if (fresh) {
        inv_hess = Eigen::MatrixXd::Identity(d, d) * (ys / y.squaredNorm());
        fresh = false;
      }
      const double rho = 1.0 / ys;
      const Eigen::MatrixXd left = Eigen::MatrixXd::Identity(d, d) - rho * s * y.transpose();
      inv_hess = left * inv_hess * left.transpose() + rho * s * s.transpose();
    }
    if (sup_norm(s) < cfg.param_tol) {
      ++iter;
      out.reason = sup_norm(cur.grad) < cfg.grad_tol ? StopReason::GradientTolerance : StopReason::StepTolerance;
      break;
    }
  }
  if (iter >= cfg.max_iter && sup_norm(cur.grad) < cfg.grad_tol) out.reason = StopReason::GradientTolerance;

  out.theta = std::move(theta);
  out.eval = std::move(cur);
  out.iterations = iter;
  return out;
}

// Observed information in the original (beta, c) coordinates.
void fill_information(FitResult& res, const Dataset& data, const std::vector<std::size_t>& free_sens,
                      double rel_step) {
  const auto p = static_cast<Eigen::Index>(data.cols());
  const auto total = static_cast<Eigen::Index>(res.params.num_params());
  const auto d = p + static_cast<Eigen::Index>(free_sens.size());

  Eigen::VectorXd x(d);
  x.head(p) = res.params.beta;
  for (std::size_t f = 0; f < free_sens.size(); ++f) x[p + static_cast<Eigen::Index>(f)] = res.params.sens[free_sens[f]];

  auto to_params = [&](const Eigen::VectorXd& v) {
    ModelParams mp = res.params;
    mp.beta = v.head(p);
    for (std::size_t f = 0; f < free_sens.size(); ++f) mp.sens[free_sens[f]] = v[p + static_cast<Eigen::Index>(f)];
    return mp;
  };
  auto grad = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd g = gradient(to_params(v), data);
    Eigen::VectorXd out(d);
    out.head(p) = g.head(p);
    for (std::size_t f = 0; f < free_sens.size(); ++f) out[p + static_cast<Eigen::Index>(f)] = g[p + static_cast<Eigen::Index>(free_sens[f])];
    return out;
  };
  auto limit = [&](Eigen::Index j, double h) {
    if (j < p) return h;
    const double c = x[j];
    return std::min({h, 0.5 * c, 0.5 * (1.0 - c)});
  };

  const Eigen::MatrixXd info = -fd_hessian(x, rel_step, grad, limit);
  res.vcov = Eigen::MatrixXd::Zero(total, total);
  res.se = Eigen::VectorXd::Zero(total);

  bool singular = !info.allFinite();
  Eigen::MatrixXd inv;
  if (!singular) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
    const auto& ev = eig.eigenvalues();
    singular = eig.info() != Eigen::Success || ev.minCoeff() <= 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (!singular) inv = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  }
  if (singular) {
    res.singular_information = true;
    res.vcov.setConstant(std::numeric_limits<double>::quiet_NaN());
    res.se.setConstant(std::numeric_limits<double>::quiet_NaN());
    return;
  }
  inv = 0.5 * (inv + inv.transpose());

  // Scatter back; fixed sensitivities keep zero rows and columns.
  std::vector<Eigen::Index> slot(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < p; ++j) slot[static_cast<std::size_t>(j)] = j;
  for (std::size_t f = 0; f < free_sens.size(); ++f)
    slot[static_cast<std::size_t>(p) + f] = p + static_cast<Eigen::Index>(free_sens[f]);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) res.vcov(slot[static_cast<std::size_t>(a)], slot[static_cast<std::size_t>(b)]) = inv(a, b);
  res.se = res.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
}

void fill_prevalence(FitResult& res, const Dataset& data) {
  const auto p = static_cast<Eigen::Index>(data.cols());
  const std::size_t groups = res.params.sens.size();
  const double n = static_cast<double>(data.rows());

  std::vector<double> sizes(groups, 0.0), anchors(groups, 0.0);
  const auto s = data.anchor();
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto k = groups == 1 ? 0 : static_cast<std::size_t>(data.stratum_of(i));
    sizes[k] += 1.0;
    anchors[k] += s[i];
  }

  res.h.assign(groups, 0.0);
  std::vector<double> q_k(groups);
  Eigen::VectorXd dq_dc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(groups));
  double q = 0.0, var_h_part = 0.0;
  for (std::size_t k = 0; k < groups; ++k) {
    const double h = anchors[k] / sizes[k];
    const double c = res.params.sens[k];
    const double w = sizes[k] / n;
    res.h[k] = h;
    q_k[k] = h / c;
    q += w * q_k[k];
    var_h_part += w * w * (h * (1.0 - h) / sizes[k]) / (c * c);
    dq_dc[static_cast<Eigen::Index>(k)] = -w * h / (c * c);
  }
  res.q_ratio = q;
  if (groups > 1) res.q_by_stratum = q_k;

  const Eigen::MatrixXd v_cc = res.vcov.block(p, p, static_cast<Eigen::Index>(groups), static_cast<Eigen::Index>(groups));
  res.q_ratio_se = std::sqrt(std::max(0.0, var_h_part + dq_dc.dot(v_cc * dq_dc)));

  const Eigen::VectorXd prob = predict_probs(res.params.beta, data);
  res.q_avg = prob.mean();
  Eigen::VectorXd w = prob.array() * (1.0 - prob.array()) / n;
  const Eigen::VectorXd dq_db = data.design().transpose() * w;
  const Eigen::MatrixXd v_bb = res.vcov.topLeftCorner(p, p);
  res.q_avg_se = std::sqrt(std::max(0.0, dq_db.dot(v_bb * dq_db)));
}

}  // namespace

void FitConfig::validate() const {
  if (max_iter < 1) throw UsageError("max_iter must be at least 1");
  if (!(grad_tol > 0.0) || !(param_tol > 0.0)) throw UsageError("tolerances must be positive");
  if (!(ridge >= 0.0)) throw UsageError("ridge must be non-negative");
  if (!(hessian_step > 0.0)) throw UsageError("hessian_step must be positive");
}

FitResult fit(const Dataset& data, const FitConfig& config) {
  config.validate();
  const bool stratified = config.use_strata && data.has_strata() && data.num_strata() > 1;
  const std::size_t groups = stratified ? data.num_strata() : 1;

  ModelParams start = config.init ? *config.init : default_init(data, config.use_strata);
  if (static_cast<std::size_t>(start.beta.size()) != data.cols())
    throw DimensionError("initial beta does not match data columns");
  if (start.sens.size() != groups)
    throw DimensionError("initial sensitivities: expected " + std::to_string(groups) + ", got " +
                         std::to_string(start.sens.size()));
  start.validate();

  // A group with no unlabeled rows has a likelihood increasing in c up to 1.
  std::vector<bool> fixed(groups, false);
  {
    std::vector<std::size_t> unlabeled(groups, 0);
    const auto s = data.anchor();
    for (std::size_t i = 0; i < data.rows(); ++i)
      if (!s[i]) ++unlabeled[groups == 1 ? 0 : static_cast<std::size_t>(data.stratum_of(i))];
    for (std::size_t k = 0; k < groups; ++k) {
      fixed[k] = unlabeled[k] == 0;
      if (fixed[k]) start.sens[k] = kSensitivityClamp;
    }
  }

  const Parameterization par(data, groups, fixed);
  OptimizerOutput opt = maximize(par, par.to_theta(start), config);

  FitResult res;
  res.params = par.to_params(opt.theta);
  res.loglik = log_likelihood(res.params, data);
  res.iterations = opt.iterations;
  res.stop_reason = opt.reason;
  res.grad_norm = sup_norm(opt.eval.grad);
  res.converged = opt.reason == StopReason::GradientTolerance || opt.reason == StopReason::StepTolerance;
  res.loglik_trace = std::move(opt.trace);
  res.fixed_sensitivity = fixed;
  res.separation_warning = (res.params.beta.array().abs() > config.separation_bound).any();

  fill_information(res, data, par.free_sens(), config.hessian_step);
  fill_prevalence(res, data);
  return res;
}

PrevalenceEstimate estimate_prevalence(const FitResult& fit, const Dataset& data) {
  const auto& sens = fit.params.sens;
  if (sens.size() > 1 && sens.size() != data.num_strata())
    throw DimensionError("fit has " + std::to_string(sens.size()) + " sensitivities, data has " +
                         std::to_string(data.num_strata()) + " strata");
  PrevalenceEstimate out;
  const std::size_t groups = sens.size();
  std::vector<double> sizes(groups, 0.0), anchors(groups, 0.0);
  const auto s = data.anchor();
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto k = groups == 1 ? 0 : static_cast<std::size_t>(data.stratum_of(i));
    sizes[k] += 1.0;
    anchors[k] += s[i];
  }
  for (std::size_t k = 0; k < groups; ++k) out.q_ratio += sizes[k] * (anchors[k] / sizes[k]) / sens[k];
  out.q_ratio /= static_cast<double>(data.rows());
  out.q_avg = predict_probs(fit.params.beta, data).mean();
  return out;
}

double wald_p_value(double estimate, double se) {
  if (!(se > 0.0) || !std::isfinite(se)) return std::numeric_limits<double>::quiet_NaN();
  return std::erfc(std::abs(estimate / se) / std::sqrt(2.0));
}

}  // namespace phiap
