#include "phiap/model.hpp"

#include <cmath>
#include <string>

#include "phiap/error.hpp"
#include "phiap/kernels.hpp"

namespace phiap {
namespace {

void check_dimensions(const ModelParams& params, const Dataset& data) {
  if (static_cast<std::size_t>(params.beta.size()) != data.cols())
    throw DimensionError("beta has " + std::to_string(params.beta.size()) + " entries, data has " +
                         std::to_string(data.cols()) + " columns");
  if (params.sens.empty()) throw DimensionError("no sensitivity parameter");
  if (params.sens.size() > 1) {
    if (!data.has_strata()) throw DimensionError("stratified sensitivities but data has no strata");
    if (params.sens.size() != data.num_strata())
      throw DimensionError("sensitivity count " + std::to_string(params.sens.size()) +
                           " does not match " + std::to_string(data.num_strata()) + " strata");
  }
}

std::size_t sens_index(const ModelParams& params, const Dataset& data, std::size_t i) {
  return params.sens.size() == 1 ? 0 : static_cast<std::size_t>(data.stratum_of(i));
}

Eigen::VectorXd linear_predictor(const Eigen::VectorXd& beta, const Dataset& data) {
  Eigen::VectorXd eta(static_cast<Eigen::Index>(data.rows()));
  kernels::active().linear_predictor(data.design().data(), data.rows(), data.cols(), beta.data(),
                                     eta.data());
  return eta;
}

}  // namespace

void ModelParams::validate() const {
  if (!beta.allFinite()) throw Error("non-finite coefficient");
  if (sens.empty()) throw Error("no sensitivity parameter");
  for (double c : sens) {
    if (!(c > 0.0 && c < 1.0)) throw Error("sensitivity outside (0,1): " + std::to_string(c));
  }
}

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double log1m_scaled_sigmoid(double c, double eta) {
  if (c <= 0.0) return 0.0;
  const double cp = c * sigmoid(eta);
  if (cp <= 0.5) return std::log1p(-cp);
  // Here eta > 0: 1 - c*P = ((1-c) + e^-eta) / (1 + e^-eta).
  const double t = std::exp(-eta);
  return std::log((1.0 - c) + t) - std::log1p(t);
}

double predict_prob(const ModelParams& params, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(params.beta.size()))
    throw DimensionError("covariate vector has " + std::to_string(x.size()) + " entries, beta has " +
                         std::to_string(params.beta.size()));
  double eta = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) eta += x[j] * params.beta[static_cast<Eigen::Index>(j)];
  return sigmoid(eta);
}

Eigen::VectorXd predict_probs(const Eigen::VectorXd& beta, const Dataset& data) {
  if (static_cast<std::size_t>(beta.size()) != data.cols())
    throw DimensionError("beta does not match data columns");
  Eigen::VectorXd p = linear_predictor(beta, data);
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = sigmoid(p[i]);
  return p;
}

std::vector<double> row_sensitivities(const ModelParams& params, const Dataset& data) {
  check_dimensions(params, data);
  std::vector<double> out(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) out[i] = params.sens[sens_index(params, data, i)];
  return out;
}

double log_likelihood(const ModelParams& params, const Dataset& data) {
  check_dimensions(params, data);
  const Eigen::VectorXd eta = linear_predictor(params.beta, data);
  const auto s = data.anchor();
  std::vector<double> log_c(params.sens.size());
  for (std::size_t k = 0; k < log_c.size(); ++k) log_c[k] = std::log(params.sens[k]);

  double ll = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto k = sens_index(params, data, i);
    const double e = eta[static_cast<Eigen::Index>(i)];
    ll += s[i] ? log_c[k] - softplus(-e) : log1m_scaled_sigmoid(params.sens[k], e);
  }
  return ll;
}

LikelihoodEval evaluate(const ModelParams& params, const Dataset& data) {
  check_dimensions(params, data);
  const auto n = data.rows();
  const auto p = data.cols();
  const Eigen::VectorXd eta = linear_predictor(params.beta, data);
  const auto s = data.anchor();

  std::vector<double> log_c(params.sens.size());
  for (std::size_t k = 0; k < log_c.size(); ++k) log_c[k] = std::log(params.sens[k]);

  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  std::vector<double> dsens(params.sens.size(), 0.0);
  double ll = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = sens_index(params, data, i);
    const double c = params.sens[k];
    const double e = eta[static_cast<Eigen::Index>(i)];
    if (s[i]) {
      ll += log_c[k] - softplus(-e);
      w[static_cast<Eigen::Index>(i)] = sigmoid(-e);  // 1 - P
      dsens[k] += 1.0 / c;
    } else {
      const double log_r = log1m_scaled_sigmoid(c, e);
      const double r = std::exp(log_r);  // 1 - cP
      const double prob = sigmoid(e);
      ll += log_r;
      w[static_cast<Eigen::Index>(i)] = -c * prob * sigmoid(-e) / r;
      dsens[k] -= prob / r;
    }
  }

  LikelihoodEval out;
  out.loglik = ll;
  out.grad.resize(static_cast<Eigen::Index>(p + dsens.size()));
  kernels::active().transpose_times(data.design().data(), n, p, w.data(), out.grad.data());
  for (std::size_t k = 0; k < dsens.size(); ++k) out.grad[static_cast<Eigen::Index>(p + k)] = dsens[k];
  return out;
}

Eigen::VectorXd gradient(const ModelParams& params, const Dataset& data) {
  return evaluate(params, data).grad;
}

}  // namespace phiap
