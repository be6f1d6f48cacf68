#include <cmath>
#include <limits>
#include <string>

#include "phiap/diagnostics.hpp"
#include "phiap/error.hpp"

namespace phiap {

std::vector<double> default_calibration_edges() {
  std::vector<double> edges;
  for (int k = 0; k <= 10; ++k) edges.push_back(k / 10.0);
  return edges;
}

CalibrationTable calibration_table(const FitResult& fit, const Dataset& data, std::span<const double> edges,
                                   std::optional<double> q_star) {
  const Eigen::VectorXd prob = predict_probs(fit.params.beta, data);
  const std::vector<double> sens = row_sensitivities(fit.params, data);
  return calibration_table(std::span<const double>(prob.data(), static_cast<std::size_t>(prob.size())), sens,
                           data.anchor(), edges, q_star.value_or(fit.q_ratio));
}

CalibrationTable calibration_table(std::span<const double> prob, std::span<const double> row_sens,
                                   std::span<const std::uint8_t> anchor, std::span<const double> edges,
                                   double q_star) {
  const std::size_t n = prob.size();
  if (row_sens.size() != n || anchor.size() != n) throw DimensionError("calibration inputs differ in length");
  if (n == 0) throw DataError("calibration needs at least one row");
  if (edges.size() < 2) throw UsageError("calibration needs at least two edges");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    if (!(edges[k] >= 0.0 && edges[k] <= 1.0)) throw UsageError("calibration edges must lie in [0,1]");
    if (k > 0 && !(edges[k] > edges[k - 1])) throw UsageError("calibration edges must be strictly ascending");
  }

  std::size_t anchors = 0;
  for (auto s : anchor) anchors += s;
  const double nd = static_cast<double>(n);
  const double h = static_cast<double>(anchors) / nd;
  if (!(q_star > h)) throw UsageError("q_star (" + std::to_string(q_star) + ") must exceed the anchor fraction (" +
                                     std::to_string(h) + ")");
  if (!(q_star < 1.0)) throw UsageError("q_star must be below 1");

  CalibrationTable table;
  table.edges.assign(edges.begin(), edges.end());
  table.q_star = q_star;
  table.h = h;
  const std::size_t bins = edges.size() - 1;
  table.intervals.resize(bins);
  std::vector<double> model_num(bins, 0.0), model_den(bins, 0.0);
  for (std::size_t b = 0; b < bins; ++b) {
    table.intervals[b].lower = edges[b];
    table.intervals[b].upper = edges[b + 1];
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double pr = prob[i];
    // Half-open (a, b]; a zero lower edge also takes P == 0.
    std::size_t b = bins;
    for (std::size_t k = 0; k < bins; ++k) {
      const bool above_lower = pr > edges[k] || (k == 0 && edges[0] == 0.0 && pr == 0.0);
      if (above_lower && pr <= edges[k + 1]) {
        b = k;
        break;
      }
    }
    if (b == bins) continue;
    auto& iv = table.intervals[b];
    if (anchor[i]) ++iv.n_anchor;
    else ++iv.n_unlabeled;
    model_num[b] += (1.0 - row_sens[i]) * pr;
    model_den[b] += 1.0 - row_sens[i] * pr;
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t b = 0; b < bins; ++b) {
    auto& iv = table.intervals[b];
    iv.applicable = iv.n_unlabeled > 0;
    if (!iv.applicable) {
      iv.p_model = iv.p_nonparametric = iv.model_predicted_cases = iv.nonparametric_cases = nan;
      continue;
    }
    const double frac_anchor = static_cast<double>(iv.n_anchor) / nd;
    const double frac_unlabeled = static_cast<double>(iv.n_unlabeled) / nd;
    iv.p_nonparametric = (q_star - h) * frac_anchor / (h * frac_unlabeled);
    iv.p_model = model_num[b] / model_den[b];
    const double m = static_cast<double>(iv.n_unlabeled);
    iv.model_predicted_cases = iv.p_model * m;
    iv.nonparametric_cases = iv.p_nonparametric * m;
    table.max_discrepancy = std::max(table.max_discrepancy, std::abs(iv.model_predicted_cases - iv.nonparametric_cases));
  }
  return table;
}

}  // namespace phiap
