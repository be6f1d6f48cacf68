#include <algorithm>
#include <cmath>
#include <utility>

#include "phiap/diagnostics.hpp"
#include "phiap/error.hpp"

namespace phiap {
namespace {

struct Rates {
  double h = 0.0;
  double q = 0.0;
};

// Fractions of all N rows: A1 = P > v & S = 1, A0 = P > v & S = 0,
// B1/B0 the same for P <= v.
struct Tally {
  double above_anchor = 0.0;
  double above_unlabeled = 0.0;
  double below_anchor = 0.0;
  double below_unlabeled = 0.0;
};

double tpr_of(const Tally& t, const Rates& r) { return t.above_anchor / r.h; }

double fpr_of(const Tally& t, const Rates& r) {
  return t.above_unlabeled / (1.0 - r.q) - t.above_anchor * (r.q - r.h) / (r.h * (1.0 - r.q));
}

Measure finish(double raw, bool empty = false, bool degenerate = false) {
  Measure m;
  m.raw = raw;
  m.empty = empty;
  m.degenerate = degenerate;
  m.value = std::clamp(raw, 0.0, 1.0);
  m.clamped = raw < 0.0 || raw > 1.0;
  return m;
}

Rates rates_of(std::span<const double> prob, std::span<const std::uint8_t> anchor) {
  if (prob.size() != anchor.size()) throw DimensionError("scores and anchor differ in length");
  if (prob.empty()) throw DataError("no rows to score");
  Rates r;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    r.h += anchor[i];
    r.q += prob[i];
  }
  r.h /= static_cast<double>(prob.size());
  r.q /= static_cast<double>(prob.size());
  if (r.h <= 0.0) throw DataError("no anchor-positive rows to score");
  if (r.q >= 1.0) throw DataError("mean predicted probability is 1");
  return r;
}

}  // namespace

std::vector<double> default_thresholds() { return {0.2, 0.3, 0.4, 0.5}; }

AccuracyReport accuracy(const FitResult& fit, const Dataset& data, std::span<const double> thresholds) {
  const Eigen::VectorXd prob = predict_probs(fit.params.beta, data);
  return accuracy_from_scores(std::span<const double>(prob.data(), static_cast<std::size_t>(prob.size())),
                              data.anchor(), thresholds);
}

AccuracyReport accuracy_from_scores(std::span<const double> prob, std::span<const std::uint8_t> anchor,
                                    std::span<const double> thresholds) {
  const Rates r = rates_of(prob, anchor);
  std::vector<double> grid(thresholds.begin(), thresholds.end());
  for (double v : grid)
    if (!(v > 0.0 && v < 1.0)) throw UsageError("thresholds must lie strictly inside (0,1)");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const double nd = static_cast<double>(prob.size());
  const bool degenerate = r.q <= r.h;
  AccuracyReport report;
  report.h = r.h;
  report.q = r.q;
  for (double v : grid) {
    Tally t;
    for (std::size_t i = 0; i < prob.size(); ++i) {
      const bool above = prob[i] > v;
      if (anchor[i]) (above ? t.above_anchor : t.below_anchor) += 1.0;
      else (above ? t.above_unlabeled : t.below_unlabeled) += 1.0;
    }
    t.above_anchor /= nd;
    t.above_unlabeled /= nd;
    t.below_anchor /= nd;
    t.below_unlabeled /= nd;

    AccuracyPoint pt;
    pt.threshold = v;
    pt.tpr = finish(tpr_of(t, r));
    pt.fpr = finish(fpr_of(t, r));
    if (t.above_unlabeled > 0.0)
      pt.ppv = finish(t.above_anchor * (r.q - r.h) / (r.h * t.above_unlabeled), false, degenerate);
    else
      pt.ppv = finish(1.0, true, degenerate);
    if (t.below_unlabeled > 0.0)
      pt.npv = finish(1.0 - t.below_anchor * (r.q - r.h) / (r.h * t.below_unlabeled), false, degenerate);
    else
      pt.npv = finish(1.0, true, degenerate);
    report.points.push_back(pt);
  }
  // Non-increasing in v: carry the running maximum down from the top threshold.
  for (std::size_t k = report.points.size(); k-- > 1;) {
    auto& lo = report.points[k - 1];
    const auto& hi = report.points[k];
    lo.tpr.value = std::max(lo.tpr.value, hi.tpr.value);
    lo.fpr.value = std::max(lo.fpr.value, hi.fpr.value);
  }
  report.auc = plugin_auc(prob, anchor);
  return report;
}

double plugin_auc(std::span<const double> prob, std::span<const std::uint8_t> anchor,
                  std::span<const double> extra_thresholds) {
  const Rates r = rates_of(prob, anchor);
  const std::size_t n = prob.size();
  std::vector<std::pair<double, std::uint8_t>> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = {prob[i], anchor[i]};
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  std::vector<double> grid(prob.begin(), prob.end());
  grid.insert(grid.end(), extra_thresholds.begin(), extra_thresholds.end());
  std::sort(grid.begin(), grid.end(), std::greater<>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const double nd = static_cast<double>(n);
  double a1 = 0.0, a0 = 0.0;
  double prev_fpr = 0.0, prev_tpr = 0.0, area = 0.0;
  auto add_point = [&](double tpr, double fpr) {
    tpr = std::max(prev_tpr, std::clamp(tpr, 0.0, 1.0));
    fpr = std::max(prev_fpr, std::clamp(fpr, 0.0, 1.0));
    area += (fpr - prev_fpr) * (tpr + prev_tpr) * 0.5;
    prev_fpr = fpr;
    prev_tpr = tpr;
  };

  std::size_t j = 0;
  for (double v : grid) {
    while (j < n && rows[j].first > v) {
      (rows[j].second ? a1 : a0) += 1.0;
      ++j;
    }
    const Tally t{a1 / nd, a0 / nd, 0.0, 0.0};
    add_point(tpr_of(t, r), fpr_of(t, r));
  }
  for (; j < n; ++j) (rows[j].second ? a1 : a0) += 1.0;
  const Tally all{a1 / nd, a0 / nd, 0.0, 0.0};
  add_point(tpr_of(all, r), fpr_of(all, r));
  add_point(1.0, 1.0);
  return area;
}

}  // namespace phiap
