#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "phiap/dataset.hpp"
#include "phiap/estimation.hpp"

namespace phiap {

// ---------------------------------------------------------------------------
// Calibration among the unlabeled

struct CalibrationInterval {
  double lower = 0.0;  // interval is (lower, upper]
  double upper = 0.0;
  std::size_t n_unlabeled = 0;
  std::size_t n_anchor = 0;
  /// False when the interval holds no unlabeled rows; the four fields below are NaN then.
  bool applicable = false;
  double p_model = 0.0;
  double p_nonparametric = 0.0;
  double model_predicted_cases = 0.0;
  double nonparametric_cases = 0.0;
};

struct CalibrationTable {
  std::vector<double> edges;
  std::vector<CalibrationInterval> intervals;
  double q_star = 0.0;
  double h = 0.0;
  /// Largest |model - nonparametric| case count over applicable intervals.
  double max_discrepancy = 0.0;
};

/// 0.0, 0.1, ..., 1.0
std::vector<double> default_calibration_edges();

/// q_star defaults to fit.q_ratio.
CalibrationTable calibration_table(const FitResult& fit, const Dataset& data, std::span<const double> edges,
                                   std::optional<double> q_star = std::nullopt);

/// Same, from per-row predicted probabilities and sensitivities.
CalibrationTable calibration_table(std::span<const double> prob, std::span<const double> row_sens,
                                   std::span<const std::uint8_t> anchor, std::span<const double> edges,
                                   double q_star);

// ---------------------------------------------------------------------------
// Plug-in predictive accuracy among the unlabeled

struct Measure {
  /// Reported value: clamped to [0,1] (and monotone-repaired for TPR/FPR).
  double value = 0.0;
  /// Plug-in estimate before clamping.
  double raw = 0.0;
  bool clamped = false;
  /// The conditioning set is empty; value is reported as 1.
  bool empty = false;
  /// q_hat <= h_hat, so the estimator's (q - h) factor is degenerate.
  bool degenerate = false;
};

struct AccuracyPoint {
  double threshold = 0.0;
  Measure tpr, fpr, ppv, npv;
};

struct AccuracySe {
  std::vector<double> tpr, fpr, ppv, npv;
  double auc = 0.0;
};

struct ResamplingInfo {
  std::size_t requested = 0;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  /// More than 10% of replicates failed.
  bool warning = false;
  /// Fitted sensitivities of each successful replicate, in replicate order.
  std::vector<std::vector<double>> sensitivity_draws;
};

struct AccuracyReport {
  /// Sorted ascending.
  std::vector<AccuracyPoint> points;
  double auc = 0.0;
  double h = 0.0;
  double q = 0.0;
  std::optional<AccuracySe> se;
  std::optional<ResamplingInfo> resampling;
};

std::vector<double> default_thresholds();

AccuracyReport accuracy(const FitResult& fit, const Dataset& data, std::span<const double> thresholds);

/// Plug-in estimators with h = mean(anchor) and q = mean(prob).
AccuracyReport accuracy_from_scores(std::span<const double> prob, std::span<const std::uint8_t> anchor,
                                    std::span<const double> thresholds);

/// Trapezoid AUC over the plug-in (FPR, TPR) curve swept over every distinct
/// predicted probability plus any extra thresholds, with (0,0) and (1,1) added.
double plugin_auc(std::span<const double> prob, std::span<const std::uint8_t> anchor,
                  std::span<const double> extra_thresholds = {});

// ---------------------------------------------------------------------------
// Resampling

/// Row indices of bootstrap replicate b.
using Resampler = std::function<std::vector<std::size_t>(std::size_t b)>;

AccuracyReport bootstrap_se(const Dataset& data, const FitConfig& config, std::span<const double> thresholds,
                            std::size_t replicates, std::uint64_t seed);

AccuracyReport bootstrap_se(const Dataset& data, const FitConfig& config, std::span<const double> thresholds,
                            std::size_t replicates, const Resampler& resampler);

/// Stratified (by anchor) random fold assignment; throws DataError if some
/// fold gets no anchor-positive row after one re-randomization.
std::vector<std::size_t> assign_folds(std::span<const std::uint8_t> anchor, std::size_t folds, std::uint64_t seed);

AccuracyReport cross_validate(const Dataset& data, const FitConfig& config, std::size_t folds,
                              std::span<const double> thresholds, std::uint64_t seed);

/// Cross-validation with an explicit fold id per row.
AccuracyReport cross_validate(const Dataset& data, const FitConfig& config, std::span<const std::size_t> fold_of_row,
                              std::span<const double> thresholds);

}  // namespace phiap
