#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phiap/dataset.hpp"
#include "phiap/diagnostics.hpp"
#include "phiap/estimation.hpp"

namespace phiap::sim {

/// Which covariates the fitted working model keeps.
enum class FittedModel {
  Full,
  DropWeak,    // omits x1, x2, x3
  DropStrong,  // omits x7, x8, x9
};

/// How the second argument of N(5, 10) is read for x1, x4 and x7.
enum class NormalScale { Variance, StdDev };

/// Synthetic population: nine independent covariates (normal, Bernoulli(0.5)
/// and logit-uniform in turn, three of each), Y from the logistic model and
/// S ~ Bernoulli(c) among cases only.
struct SimDesign {
  /// beta_0 .. beta_9; beta_0 is overwritten when prevalence_target is set.
  std::vector<double> beta_true{1.0, 0.2, 0.4, 0.6, -1.0, -1.4, 1.8, -2.0, 2.4, 2.8};
  /// One of 0.05, 0.10, 0.15, 0.20, or empty to use beta_true[0] as given.
  std::optional<double> prevalence_target = 0.10;
  /// One sensitivity, or two (strata Z = 0 and Z = 1) when stratified.
  std::vector<double> c_true{0.5};
  std::size_t n_train = 10000;
  std::size_t n_test = 5000;
  std::size_t replicates = 100;
  std::uint64_t seed = 20190417;
  FittedModel fitted_model = FittedModel::Full;
  /// Draw Z ~ Bernoulli(0.5) and use c_true[Z].
  bool stratified = false;
  /// For stratified designs, whether the fit models one sensitivity per stratum.
  bool fit_strata = true;
  NormalScale normal_scale = NormalScale::Variance;
  std::vector<double> thresholds = default_thresholds();
  std::vector<double> edges = default_calibration_edges();
  /// Within-replicate bootstrap size for accuracy SEs; 0 disables it.
  std::size_t bootstrap = 0;
  FitConfig fit_config{};

  void validate() const;
  /// beta_true with the intercept implied by prevalence_target.
  std::vector<double> effective_beta() const;
};

/// Intercept giving the tabulated prevalence (0.05 -> -2.5, 0.10 -> 1.0,
/// 0.15 -> 3.3, 0.20 -> 5.4). Throws UsageError for any other value.
double intercept_for_prevalence(double prevalence);

/// One replicate's data. The true phenotype is kept beside the Datasets, so
/// estimation code never sees it.
struct SimSample {
  Dataset train;
  std::vector<std::uint8_t> train_y;
  Dataset test;
  std::vector<std::uint8_t> test_y;
};

SimSample generate(const SimDesign& design, std::size_t replicate_index);

/// Design columns kept by a fitted model (always includes the intercept).
std::vector<std::size_t> fitted_columns(FittedModel model);

/// Accuracy among the unlabeled computed from the true phenotype.
struct TrueAccuracy {
  std::vector<double> thresholds;
  std::vector<double> tpr, fpr, ppv, npv;
  double auc = 0.0;
};

TrueAccuracy true_accuracy(std::span<const double> prob, std::span<const std::uint8_t> anchor,
                           std::span<const std::uint8_t> y, std::span<const double> thresholds);

struct ReplicateRecord {
  std::size_t index = 0;
  bool converged = false;
  std::string failure;
  int iterations = 0;
  double realized_prevalence = 0.0;
  std::size_t n_anchor = 0;
  std::vector<double> beta, beta_se, sens, sens_se;
  double q_ratio = 0.0, q_ratio_se = 0.0, q_avg = 0.0;
  std::vector<double> cal_model, cal_nonparametric;
  double cal_max_discrepancy = 0.0;
  /// Estimated (plug-in, test set) and true-Y accuracy, per threshold.
  std::vector<double> est_tpr, est_fpr, est_ppv, est_npv;
  double est_auc = 0.0;
  TrueAccuracy truth;
  std::optional<AccuracySe> bootstrap_se;
};

struct ParamSummary {
  std::string name;
  double truth = 0.0;
  double mean = 0.0;
  double bias = 0.0;
  /// Mean asymptotic SE.
  double se = 0.0;
  /// SD across replicates.
  double ese = 0.0;
};

struct ScalarSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double ci_low = 0.0;   // mean - 1.96 sd
  double ci_high = 0.0;  // mean + 1.96 sd
  double se = 0.0;       // mean asymptotic SE
};

struct IntervalSummary {
  double lower = 0.0, upper = 0.0;
  double model_predicted = 0.0;
  double nonparametric = 0.0;
};

struct MeasureSummary {
  std::string measure;  // PPV, TPR, NPV, FPR, AUC
  double cutoff = 0.0;  // NaN for AUC
  double est_mean = 0.0;
  double est_ese = 0.0;
  double true_mean = 0.0;
  double true_ese = 0.0;
  /// Mean within-replicate bootstrap SE; NaN when not run.
  double bootstrap_se = 0.0;
};

struct SimSummary {
  SimDesign design;
  std::size_t attempted = 0;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  std::vector<ParamSummary> params;
  std::vector<ScalarSummary> scalars;  // c (or c1, c2), q_ratio, q_avg
  std::vector<IntervalSummary> calibration;
  /// max |model - nonparametric| over the mean calibration table.
  double calibration_max_discrepancy = 0.0;
  std::vector<MeasureSummary> accuracy;
  std::vector<ReplicateRecord> records;

  const ParamSummary& param(const std::string& name) const;
  const ScalarSummary& scalar(const std::string& name) const;
  const MeasureSummary& measure(const std::string& name, double cutoff) const;
};

ReplicateRecord run_replicate(const SimDesign& design, std::size_t replicate_index);

SimSummary run_experiment(const SimDesign& design);

/// Aggregates replicate records (in index order).
SimSummary summarize(const SimDesign& design, std::vector<ReplicateRecord> records);

}  // namespace phiap::sim
