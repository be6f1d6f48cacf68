#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "phiap/error.hpp"
#include "phiap/parallel.hpp"
#include "phiap/rng.hpp"
#include "phiap/simulation.hpp"

namespace phiap::sim {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kBootstrapStream = 11;

struct Moments {
  double mean = kNaN;
  double sd = kNaN;
};

// Mean and sample SD of the finite values.
Moments moments(const std::vector<double>& xs) {
  std::vector<double> ok;
  for (double x : xs)
    if (std::isfinite(x)) ok.push_back(x);
  Moments m;
  if (ok.empty()) return m;
  m.mean = std::accumulate(ok.begin(), ok.end(), 0.0) / static_cast<double>(ok.size());
  if (ok.size() < 2) return m;
  double ss = 0.0;
  for (double x : ok) ss += (x - m.mean) * (x - m.mean);
  m.sd = std::sqrt(ss / static_cast<double>(ok.size() - 1));
  return m;
}

double mean_of(const std::vector<double>& xs) { return moments(xs).mean; }

template <typename F>
std::vector<double> collect(const std::vector<const ReplicateRecord*>& recs, F&& get) {
  std::vector<double> out;
  out.reserve(recs.size());
  for (const auto* r : recs) out.push_back(get(*r));
  return out;
}

}  // namespace

TrueAccuracy true_accuracy(std::span<const double> prob, std::span<const std::uint8_t> anchor,
                           std::span<const std::uint8_t> y, std::span<const double> thresholds) {
  const std::size_t n = prob.size();
  if (anchor.size() != n || y.size() != n) throw DimensionError("true accuracy inputs differ in length");
  TrueAccuracy out;
  out.thresholds.assign(thresholds.begin(), thresholds.end());
  std::sort(out.thresholds.begin(), out.thresholds.end());

  for (double v : out.thresholds) {
    double tp = 0, fn = 0, fp = 0, tn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (anchor[i]) continue;
      const bool flagged = prob[i] > v;
      if (y[i]) (flagged ? tp : fn) += 1.0;
      else (flagged ? fp : tn) += 1.0;
    }
    out.tpr.push_back(tp + fn > 0 ? tp / (tp + fn) : kNaN);
    out.fpr.push_back(fp + tn > 0 ? fp / (fp + tn) : kNaN);
    out.ppv.push_back(tp + fp > 0 ? tp / (tp + fp) : 1.0);
    out.npv.push_back(tn + fn > 0 ? tn / (tn + fn) : 1.0);
  }

  // Mann-Whitney over unlabeled cases vs. controls, ties counted one half.
  std::vector<std::pair<double, std::uint8_t>> rows;
  for (std::size_t i = 0; i < n; ++i)
    if (!anchor[i]) rows.emplace_back(prob[i], y[i]);
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double controls_below = 0.0, pairs_won = 0.0, cases = 0.0, controls = 0.0;
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    double tie_cases = 0.0, tie_controls = 0.0;
    while (j < rows.size() && rows[j].first == rows[i].first) {
      (rows[j].second ? tie_cases : tie_controls) += 1.0;
      ++j;
    }
    pairs_won += tie_cases * (controls_below + 0.5 * tie_controls);
    controls_below += tie_controls;
    cases += tie_cases;
    controls += tie_controls;
    i = j;
  }
  out.auc = cases > 0 && controls > 0 ? pairs_won / (cases * controls) : kNaN;
  return out;
}

ReplicateRecord run_replicate(const SimDesign& design, std::size_t replicate_index) {
  ReplicateRecord rec;
  rec.index = replicate_index;
  try {
    const SimSample sample = generate(design, replicate_index);
    rec.realized_prevalence =
        std::accumulate(sample.train_y.begin(), sample.train_y.end(), 0.0) / static_cast<double>(sample.train_y.size());
    rec.n_anchor = sample.train.anchor_count();

    const auto cols = fitted_columns(design.fitted_model);
    Dataset train = sample.train.select_columns(cols);
    Dataset test = sample.test.select_columns(cols);
    if (design.stratified && !design.fit_strata) {
      train = train.without_strata();
      test = test.without_strata();
    }

    const FitResult f = fit(train, design.fit_config);
    rec.iterations = f.iterations;
    if (!f.converged) {
      rec.failure = "not converged";
      return rec;
    }
    const auto p = static_cast<Eigen::Index>(cols.size());
    rec.beta.assign(f.params.beta.data(), f.params.beta.data() + p);
    rec.beta_se.assign(f.se.data(), f.se.data() + p);
    rec.sens = f.params.sens;
    rec.sens_se.assign(f.se.data() + p, f.se.data() + f.se.size());
    rec.q_ratio = f.q_ratio;
    rec.q_ratio_se = f.q_ratio_se;
    rec.q_avg = f.q_avg;

    try {
      const CalibrationTable cal = calibration_table(f, train, design.edges);
      for (const auto& iv : cal.intervals) {
        rec.cal_model.push_back(iv.model_predicted_cases);
        rec.cal_nonparametric.push_back(iv.nonparametric_cases);
      }
      rec.cal_max_discrepancy = cal.max_discrepancy;
    } catch (const UsageError&) {
      rec.cal_model.assign(design.edges.size() - 1, kNaN);
      rec.cal_nonparametric.assign(design.edges.size() - 1, kNaN);
      rec.cal_max_discrepancy = kNaN;
    }

    const AccuracyReport est = accuracy(f, test, design.thresholds);
    for (const auto& pt : est.points) {
      rec.est_tpr.push_back(pt.tpr.value);
      rec.est_fpr.push_back(pt.fpr.value);
      rec.est_ppv.push_back(pt.ppv.value);
      rec.est_npv.push_back(pt.npv.value);
    }
    rec.est_auc = est.auc;

    const Eigen::VectorXd prob = predict_probs(f.params.beta, test);
    rec.truth = true_accuracy(std::span<const double>(prob.data(), static_cast<std::size_t>(prob.size())),
                              test.anchor(), sample.test_y, design.thresholds);

    if (design.bootstrap > 0) {
      const std::uint64_t seed = substream(design.seed, replicate_index, kBootstrapStream)();
      rec.bootstrap_se = bootstrap_se(train, design.fit_config, design.thresholds, design.bootstrap, seed).se;
    }
    rec.converged = true;
  } catch (const Error& e) {
    rec.failure = e.what();
    rec.converged = false;
  }
  return rec;
}

SimSummary run_experiment(const SimDesign& design) {
  design.validate();
  std::vector<ReplicateRecord> records(design.replicates);
  // Bootstrap refits inside a replicate would oversubscribe the pool.
  parallel_for(design.replicates, [&](std::size_t r) { records[r] = run_replicate(design, r); });
  return summarize(design, std::move(records));
}

SimSummary summarize(const SimDesign& design, std::vector<ReplicateRecord> records) {
  SimSummary out;
  out.design = design;
  out.attempted = records.size();
  std::vector<const ReplicateRecord*> ok;
  for (const auto& r : records)
    if (r.converged) ok.push_back(&r);
  out.succeeded = ok.size();
  out.failed = out.attempted - out.succeeded;

  const auto beta_true = design.effective_beta();
  const auto cols = fitted_columns(design.fitted_model);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    ParamSummary ps;
    ps.name = "beta" + std::to_string(cols[j]);
    ps.truth = beta_true[cols[j]];
    const auto est = moments(collect(ok, [j](const ReplicateRecord& r) { return r.beta[j]; }));
    ps.mean = est.mean;
    ps.ese = est.sd;
    ps.bias = ps.mean - ps.truth;
    ps.se = mean_of(collect(ok, [j](const ReplicateRecord& r) { return r.beta_se[j]; }));
    out.params.push_back(ps);
  }

  const bool per_stratum = design.stratified && design.fit_strata;
  const std::size_t n_sens = per_stratum ? design.c_true.size() : 1;
  const double pooled_c = std::accumulate(design.c_true.begin(), design.c_true.end(), 0.0) /
                          static_cast<double>(design.c_true.size());
  const double q_truth = design.prevalence_target
                             ? *design.prevalence_target
                             : mean_of(collect(ok, [](const ReplicateRecord& r) { return r.realized_prevalence; }));

  auto add_scalar = [&](const std::string& name, double truth, const std::vector<double>& est,
                        const std::vector<double>& se) {
    const auto m = moments(est);
    ScalarSummary s;
    s.name = name;
    s.mean = m.mean;
    s.sd = m.sd;
    s.ci_low = m.mean - 1.96 * m.sd;
    s.ci_high = m.mean + 1.96 * m.sd;
    s.se = se.empty() ? kNaN : mean_of(se);
    out.scalars.push_back(s);
    ParamSummary ps;
    ps.name = name;
    ps.truth = truth;
    ps.mean = m.mean;
    ps.bias = m.mean - truth;
    ps.se = s.se;
    ps.ese = m.sd;
    out.params.push_back(ps);
  };
  for (std::size_t k = 0; k < n_sens; ++k) {
    const std::string name = n_sens == 1 ? "c" : "c" + std::to_string(k + 1);
    add_scalar(name, n_sens == 1 ? pooled_c : design.c_true[k],
               collect(ok, [k](const ReplicateRecord& r) { return r.sens[k]; }),
               collect(ok, [k](const ReplicateRecord& r) { return r.sens_se[k]; }));
  }
  add_scalar("q_ratio", q_truth, collect(ok, [](const ReplicateRecord& r) { return r.q_ratio; }),
             collect(ok, [](const ReplicateRecord& r) { return r.q_ratio_se; }));
  add_scalar("q_avg", q_truth, collect(ok, [](const ReplicateRecord& r) { return r.q_avg; }), {});

  for (std::size_t b = 0; b + 1 < design.edges.size(); ++b) {
    IntervalSummary iv;
    iv.lower = design.edges[b];
    iv.upper = design.edges[b + 1];
    iv.model_predicted = mean_of(collect(ok, [b](const ReplicateRecord& r) { return r.cal_model[b]; }));
    iv.nonparametric = mean_of(collect(ok, [b](const ReplicateRecord& r) { return r.cal_nonparametric[b]; }));
    if (std::isfinite(iv.model_predicted) && std::isfinite(iv.nonparametric))
      out.calibration_max_discrepancy =
          std::max(out.calibration_max_discrepancy, std::abs(iv.model_predicted - iv.nonparametric));
    out.calibration.push_back(iv);
  }

  std::vector<double> cutoffs = design.thresholds;
  std::sort(cutoffs.begin(), cutoffs.end());
  cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());
  struct Field {
    const char* name;
    std::vector<double> ReplicateRecord::*est;
    std::vector<double> TrueAccuracy::*truth;
    std::vector<double> AccuracySe::*boot;
  };
  const Field fields[] = {{"PPV", &ReplicateRecord::est_ppv, &TrueAccuracy::ppv, &AccuracySe::ppv},
                          {"TPR", &ReplicateRecord::est_tpr, &TrueAccuracy::tpr, &AccuracySe::tpr},
                          {"NPV", &ReplicateRecord::est_npv, &TrueAccuracy::npv, &AccuracySe::npv},
                          {"FPR", &ReplicateRecord::est_fpr, &TrueAccuracy::fpr, &AccuracySe::fpr}};
  for (const auto& f : fields) {
    for (std::size_t k = 0; k < cutoffs.size(); ++k) {
      MeasureSummary ms;
      ms.measure = f.name;
      ms.cutoff = cutoffs[k];
      const auto est = moments(collect(ok, [&](const ReplicateRecord& r) { return (r.*f.est)[k]; }));
      const auto tru = moments(collect(ok, [&](const ReplicateRecord& r) { return (r.truth.*f.truth)[k]; }));
      ms.est_mean = est.mean;
      ms.est_ese = est.sd;
      ms.true_mean = tru.mean;
      ms.true_ese = tru.sd;
      ms.bootstrap_se = mean_of(collect(
          ok, [&](const ReplicateRecord& r) { return r.bootstrap_se ? ((*r.bootstrap_se).*f.boot)[k] : kNaN; }));
      out.accuracy.push_back(ms);
    }
  }
  {
    MeasureSummary ms;
    ms.measure = "AUC";
    ms.cutoff = kNaN;
    const auto est = moments(collect(ok, [](const ReplicateRecord& r) { return r.est_auc; }));
    const auto tru = moments(collect(ok, [](const ReplicateRecord& r) { return r.truth.auc; }));
    ms.est_mean = est.mean;
    ms.est_ese = est.sd;
    ms.true_mean = tru.mean;
    ms.true_ese = tru.sd;
    ms.bootstrap_se =
        mean_of(collect(ok, [](const ReplicateRecord& r) { return r.bootstrap_se ? r.bootstrap_se->auc : kNaN; }));
    out.accuracy.push_back(ms);
  }

  out.records = std::move(records);
  return out;
}

const ParamSummary& SimSummary::param(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return p;
  throw UsageError("no parameter summary named " + name);
}

const ScalarSummary& SimSummary::scalar(const std::string& name) const {
  for (const auto& s : scalars)
    if (s.name == name) return s;
  throw UsageError("no scalar summary named " + name);
}

const MeasureSummary& SimSummary::measure(const std::string& name, double cutoff) const {
  for (const auto& m : accuracy) {
    if (m.measure != name) continue;
    if (name == "AUC" || std::abs(m.cutoff - cutoff) < 1e-12) return m;
  }
  throw UsageError("no accuracy summary for " + name);
}

}  // namespace phiap::sim
