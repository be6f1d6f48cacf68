#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "phiap/diagnostics.hpp"
#include "phiap/error.hpp"
#include "phiap/parallel.hpp"
#include "phiap/rng.hpp"

namespace phiap {
namespace {

constexpr std::uint64_t kBootstrapStream = 11;
constexpr std::uint64_t kFoldStream = 12;

struct Draw {
  std::vector<double> tpr, fpr, ppv, npv;
  double auc = 0.0;
  std::vector<double> sens;
};

Draw draw_of(const AccuracyReport& rep, const ModelParams& params) {
  Draw d;
  for (const auto& pt : rep.points) {
    d.tpr.push_back(pt.tpr.value);
    d.fpr.push_back(pt.fpr.value);
    d.ppv.push_back(pt.ppv.value);
    d.npv.push_back(pt.npv.value);
  }
  d.auc = rep.auc;
  d.sens = params.sens;
  return d;
}

double sample_sd(const std::vector<double>& xs) {
  if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

AccuracySe spread(const std::vector<Draw>& draws, std::size_t thresholds) {
  AccuracySe se;
  auto column = [&](auto member, std::size_t k) {
    std::vector<double> xs;
    for (const auto& d : draws) xs.push_back((d.*member)[k]);
    return sample_sd(xs);
  };
  for (std::size_t k = 0; k < thresholds; ++k) {
    se.tpr.push_back(column(&Draw::tpr, k));
    se.fpr.push_back(column(&Draw::fpr, k));
    se.ppv.push_back(column(&Draw::ppv, k));
    se.npv.push_back(column(&Draw::npv, k));
  }
  std::vector<double> aucs;
  for (const auto& d : draws) aucs.push_back(d.auc);
  se.auc = sample_sd(aucs);
  return se;
}

}  // namespace

AccuracyReport bootstrap_se(const Dataset& data, const FitConfig& config, std::span<const double> thresholds,
                            std::size_t replicates, std::uint64_t seed) {
  const std::size_t n = data.rows();
  return bootstrap_se(data, config, thresholds, replicates, [n, seed](std::size_t b) {
    auto gen = substream(seed, b, kBootstrapStream);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = pick(gen);
    return idx;
  });
}

AccuracyReport bootstrap_se(const Dataset& data, const FitConfig& config, std::span<const double> thresholds,
                            std::size_t replicates, const Resampler& resampler) {
  if (replicates < 2) throw UsageError("bootstrap needs at least 2 replicates");
  const FitResult full = fit(data, config);
  AccuracyReport report = accuracy(full, data, thresholds);

  std::vector<std::optional<Draw>> draws(replicates);
  parallel_for(replicates, [&](std::size_t b) {
    try {
      const auto idx = resampler(b);
      const Dataset sample = data.subset_rows(idx);
      const FitResult f = fit(sample, config);
      if (!f.converged) return;
      draws[b] = draw_of(accuracy(f, sample, thresholds), f.params);
    } catch (const Error&) {
      // Degenerate resample (e.g. no anchor-positive rows): counted as failed.
    }
  });

  ResamplingInfo info;
  info.requested = replicates;
  std::vector<Draw> ok;
  for (auto& d : draws) {
    if (!d) continue;
    info.sensitivity_draws.push_back(d->sens);
    ok.push_back(std::move(*d));
  }
  info.succeeded = ok.size();
  info.failed = replicates - ok.size();
  info.warning = static_cast<double>(info.failed) > 0.1 * static_cast<double>(replicates);
  report.se = spread(ok, report.points.size());
  report.resampling = std::move(info);
  return report;
}

std::vector<std::size_t> assign_folds(std::span<const std::uint8_t> anchor, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw UsageError("cross-validation needs at least 2 folds");
  const std::size_t n = anchor.size();
  for (std::uint64_t attempt = 0; attempt < 2; ++attempt) {
    auto gen = substream(seed, attempt, kFoldStream);
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < n; ++i) (anchor[i] ? pos : neg).push_back(i);
    std::shuffle(pos.begin(), pos.end(), gen);
    std::shuffle(neg.begin(), neg.end(), gen);
    std::vector<std::size_t> fold(n);
    std::size_t slot = 0;
    for (auto i : pos) fold[i] = slot++ % folds;
    for (auto i : neg) fold[i] = slot++ % folds;

    std::vector<std::size_t> positives(folds, 0);
    for (auto i : pos) ++positives[fold[i]];
    if (std::all_of(positives.begin(), positives.end(), [](std::size_t c) { return c > 0; })) return fold;
  }
  throw DataError("cannot place an anchor-positive row in every fold (" + std::to_string(folds) + " folds)");
}

AccuracyReport cross_validate(const Dataset& data, const FitConfig& config, std::size_t folds,
                              std::span<const double> thresholds, std::uint64_t seed) {
  const auto fold_of_row = assign_folds(data.anchor(), folds, seed);
  return cross_validate(data, config, fold_of_row, thresholds);
}

AccuracyReport cross_validate(const Dataset& data, const FitConfig& config, std::span<const std::size_t> fold_of_row,
                              std::span<const double> thresholds) {
  if (fold_of_row.size() != data.rows()) throw DimensionError("fold assignment length does not match rows");
  const std::size_t folds = fold_of_row.empty() ? 0 : *std::max_element(fold_of_row.begin(), fold_of_row.end()) + 1;
  if (folds < 2) throw UsageError("cross-validation needs at least 2 folds");

  std::vector<std::optional<AccuracyReport>> per_fold(folds);
  std::vector<std::optional<std::vector<double>>> fold_sens(folds);
  parallel_for(folds, [&](std::size_t f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < data.rows(); ++i) (fold_of_row[i] == f ? test : train).push_back(i);
    if (test.empty()) return;
    const auto s = data.anchor();
    if (std::none_of(test.begin(), test.end(), [&](std::size_t i) { return s[i] == 1; }))
      throw DataError("fold " + std::to_string(f) + " has no anchor-positive rows");
    FitResult trained;
    try {
      trained = fit(data.subset_rows(train), config);
    } catch (const Error&) {
      return;
    }
    if (!trained.converged) return;

    std::vector<double> prob(test.size());
    std::vector<std::uint8_t> held_anchor(test.size());
    const auto& x = data.design();
    for (std::size_t r = 0; r < test.size(); ++r) {
      const auto i = static_cast<Eigen::Index>(test[r]);
      prob[r] = sigmoid(x.row(i).dot(trained.params.beta));
      held_anchor[r] = s[test[r]];
    }
    per_fold[f] = accuracy_from_scores(prob, held_anchor, thresholds);
    fold_sens[f] = trained.params.sens;
  });

  std::vector<AccuracyReport> ok;
  ResamplingInfo info;
  info.requested = folds;
  for (std::size_t f = 0; f < folds; ++f) {
    if (!per_fold[f]) continue;
    ok.push_back(std::move(*per_fold[f]));
    info.sensitivity_draws.push_back(*fold_sens[f]);
  }
  info.succeeded = ok.size();
  info.failed = folds - ok.size();
  info.warning = static_cast<double>(info.failed) > 0.1 * static_cast<double>(folds);
  if (ok.empty()) throw Error("every cross-validation fold failed to fit");

  // Fold means of every field; flags are OR-ed across folds.
  AccuracyReport mean = ok.front();
  const double k = static_cast<double>(ok.size());
  for (std::size_t t = 0; t < mean.points.size(); ++t) {
    for (auto member : {&AccuracyPoint::tpr, &AccuracyPoint::fpr, &AccuracyPoint::ppv, &AccuracyPoint::npv}) {
      Measure m{};
      for (const auto& rep : ok) {
        const Measure& src = rep.points[t].*member;
        m.value += src.value / k;
        m.raw += src.raw / k;
        m.clamped = m.clamped || src.clamped;
        m.empty = m.empty || src.empty;
        m.degenerate = m.degenerate || src.degenerate;
      }
      mean.points[t].*member = m;
    }
  }
  mean.auc = mean.h = mean.q = 0.0;
  for (const auto& rep : ok) {
    mean.auc += rep.auc / k;
    mean.h += rep.h / k;
    mean.q += rep.q / k;
  }
  mean.resampling = std::move(info);
  return mean;
}

}  // namespace phiap
