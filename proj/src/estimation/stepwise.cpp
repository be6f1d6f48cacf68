#include "phiap/stepwise.hpp"

#include <cmath>
#include <numeric>

#include "phiap/error.hpp"

namespace phiap {

void StepwiseConfig::validate() const {
  if (!(p_threshold > 0.0 && p_threshold < 1.0)) throw UsageError("p threshold must lie in (0, 1)");
  fit.validate();
}

StepwiseResult stepwise_select(const Dataset& data, const StepwiseConfig& config) {
  config.validate();
  StepwiseResult out;
  out.columns.resize(data.cols());
  std::iota(out.columns.begin(), out.columns.end(), std::size_t{0});

  FitConfig fc = config.fit;
  fc.init.reset();
  out.fit = fit(data, fc);
  if (!out.fit.converged) {
    out.warning = true;
    out.message = "initial fit did not converge";
  }

  while (!out.warning && out.columns.size() > 1) {
    std::size_t worst = 0;
    double worst_p = -1.0;
    for (std::size_t j = 1; j < out.columns.size(); ++j) {
      const auto idx = static_cast<Eigen::Index>(j);
      double p = wald_p_value(out.fit.params.beta[idx], out.fit.se[idx]);
      // An undefined p-value (singular information) makes the term the first to go.
      if (std::isnan(p)) p = 2.0;
      if (p > worst_p) {
        worst_p = p;
        worst = j;
      }
    }
    if (worst_p < config.p_threshold) break;

    std::vector<std::size_t> next = out.columns;
    next.erase(next.begin() + static_cast<std::ptrdiff_t>(worst));
    FitResult refit;
    try {
      refit = fit(data.select_columns(next), fc);
    } catch (const Error& e) {
      out.warning = true;
      out.message = std::string("refit failed after removing ") + data.feature_names()[out.columns[worst]] + ": " +
                    e.what();
      break;
    }
    if (!refit.converged) {
      out.warning = true;
      out.message = "refit did not converge after removing " + data.feature_names()[out.columns[worst]];
      break;
    }
    out.trace.push_back({out.trace.size() + 1, data.feature_names()[out.columns[worst]],
                         worst_p > 1.0 ? std::nan("") : worst_p, next.size() - 1});
    out.columns = std::move(next);
    out.fit = std::move(refit);
  }

  for (std::size_t c : out.columns) out.selected.push_back(data.feature_names()[c]);
  return out;
}

}  // namespace phiap
