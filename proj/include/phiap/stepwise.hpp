#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "phiap/dataset.hpp"
#include "phiap/estimation.hpp"

namespace phiap {

struct StepwiseConfig {
  /// Features with Wald p >= p_threshold are candidates for removal.
  double p_threshold = 0.1;
  FitConfig fit{};

  void validate() const;
};

struct StepwiseStep {
  std::size_t step = 0;
  std::string removed;
  double p_value = 0.0;
  std::size_t remaining = 0;
};

struct StepwiseResult {
  /// Kept design columns (intercept first) and their names.
  std::vector<std::size_t> columns;
  std::vector<std::string> selected;
  FitResult fit;
  std::vector<StepwiseStep> trace;
  /// A refit failed or did not converge; fit is the last converged one.
  bool warning = false;
  std::string message;
};

/// Backward elimination by Wald p-value. The intercept and the sensitivities
/// are never removed.
StepwiseResult stepwise_select(const Dataset& data, const StepwiseConfig& config = {});

}  // namespace phiap
