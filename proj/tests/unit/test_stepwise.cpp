#include <gtest/gtest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "phiap/error.hpp"
#include "phiap/stepwise.hpp"

using namespace phiap;

namespace {

bool contains(const std::vector<std::string>& names, const std::string& name) {
  return std::find(names.begin(), names.end(), name) != names.end();
}

}  // namespace

TEST(Stepwise, NoiseFeatureIsUsuallyEliminated) {
  Eigen::VectorXd beta(4);
  beta << -0.5, 1.5, -1.2, 0.0;  // x3 carries no signal
  int removed = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Dataset d = fixtures::random_dataset(1500, 4, 500 + seed, beta, {0.5});
    const StepwiseResult r = stepwise_select(d);
    ASSERT_FALSE(r.warning) << r.message;
    EXPECT_TRUE(contains(r.selected, "x1"));
    EXPECT_TRUE(contains(r.selected, "x2"));
    EXPECT_EQ(r.selected.front(), "(Intercept)");
    removed += !contains(r.selected, "x3");
    ASSERT_EQ(r.columns.size(), r.selected.size());
    EXPECT_EQ(static_cast<std::size_t>(r.fit.params.beta.size()), r.columns.size());
  }
  // Expected rate is 1 - threshold = 0.9.
  EXPECT_GE(removed, 38);
}

TEST(Stepwise, StrongPredictorsAreKept) {
  Eigen::VectorXd beta(4);
  beta << -0.5, 1.5, -1.2, 1.0;
  const Dataset d = fixtures::random_dataset(3000, 4, 3, beta, {0.5});
  const StepwiseResult r = stepwise_select(d);
  EXPECT_TRUE(r.trace.empty());
  EXPECT_EQ(r.columns, (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(Stepwise, TraceRecordsRemovalsInOrder) {
  Eigen::VectorXd beta(5);
  beta << -0.5, 2.0, 0.0, 0.0, 0.0;
  const Dataset d = fixtures::random_dataset(2000, 5, 12, beta, {0.5});
  StepwiseConfig cfg;
  cfg.p_threshold = 0.001;
  const StepwiseResult r = stepwise_select(d, cfg);
  ASSERT_EQ(r.trace.size(), 3u);
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    EXPECT_EQ(r.trace[k].step, k + 1);
    EXPECT_GE(r.trace[k].p_value, cfg.p_threshold);
    EXPECT_EQ(r.trace[k].remaining, 3 - k);
    EXPECT_NE(r.trace[k].removed, "(Intercept)");
  }
  EXPECT_EQ(r.selected, (std::vector<std::string>{"(Intercept)", "x1"}));
}

TEST(Stepwise, ThresholdValidation) {
  StepwiseConfig cfg;
  cfg.p_threshold = 0.0;
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg.p_threshold = 1.5;
  EXPECT_THROW(cfg.validate(), UsageError);
}
