#include "phiap/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "phiap/error.hpp"

namespace phiap {

Dataset::Dataset(Eigen::MatrixXd design, std::vector<std::uint8_t> anchor,
                 std::vector<std::string> feature_names, std::optional<std::vector<int>> stratum)
    : design_(std::move(design)),
      anchor_(std::move(anchor)),
      names_(std::move(feature_names)),
      stratum_(std::move(stratum)) {
  const auto n = rows();
  if (n == 0) throw DataError("dataset has no rows");
  if (cols() == 0) throw DataError("dataset has no columns");
  if (anchor_.size() != n)
    throw DataError("anchor length " + std::to_string(anchor_.size()) + " does not match " +
                    std::to_string(n) + " rows");
  if (names_.empty()) {
    for (std::size_t j = 0; j < cols(); ++j) names_.push_back(j == 0 ? "(Intercept)" : "x" + std::to_string(j));
  }
  if (names_.size() != cols()) throw DataError("feature name count does not match design columns");
  if (!design_.allFinite()) throw DataError("design matrix contains non-finite values");
  if ((design_.col(0).array() != 1.0).any()) throw DataError("first design column must be the all-ones intercept");

  for (auto s : anchor_) {
    if (s > 1) throw DataError("anchor values must be 0 or 1");
    anchor_count_ += s;
  }
  if (anchor_count_ == 0) throw DataError("no anchor-positive rows");
  if (anchor_count_ == n) throw DataError("no unlabeled (anchor = 0) rows");

  if (stratum_) {
    if (stratum_->size() != n) throw DataError("stratum length does not match rows");
    int max_id = 0;
    for (int z : *stratum_) {
      if (z < 0) throw DataError("stratum ids must be non-negative");
      max_id = std::max(max_id, z);
    }
    num_strata_ = static_cast<std::size_t>(max_id) + 1;
    const auto sizes = stratum_sizes();
    const auto positives = stratum_anchor_counts();
    for (std::size_t k = 0; k < num_strata_; ++k) {
      if (sizes[k] == 0) throw DataError("stratum " + std::to_string(k) + " has no rows");
      if (positives[k] == 0) throw DataError("stratum " + std::to_string(k) + " has no anchor-positive rows");
    }
  }
}

std::span<const int> Dataset::strata() const {
  if (!stratum_) return {};
  return *stratum_;
}

double Dataset::anchor_fraction() const {
  return static_cast<double>(anchor_count_) / static_cast<double>(rows());
}

std::vector<std::size_t> Dataset::stratum_sizes() const {
  std::vector<std::size_t> out(num_strata_, 0);
  for (std::size_t i = 0; i < rows(); ++i) ++out[static_cast<std::size_t>(stratum_of(i))];
  return out;
}

std::vector<std::size_t> Dataset::stratum_anchor_counts() const {
  std::vector<std::size_t> out(num_strata_, 0);
  for (std::size_t i = 0; i < rows(); ++i) out[static_cast<std::size_t>(stratum_of(i))] += anchor_[i];
  return out;
}

Dataset Dataset::subset_rows(std::span<const std::size_t> rows_idx) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows_idx.size()), design_.cols());
  std::vector<std::uint8_t> s(rows_idx.size());
  std::optional<std::vector<int>> z;
  if (stratum_) z.emplace(rows_idx.size());
  for (std::size_t r = 0; r < rows_idx.size(); ++r) {
    const auto i = rows_idx[r];
    if (i >= rows()) throw DataError("row index out of range");
    x.row(static_cast<Eigen::Index>(r)) = design_.row(static_cast<Eigen::Index>(i));
    s[r] = anchor_[i];
    if (z) (*z)[r] = (*stratum_)[i];
  }
  return Dataset(std::move(x), std::move(s), names_, std::move(z));
}

Dataset Dataset::select_columns(std::span<const std::size_t> col_idx) const {
  Eigen::MatrixXd x(design_.rows(), static_cast<Eigen::Index>(col_idx.size()));
  std::vector<std::string> names;
  for (std::size_t c = 0; c < col_idx.size(); ++c) {
    if (col_idx[c] >= cols()) throw DataError("column index out of range");
    x.col(static_cast<Eigen::Index>(c)) = design_.col(static_cast<Eigen::Index>(col_idx[c]));
    names.push_back(names_[col_idx[c]]);
  }
  return Dataset(std::move(x), anchor_, std::move(names), stratum_);
}

Dataset Dataset::without_strata() const { return Dataset(design_, anchor_, names_, std::nullopt); }

}  // namespace phiap
