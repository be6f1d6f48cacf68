#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace phiap {

/// Observed positive-unlabeled data: covariates X (first column the
/// intercept), anchor indicator S and an optional stratum id Z.
///
/// The design matrix is stored column-major so that per-column passes over
/// the rows are contiguous (see kernels.hpp). Construction validates every
/// invariant and throws DataError on violation; a Dataset is immutable
/// afterwards.
class Dataset {
 public:
  Dataset(Eigen::MatrixXd design, std::vector<std::uint8_t> anchor,
          std::vector<std::string> feature_names,
          std::optional<std::vector<int>> stratum = std::nullopt);

  std::size_t rows() const { return static_cast<std::size_t>(design_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(design_.cols()); }

  const Eigen::MatrixXd& design() const { return design_; }
  std::span<const std::uint8_t> anchor() const { return anchor_; }
  const std::vector<std::string>& feature_names() const { return names_; }

  bool has_strata() const { return stratum_.has_value(); }
  /// Number of strata; 1 when no stratum column is present.
  std::size_t num_strata() const { return num_strata_; }
  /// Stratum of row i; 0 when no stratum column is present.
  int stratum_of(std::size_t i) const { return stratum_ ? (*stratum_)[i] : 0; }
  std::span<const int> strata() const;

  std::size_t anchor_count() const { return anchor_count_; }
  /// Fraction of rows with S = 1.
  double anchor_fraction() const;
  /// Row counts and anchor-positive counts per stratum (size num_strata()).
  std::vector<std::size_t> stratum_sizes() const;
  std::vector<std::size_t> stratum_anchor_counts() const;

  /// Rows picked by index (repeats allowed). Throws DataError if the subset
  /// violates an invariant.
  Dataset subset_rows(std::span<const std::size_t> rows) const;
  /// Keeps the listed columns, in the given order.
  Dataset select_columns(std::span<const std::size_t> cols) const;
  /// Same rows without the stratum column.
  Dataset without_strata() const;

 private:
  Eigen::MatrixXd design_;
  std::vector<std::uint8_t> anchor_;
  std::vector<std::string> names_;
  std::optional<std::vector<int>> stratum_;
  std::size_t num_strata_ = 1;
  std::size_t anchor_count_ = 0;
};

}  // namespace phiap
