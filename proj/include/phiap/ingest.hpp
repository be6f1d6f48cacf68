#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "phiap/dataset.hpp"
#include "phiap/io.hpp"

namespace phiap {

struct IngestConfig {
  std::string anchor_column;
  std::optional<std::string> stratum_column;
  /// Feature columns in model order; empty selects every other column.
  std::vector<std::string> features;
  /// Columns transformed by log(1 + x) before standardization.
  std::vector<std::string> log_transform;
  /// Standardize non-binary features to mean 0, SD 1.
  bool standardize = false;
  /// Drop rows with a missing value in any selected column; otherwise a missing value is an error.
  bool complete_case = true;
  char delimiter = ',';
};

/// How one feature column was transformed. Binary columns are never standardized.
struct ColumnTransform {
  std::string name;
  bool log1p = false;
  bool standardized = false;
  double mean = 0.0;
  double sd = 1.0;
};

/// Everything needed to transform new data exactly like the fitting data.
struct Preprocessing {
  std::vector<ColumnTransform> columns;
  /// Stratum labels in id order.
  std::vector<std::string> stratum_levels;
};

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  Preprocessing preprocessing;
};

struct Ingested {
  Dataset data;
  IngestReport report;
  /// Input row (0-based, excluding the header) of each Dataset row.
  std::vector<std::size_t> source_rows;
};

Ingested ingest(const std::filesystem::path& path, const IngestConfig& config);

/// With stored preprocessing, columns are transformed with the stored
/// constants and strata mapped through the stored levels instead of being
/// recomputed from this table.
Ingested ingest(const io::DelimitedText& table, const IngestConfig& config,
                const Preprocessing* stored = nullptr);

}  // namespace phiap
