#include "phiap/ingest.hpp"

#include <algorithm>
#include <cmath>

#include "phiap/error.hpp"

namespace phiap {
namespace {

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw UsageError("column not found: " + name);
  return static_cast<std::size_t>(it - header.begin());
}

bool contains(const std::vector<std::string>& xs, const std::string& x) {
  return std::find(xs.begin(), xs.end(), x) != xs.end();
}

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

Ingested ingest(const std::filesystem::path& path, const IngestConfig& config) {
  return ingest(io::read_delimited(path, config.delimiter), config);
}

Ingested ingest(const io::DelimitedText& table, const IngestConfig& config, const Preprocessing* stored) {
  const auto& header = table.header;
  if (config.anchor_column.empty()) throw UsageError("anchor column not set");
  const std::size_t anchor_col = column_index(header, config.anchor_column);
  std::optional<std::size_t> stratum_col;
  if (config.stratum_column) stratum_col = column_index(header, *config.stratum_column);

  std::vector<std::string> features = config.features;
  if (features.empty()) {
    for (const auto& h : header)
      if (h != config.anchor_column && (!config.stratum_column || h != *config.stratum_column)) features.push_back(h);
  }
  if (features.empty()) throw UsageError("no feature columns selected");
  std::vector<std::size_t> feature_cols;
  for (const auto& f : features) {
    if (f == config.anchor_column || (config.stratum_column && f == *config.stratum_column))
      throw UsageError("column used both as feature and as anchor/stratum: " + f);
    feature_cols.push_back(column_index(header, f));
  }
  for (const auto& l : config.log_transform)
    if (!contains(features, l)) throw UsageError("log-transform column is not a selected feature: " + l);
  if (stored && stored->columns.size() != features.size())
    throw UsageError("stored preprocessing has " + std::to_string(stored->columns.size()) + " columns, data selects " +
                     std::to_string(features.size()));

  const std::size_t p = features.size();
  std::vector<std::vector<double>> values;
  std::vector<std::uint8_t> anchor;
  std::vector<std::string> stratum_labels;
  std::vector<std::size_t> source_rows;
  std::size_t dropped = 0;

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = " (row " + std::to_string(r + 1) + ")";
    bool missing = io::is_missing(row[anchor_col]) || (stratum_col && io::is_missing(row[*stratum_col]));
    for (std::size_t c : feature_cols) missing = missing || io::is_missing(row[c]);
    if (missing) {
      if (!config.complete_case) throw DataError("missing value with complete-case filtering disabled" + where);
      ++dropped;
      continue;
    }
    double a = 0.0;
    if (!io::parse_double(row[anchor_col], a) || (a != 0.0 && a != 1.0))
      throw DataError("anchor column must contain only 0 or 1, found '" + row[anchor_col] + "'" + where);
    std::vector<double> x(p);
    for (std::size_t j = 0; j < p; ++j) {
      if (!io::parse_double(row[feature_cols[j]], x[j]) || !std::isfinite(x[j]))
        throw DataError("unparseable value '" + row[feature_cols[j]] + "' in column " + features[j] + where);
    }
    values.push_back(std::move(x));
    anchor.push_back(static_cast<std::uint8_t>(a));
    if (stratum_col) stratum_labels.push_back(trimmed(row[*stratum_col]));
    source_rows.push_back(r);
  }
  const std::size_t n = values.size();
  if (n == 0) throw DataError("no rows left after complete-case filtering");
  if (std::none_of(anchor.begin(), anchor.end(), [](std::uint8_t s) { return s == 1; }))
    throw DataError("no anchor-positive rows");

  Preprocessing prep;
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p + 1));
  design.col(0).setOnes();
  for (std::size_t j = 0; j < p; ++j) {
    ColumnTransform t;
    t.name = features[j];
    t.log1p = stored ? stored->columns[j].log1p : contains(config.log_transform, features[j]);
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v = values[i][j];
      if (t.log1p) {
        if (v <= -1.0) throw DataError("log(1+x) undefined for " + io::format_number(v) + " in column " + t.name);
        v = std::log1p(v);
      }
      col[i] = v;
    }
    if (stored) {
      t.standardized = stored->columns[j].standardized;
      t.mean = stored->columns[j].mean;
      t.sd = stored->columns[j].sd;
    } else if (config.standardize) {
      double mean = 0.0;
      for (double v : col) mean += v;
      mean /= static_cast<double>(n);
      double ss = 0.0;
      for (double v : col) ss += (v - mean) * (v - mean);
      const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
      if (!(sd > 0.0)) throw DataError("zero variance column: " + t.name);
      const bool binary = std::all_of(col.begin(), col.end(), [](double v) { return v == 0.0 || v == 1.0; });
      if (!binary) {
        t.standardized = true;
        t.mean = mean;
        t.sd = sd;
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) =
          t.standardized ? (col[i] - t.mean) / t.sd : col[i];
    prep.columns.push_back(t);
  }

  std::optional<std::vector<int>> stratum;
  if (stratum_col) {
    if (stored) {
      prep.stratum_levels = stored->stratum_levels;
    } else {
      prep.stratum_levels = stratum_labels;
      std::sort(prep.stratum_levels.begin(), prep.stratum_levels.end());
      prep.stratum_levels.erase(std::unique(prep.stratum_levels.begin(), prep.stratum_levels.end()),
                                prep.stratum_levels.end());
    }
    std::vector<int> ids(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto it = std::find(prep.stratum_levels.begin(), prep.stratum_levels.end(), stratum_labels[i]);
      if (it == prep.stratum_levels.end()) throw DataError("unknown stratum level: " + stratum_labels[i]);
      ids[i] = static_cast<int>(it - prep.stratum_levels.begin());
    }
    stratum = std::move(ids);
  }

  std::vector<std::string> names{"(Intercept)"};
  names.insert(names.end(), features.begin(), features.end());
  Ingested out{Dataset(std::move(design), std::move(anchor), std::move(names), std::move(stratum)), {}, {}};
  out.report.rows_read = table.rows.size();
  out.report.rows_dropped = dropped;
  out.report.preprocessing = std::move(prep);
  out.source_rows = std::move(source_rows);
  return out;
}

}  // namespace phiap
