#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phiap/diagnostics.hpp"
#include "phiap/estimation.hpp"
#include "phiap/ingest.hpp"
#include "phiap/io.hpp"
#include "phiap/simulation.hpp"
#include "phiap/stepwise.hpp"

namespace phiap::report {

enum class Format { Csv, Json };

Format parse_format(const std::string& name);

/// Writes dir/stem.csv, or dir/stem.json holding {"<stem>": rows}.
void write_table(const std::filesystem::path& dir, const std::string& stem, const io::Table& table, Format format,
                 const io::Provenance& prov);

/// "0.0_0.1" style label.
std::string interval_label(double lower, double upper);

/// One row per coefficient, sensitivity and prevalence estimate, followed by
/// fit statistics (section column: coef, sens, prevalence, stat).
io::Table fit_table(const FitResult& fit, const Dataset& data, const std::vector<std::string>& stratum_levels,
                    const IngestReport* ingest = nullptr);
io::Table preprocessing_table(const Preprocessing& prep);
io::Table predictions_table(const Eigen::VectorXd& prob, const Dataset& data, const std::vector<std::size_t>& source_rows);
io::Table calibration_table(const CalibrationTable& cal);
/// cv, when given, fills the cv_estimate column.
io::Table accuracy_table(const AccuracyReport& report, const AccuracyReport* cv = nullptr);
io::Table stepwise_table(const StepwiseResult& result);
/// Features (without the intercept), then anchor and, when present, stratum.
io::Table dataset_table(const Dataset& data, const std::string& anchor_name = "anchor",
                        const std::string& stratum_name = "stratum");

/// Fitted model plus everything needed to score new rows.
struct StoredModel {
  ModelParams params;
  std::vector<std::string> feature_names;  // includes "(Intercept)"
  std::string anchor_column;
  std::optional<std::string> stratum_column;
  Preprocessing preprocessing;
  double q_ratio = 0.0;
};

void save_model(const std::filesystem::path& path, const StoredModel& model, const io::Provenance& prov);
StoredModel load_model(const std::filesystem::path& path);

// Simulation outputs

io::Table sim_params_table(const sim::SimSummary& s);
io::Table sim_prevalence_table(const sim::SimSummary& s);
io::Table sim_calibration_table(const sim::SimSummary& s);
io::Table sim_accuracy_table(const sim::SimSummary& s);
io::Json sim_replicates_json(const sim::SimSummary& s);

/// Writes params, sensitivity_prevalence, calibration and accuracy tables plus replicates.json.
void write_simulation(const std::filesystem::path& dir, const sim::SimSummary& s, Format format,
                      const io::Provenance& prov);

// Key-value files: "key = value" lines, '#' comments, blank lines ignored.

std::vector<std::pair<std::string, std::string>> read_key_values(const std::filesystem::path& path);

/// Unknown keys throw UsageError.
sim::SimDesign design_from_keys(const std::vector<std::pair<std::string, std::string>>& kv);
/// Canonical, complete key set of a design (used for hashing and records).
std::map<std::string, std::string> design_to_keys(const sim::SimDesign& design);

/// FNV-1a of "key=value\n" lines in key order.
std::uint64_t config_hash(const std::map<std::string, std::string>& kv);

}  // namespace phiap::report
