#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "phiap/diagnostics.hpp"
#include "phiap/error.hpp"
#include "phiap/estimation.hpp"
#include "phiap/ingest.hpp"
#include "phiap/report.hpp"
#include "phiap/simulation.hpp"
#include "phiap/stepwise.hpp"

namespace fs = std::filesystem;
using namespace phiap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitConvergence = 3;

struct Options {
  // ingestion
  std::string input;
  std::string anchor;
  std::string stratum;
  std::vector<std::string> features;
  std::vector<std::string> log_transform;
  bool standardize = false;
  bool complete_case = true;
  std::string delimiter = "comma";
  // fitting
  int max_iter = 500;
  double grad_tol = 1e-6;
  bool stepwise = false;
  double p_threshold = 0.1;
  // validation
  std::string model;
  std::vector<double> edges = default_calibration_edges();
  double q_star = 0.0;
  std::vector<double> thresholds = default_thresholds();
  std::size_t folds = 0;
  std::size_t bootstrap = 0;
  // simulation
  std::string design;
  std::size_t replicates = 0;
  bool export_sample = false;
  // output
  std::uint64_t seed = 20190417;
  std::string output_dir;
  std::string format = "csv";
  std::string config;
};

void add_ingest_options(CLI::App* cmd, Options& o, bool anchor_required) {
  cmd->add_option("--input", o.input, "Delimited input file with a header row")->required();
  auto* anchor = cmd->add_option("--anchor", o.anchor, "Anchor column (values 0/1)");
  if (anchor_required) anchor->required();
  cmd->add_option("--stratum", o.stratum, "Stratum column; one sensitivity is fitted per level");
  cmd->add_option("--features", o.features, "Feature columns (default: all other columns)")->delimiter(',');
  cmd->add_option("--log-transform", o.log_transform, "Columns transformed by log(1+x)")->delimiter(',');
  cmd->add_option("--standardize", o.standardize, "Standardize non-binary features (true/false)");
  cmd->add_option("--complete-case", o.complete_case, "Drop rows with missing values (true/false)");
  cmd->add_option("--delimiter", o.delimiter, "comma or tab")->check(CLI::IsMember({"comma", "tab"}));
}

void add_fit_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--max-iter", o.max_iter, "Optimizer iteration limit")->check(CLI::PositiveNumber);
  cmd->add_option("--grad-tol", o.grad_tol, "Gradient sup-norm tolerance")->check(CLI::PositiveNumber);
}

void add_output_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--output-dir", o.output_dir, "Output directory (default: $PHIAP_OUTPUT_DIR or .)");
  cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--config", o.config, "key = value file; command-line flags take precedence");
}

IngestConfig ingest_config(const Options& o) {
  IngestConfig c;
  c.anchor_column = o.anchor;
  if (!o.stratum.empty()) c.stratum_column = o.stratum;
  c.features = o.features;
  c.log_transform = o.log_transform;
  c.standardize = o.standardize;
  c.complete_case = o.complete_case;
  c.delimiter = o.delimiter == "tab" ? '\t' : ',';
  return c;
}

FitConfig fit_config(const Options& o) {
  FitConfig c;
  c.max_iter = o.max_iter;
  c.grad_tol = o.grad_tol;
  c.validate();
  return c;
}

fs::path output_dir(const Options& o) {
  fs::path dir = o.output_dir;
  if (dir.empty()) {
    const char* env = std::getenv("PHIAP_OUTPUT_DIR");
    dir = env && *env ? fs::path(env) : fs::path(".");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory " + dir.string());
  return dir;
}

// Every option except paths that only say where things go.
std::uint64_t options_hash(const CLI::App* cmd) {
  std::map<std::string, std::string> kv;
  kv["command"] = cmd->get_name();
  for (const CLI::Option* opt : cmd->get_options()) {
    const std::string name = opt->get_name();
    if (name == "--help" || name == "--config" || name == "--output-dir") continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    } else {
      value = opt->get_default_str();
    }
    kv[name] = value;
  }
  return report::config_hash(kv);
}

io::Provenance provenance(std::uint64_t seed, std::uint64_t hash) { return {io::tool_version(), seed, hash}; }

void write_fit_outputs(const fs::path& dir, const Ingested& in, const Dataset& data, const FitResult& f,
                       const Options& o, const io::Provenance& prov) {
  const auto fmt = report::parse_format(o.format);
  const auto& levels = in.report.preprocessing.stratum_levels;
  report::write_table(dir, "fit", report::fit_table(f, data, levels, &in.report), fmt, prov);
  report::write_table(dir, "preprocessing", report::preprocessing_table(in.report.preprocessing), fmt, prov);
  report::write_table(dir, "predictions", report::predictions_table(predict_probs(f.params.beta, data), data,
                                                                    in.source_rows),
                      fmt, prov);

  report::StoredModel m;
  m.params = f.params;
  m.feature_names = data.feature_names();
  m.anchor_column = o.anchor;
  if (!o.stratum.empty()) m.stratum_column = o.stratum;
  // Keep only the transforms of the columns that stayed in the model.
  for (std::size_t j = 1; j < data.cols(); ++j)
    for (const auto& c : in.report.preprocessing.columns)
      if (c.name == data.feature_names()[j]) m.preprocessing.columns.push_back(c);
  m.preprocessing.stratum_levels = levels;
  m.q_ratio = f.q_ratio;
  report::save_model(dir / "model.json", m, prov);
}

void print_fit_summary(const FitResult& f) {
  std::cout << (f.converged ? "converged" : "did not converge") << " after " << f.iterations << " iterations;";
  for (std::size_t k = 0; k < f.params.sens.size(); ++k)
    std::cout << " c" << (f.params.sens.size() > 1 ? std::to_string(k + 1) : "") << "="
              << io::format_number(f.params.sens[k]);
  std::cout << " q_ratio=" << io::format_number(f.q_ratio) << " q_avg=" << io::format_number(f.q_avg) << '\n';
}

int run_fit(const CLI::App* cmd, const Options& o, bool select_only) {
  const Ingested in = ingest(o.input, ingest_config(o));
  const auto dir = output_dir(o);
  const auto prov = provenance(o.seed, options_hash(cmd));
  const FitConfig fc = fit_config(o);

  Dataset data = in.data;
  FitResult f;
  if (o.stepwise || select_only) {
    StepwiseConfig sc;
    sc.p_threshold = o.p_threshold;
    sc.fit = fc;
    const StepwiseResult sel = stepwise_select(in.data, sc);
    report::write_table(dir, "stepwise_trace", report::stepwise_table(sel), report::parse_format(o.format), prov);
    if (sel.warning) std::cerr << "phiap: warning: " << sel.message << '\n';
    data = in.data.select_columns(sel.columns);
    f = sel.fit;
    std::cout << "selected " << sel.selected.size() - 1 << " of " << in.data.cols() - 1 << " features\n";
  } else {
    f = fit(data, fc);
  }
  write_fit_outputs(dir, in, data, f, o, prov);
  print_fit_summary(f);
  return f.converged ? kExitOk : kExitConvergence;
}

int run_validate(const CLI::App* cmd, const Options& o) {
  const auto dir = output_dir(o);
  const auto prov = provenance(o.seed, options_hash(cmd));
  const auto fmt = report::parse_format(o.format);
  const FitConfig fc = fit_config(o);

  FitResult f;
  std::optional<Ingested> in;
  if (!o.model.empty()) {
    // Score with a stored model: its columns, transforms and strata, no refit.
    const report::StoredModel m = report::load_model(o.model);
    IngestConfig ic = ingest_config(o);
    ic.anchor_column = o.anchor.empty() ? m.anchor_column : o.anchor;
    ic.stratum_column = m.stratum_column;
    ic.features.assign(m.feature_names.begin() + 1, m.feature_names.end());
    ic.log_transform.clear();
    in = ingest(io::read_delimited(o.input, ic.delimiter), ic, &m.preprocessing);
    f.params = m.params;
    f.q_ratio = m.q_ratio;
    f.converged = true;
    const auto prev = estimate_prevalence(f, in->data);
    f.q_avg = prev.q_avg;
  } else {
    if (o.anchor.empty()) throw UsageError("--anchor is required without --model");
    in = ingest(o.input, ingest_config(o));
    f = fit(in->data, fc);
    write_fit_outputs(dir, *in, in->data, f, o, prov);
  }
  const Dataset& data = in->data;

  std::optional<double> q_star;
  if (o.q_star > 0.0) q_star = o.q_star;
  const CalibrationTable cal = calibration_table(f, data, o.edges, q_star);
  report::write_table(dir, "calibration", report::calibration_table(cal), fmt, prov);

  AccuracyReport acc = accuracy(f, data, o.thresholds);
  if (o.bootstrap > 0) {
    const AccuracyReport boot = bootstrap_se(data, fc, o.thresholds, o.bootstrap, o.seed);
    acc.se = boot.se;
    acc.resampling = boot.resampling;
    if (boot.resampling && boot.resampling->warning)
      std::cerr << "phiap: warning: " << boot.resampling->failed << " of " << boot.resampling->requested
                << " bootstrap replicates failed\n";
  }
  std::optional<AccuracyReport> cv;
  if (o.folds > 0) cv = cross_validate(data, fc, o.folds, o.thresholds, o.seed);
  report::write_table(dir, "accuracy", report::accuracy_table(acc, cv ? &*cv : nullptr), fmt, prov);

  std::cout << "max calibration discrepancy " << io::format_number(cal.max_discrepancy) << "; AUC "
            << io::format_number(acc.auc);
  if (cv) std::cout << "; cross-validated AUC " << io::format_number(cv->auc);
  std::cout << '\n';
  return f.converged ? kExitOk : kExitConvergence;
}

int run_simulate(const Options& o) {
  sim::SimDesign design = o.design.empty() ? sim::SimDesign{} : report::design_from_keys(report::read_key_values(o.design));
  if (o.replicates > 0) design.replicates = o.replicates;
  design.validate();
  const auto dir = output_dir(o);
  const io::Provenance prov = provenance(design.seed, report::config_hash(report::design_to_keys(design)));
  if (o.export_sample) {
    const sim::SimSample sample = sim::generate(design, 0);
    io::write_csv(dir / "sample_train.csv", report::dataset_table(sample.train), prov);
    io::write_csv(dir / "sample_test.csv", report::dataset_table(sample.test), prov);
  }
  const sim::SimSummary s = sim::run_experiment(design);
  report::write_simulation(dir, s, report::parse_format(o.format), prov);
  std::cout << s.succeeded << " of " << s.attempted << " replicates converged\n";
  return s.succeeded > 0 ? kExitOk : kExitConvergence;
}

// Prepends "--key=value" for every config-file entry the command line does not set.
std::vector<std::string> expand_config(CLI::App& app, const std::vector<std::string>& args) {
  if (args.empty()) return args;
  CLI::App* cmd = nullptr;
  for (CLI::App* sub : app.get_subcommands({}))
    if (sub->get_name() == args[0]) cmd = sub;
  if (!cmd) return args;

  std::string config_path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;

  std::vector<std::string> out{args[0]};
  for (const auto& [key, value] : report::read_key_values(config_path)) {
    if (key == "config") throw UsageError("config files cannot include other config files");
    if (!cmd->get_option_no_throw("--" + key)) throw UsageError("unknown config key for " + args[0] + ": " + key);
    bool on_command_line = false;
    for (std::size_t i = 1; i < args.size(); ++i)
      on_command_line = on_command_line || args[i] == "--" + key || args[i].rfind("--" + key + "=", 0) == 0;
    if (!on_command_line) out.push_back("--" + key + "=" + value);
  }
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phenotype models from anchor-positive and unlabeled data"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", io::tool_version());
  Options o;

  auto* fit_cmd = app.add_subcommand("fit", "Fit the model and write coefficients, prevalence and predictions");
  add_ingest_options(fit_cmd, o, true);
  add_fit_options(fit_cmd, o);
  fit_cmd->add_flag("--stepwise{true}", o.stepwise, "Backward stepwise selection before the final fit");
  fit_cmd->add_option("--p-threshold", o.p_threshold, "Stepwise removal threshold")->check(CLI::Range(0.0, 1.0));
  add_output_options(fit_cmd, o);

  auto* validate_cmd = app.add_subcommand("validate", "Calibration table and predictive accuracy");
  add_ingest_options(validate_cmd, o, false);
  add_fit_options(validate_cmd, o);
  validate_cmd->add_option("--model", o.model, "Score with a stored model.json instead of refitting");
  validate_cmd->add_option("--edges", o.edges, "Calibration interval edges")->delimiter(',');
  validate_cmd->add_option("--q-star", o.q_star, "Prevalence for the nonparametric estimate (default: fitted)");
  validate_cmd->add_option("--thresholds", o.thresholds, "Decision thresholds")->delimiter(',');
  validate_cmd->add_option("--folds", o.folds, "Cross-validation folds (0 disables)");
  validate_cmd->add_option("--bootstrap", o.bootstrap, "Bootstrap replicates for SEs (0 disables)");
  add_output_options(validate_cmd, o);

  auto* select_cmd = app.add_subcommand("select", "Backward stepwise selection by Wald p-value");
  add_ingest_options(select_cmd, o, true);
  add_fit_options(select_cmd, o);
  select_cmd->add_option("--p-threshold", o.p_threshold, "Removal threshold")->check(CLI::Range(0.0, 1.0));
  add_output_options(select_cmd, o);

  auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation study from a design file");
  sim_cmd->add_option("--design", o.design, "Design file (key = value)");
  sim_cmd->add_option("--replicates", o.replicates, "Override the design's replicate count");
  sim_cmd->add_flag("--export-sample{true}", o.export_sample,
                    "Also write replicate 0's training and test data as sample_train.csv and sample_test.csv");
  sim_cmd->add_option("--output-dir", o.output_dir, "Output directory (default: $PHIAP_OUTPUT_DIR or .)");
  sim_cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(app, args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  } catch (const Error& e) {
    std::cerr << "phiap: error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*fit_cmd) return run_fit(fit_cmd, o, false);
    if (*select_cmd) return run_fit(select_cmd, o, true);
    if (*validate_cmd) return run_validate(validate_cmd, o);
    if (*sim_cmd) return run_simulate(o);
  } catch (const UsageError& e) {
    std::cerr << "phiap: error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "phiap: error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "phiap: error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
