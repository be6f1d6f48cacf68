#include "phiap/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "phiap/error.hpp"

namespace phiap::report {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

io::Cell flag(bool b) { return std::int64_t{b ? 1 : 0}; }
io::Cell count(std::size_t n) { return static_cast<std::int64_t>(n); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::GradientTolerance: return "gradient_tolerance";
    case StopReason::StepTolerance: return "step_tolerance";
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::LineSearchFailure: return "line_search_failure";
  }
  return "unknown";
}

std::string sens_name(std::size_t k, std::size_t K, const std::vector<std::string>& levels) {
  if (K == 1) return "c";
  return "c[" + (k < levels.size() ? levels[k] : std::to_string(k)) + "]";
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + io::format_number(xs[i]);
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  if (!io::parse_double(v, x)) throw UsageError("invalid number for " + key + ": " + v);
  return x;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
  if (out.empty()) throw UsageError("empty list for " + key);
  return out;
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x < 0 || x != std::floor(x) || x > 1e15) throw UsageError("invalid count for " + key + ": " + v);
  return static_cast<std::size_t>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("invalid boolean for " + key + ": " + v);
}

io::Json json_vec(const std::vector<double>& xs) {
  io::Json a = io::Json::array();
  for (double x : xs) a.push_back(io::to_json(x));
  return a;
}

}  // namespace

Format parse_format(const std::string& name) {
  if (name == "csv") return Format::Csv;
  if (name == "json") return Format::Json;
  throw UsageError("unknown output format: " + name);
}

void write_table(const std::filesystem::path& dir, const std::string& stem, const io::Table& table, Format format,
                 const io::Provenance& prov) {
  if (format == Format::Csv) {
    io::write_csv(dir / (stem + ".csv"), table, prov);
  } else {
    io::Json body;
    body[stem] = io::to_json(table);
    io::write_json(dir / (stem + ".json"), body, prov);
  }
}

std::string interval_label(double lower, double upper) {
  auto fmt = [](double x) {
    std::string s = io::format_number(x);
    if (s.find_first_of(".eEN") == std::string::npos) s += ".0";
    return s;
  };
  return fmt(lower) + "_" + fmt(upper);
}

io::Table fit_table(const FitResult& fit, const Dataset& data, const std::vector<std::string>& stratum_levels,
                    const IngestReport* ingest) {
  io::Table t;
  t.columns = {"section", "term", "estimate", "se", "p_value"};
  const auto& names = data.feature_names();
  const auto p = static_cast<Eigen::Index>(fit.params.beta.size());
  for (Eigen::Index j = 0; j < p; ++j) {
    const double se = fit.se[j];
    t.add({std::string("coef"), names[static_cast<std::size_t>(j)], fit.params.beta[j], se,
           wald_p_value(fit.params.beta[j], se)});
  }
  const std::size_t K = fit.params.sens.size();
  for (std::size_t k = 0; k < K; ++k)
    t.add({std::string("sens"), sens_name(k, K, stratum_levels), fit.params.sens[k],
           fit.se[p + static_cast<Eigen::Index>(k)], kNaN});
  t.add({std::string("prevalence"), std::string("q_ratio"), fit.q_ratio, fit.q_ratio_se, kNaN});
  t.add({std::string("prevalence"), std::string("q_avg"), fit.q_avg, fit.q_avg_se, kNaN});
  if (fit.q_by_stratum)
    for (std::size_t k = 0; k < fit.q_by_stratum->size(); ++k)
      t.add({std::string("prevalence"), "q[" + (k < stratum_levels.size() ? stratum_levels[k] : std::to_string(k)) + "]",
             (*fit.q_by_stratum)[k], kNaN, kNaN});
  for (std::size_t k = 0; k < fit.h.size(); ++k)
    t.add({std::string("prevalence"),
           fit.h.size() == 1 ? std::string("h")
                             : "h[" + (k < stratum_levels.size() ? stratum_levels[k] : std::to_string(k)) + "]",
           fit.h[k], kNaN, kNaN});
  auto stat = [&](const std::string& name, io::Cell v) { t.add({std::string("stat"), name, std::move(v), kNaN, kNaN}); };
  stat("loglik", fit.loglik);
  stat("converged", flag(fit.converged));
  stat("iterations", std::int64_t{fit.iterations});
  stat("stop_reason", stop_reason_name(fit.stop_reason));
  stat("grad_norm", fit.grad_norm);
  stat("singular_information", flag(fit.singular_information));
  stat("separation_warning", flag(fit.separation_warning));
  stat("n", count(data.rows()));
  stat("n_anchor", count(data.anchor_count()));
  if (ingest) {
    stat("rows_read", count(ingest->rows_read));
    stat("rows_dropped", count(ingest->rows_dropped));
  }
  return t;
}

io::Table preprocessing_table(const Preprocessing& prep) {
  io::Table t;
  t.columns = {"column", "log1p", "standardized", "mean", "sd"};
  for (const auto& c : prep.columns) t.add({c.name, flag(c.log1p), flag(c.standardized), c.mean, c.sd});
  return t;
}

io::Table predictions_table(const Eigen::VectorXd& prob, const Dataset& data,
                            const std::vector<std::size_t>& source_rows) {
  io::Table t;
  t.columns = {"row", "anchor", "stratum", "probability"};
  for (std::size_t i = 0; i < data.rows(); ++i)
    t.add({count(i < source_rows.size() ? source_rows[i] + 1 : i + 1), std::int64_t{data.anchor()[i]},
           std::int64_t{data.stratum_of(i)}, prob[static_cast<Eigen::Index>(i)]});
  return t;
}

io::Table calibration_table(const CalibrationTable& cal) {
  io::Table t;
  t.columns = {"interval", "lower", "upper", "n_unlabeled", "n_anchor", "model_predicted", "nonparametric",
               "applicable"};
  for (const auto& iv : cal.intervals)
    t.add({interval_label(iv.lower, iv.upper), iv.lower, iv.upper, count(iv.n_unlabeled), count(iv.n_anchor),
           iv.model_predicted_cases, iv.nonparametric_cases, flag(iv.applicable)});
  t.add({std::string("max_discrepancy"), kNaN, kNaN, count(0), count(0), cal.max_discrepancy, kNaN, flag(true)});
  t.add({std::string("q_star"), kNaN, kNaN, count(0), count(0), cal.q_star, kNaN, flag(true)});
  return t;
}

io::Table accuracy_table(const AccuracyReport& report, const AccuracyReport* cv) {
  io::Table t;
  t.columns = {"measure", "cutoff", "estimate", "raw", "se", "cv_estimate", "clamped", "empty", "degenerate"};
  struct Field {
    const char* name;
    Measure AccuracyPoint::*m;
    std::vector<double> AccuracySe::*se;
  };
  const Field fields[] = {{"PPV", &AccuracyPoint::ppv, &AccuracySe::ppv},
                          {"TPR", &AccuracyPoint::tpr, &AccuracySe::tpr},
                          {"NPV", &AccuracyPoint::npv, &AccuracySe::npv},
                          {"FPR", &AccuracyPoint::fpr, &AccuracySe::fpr}};
  for (const auto& f : fields) {
    for (std::size_t k = 0; k < report.points.size(); ++k) {
      const auto& pt = report.points[k];
      const Measure& m = pt.*f.m;
      const double se = report.se ? ((*report.se).*f.se)[k] : kNaN;
      const double cv_value = cv && k < cv->points.size() ? (cv->points[k].*f.m).value : kNaN;
      t.add({std::string(f.name), pt.threshold, m.value, m.raw, se, cv_value, flag(m.clamped), flag(m.empty),
             flag(m.degenerate)});
    }
  }
  t.add({std::string("AUC"), kNaN, report.auc, kNaN, report.se ? report.se->auc : kNaN, cv ? cv->auc : kNaN, flag(false),
         flag(false), flag(false)});
  t.add({std::string("h"), kNaN, report.h, kNaN, kNaN, cv ? cv->h : kNaN, flag(false), flag(false), flag(false)});
  t.add({std::string("q"), kNaN, report.q, kNaN, kNaN, cv ? cv->q : kNaN, flag(false), flag(false), flag(false)});
  if (report.resampling) {
    const auto& r = *report.resampling;
    t.add({std::string("bootstrap_succeeded"), kNaN, static_cast<double>(r.succeeded), kNaN, kNaN, kNaN, flag(false),
           flag(false), flag(r.warning)});
    t.add({std::string("bootstrap_failed"), kNaN, static_cast<double>(r.failed), kNaN, kNaN, kNaN, flag(false),
           flag(false), flag(r.warning)});
  }
  return t;
}

io::Table stepwise_table(const StepwiseResult& result) {
  io::Table t;
  t.columns = {"step", "removed", "p_value", "remaining"};
  for (const auto& s : result.trace) t.add({count(s.step), s.removed, s.p_value, count(s.remaining)});
  return t;
}

io::Table dataset_table(const Dataset& data, const std::string& anchor_name, const std::string& stratum_name) {
  io::Table t;
  const auto& names = data.feature_names();
  t.columns.assign(names.begin() + 1, names.end());
  t.columns.push_back(anchor_name);
  if (data.has_strata()) t.columns.push_back(stratum_name);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    std::vector<io::Cell> row;
    for (std::size_t j = 1; j < data.cols(); ++j)
      row.emplace_back(data.design()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    row.emplace_back(std::int64_t{data.anchor()[i]});
    if (data.has_strata()) row.emplace_back(std::int64_t{data.stratum_of(i)});
    t.add(std::move(row));
  }
  return t;
}

void save_model(const std::filesystem::path& path, const StoredModel& model, const io::Provenance& prov) {
  io::Json body;
  body["features"] = model.feature_names;
  std::vector<double> beta(model.params.beta.data(), model.params.beta.data() + model.params.beta.size());
  body["beta"] = json_vec(beta);
  body["sens"] = json_vec(model.params.sens);
  body["anchor_column"] = model.anchor_column;
  body["stratum_column"] = model.stratum_column ? io::Json(*model.stratum_column) : io::Json(nullptr);
  body["stratum_levels"] = model.preprocessing.stratum_levels;
  io::Json cols = io::Json::array();
  for (const auto& c : model.preprocessing.columns)
    cols.push_back({{"name", c.name}, {"log1p", c.log1p}, {"standardized", c.standardized}, {"mean", c.mean},
                    {"sd", c.sd}});
  body["preprocessing"] = cols;
  body["q_ratio"] = io::to_json(model.q_ratio);
  io::write_json(path, body, prov);
}

StoredModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path.string());
  io::Json j;
  try {
    j = io::Json::parse(in);
    StoredModel m;
    m.feature_names = j.at("features").get<std::vector<std::string>>();
    const auto beta = j.at("beta").get<std::vector<double>>();
    m.params.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    m.params.sens = j.at("sens").get<std::vector<double>>();
    m.anchor_column = j.at("anchor_column").get<std::string>();
    if (!j.at("stratum_column").is_null()) m.stratum_column = j.at("stratum_column").get<std::string>();
    m.preprocessing.stratum_levels = j.at("stratum_levels").get<std::vector<std::string>>();
    for (const auto& c : j.at("preprocessing"))
      m.preprocessing.columns.push_back({c.at("name").get<std::string>(), c.at("log1p").get<bool>(),
                                         c.at("standardized").get<bool>(), c.at("mean").get<double>(),
                                         c.at("sd").get<double>()});
    m.q_ratio = j.at("q_ratio").is_null() ? kNaN : j.at("q_ratio").get<double>();
    if (m.feature_names.size() != beta.size() || m.preprocessing.columns.size() + 1 != beta.size())
      throw DataError("model file is inconsistent: " + path.string());
    m.params.validate();
    return m;
  } catch (const io::Json::exception& e) {
    throw DataError("malformed model file " + path.string() + ": " + e.what());
  }
}

io::Table sim_params_table(const sim::SimSummary& s) {
  io::Table t;
  t.columns = {"parameter", "truth", "mean", "bias", "se", "ese"};
  for (const auto& p : s.params) t.add({p.name, p.truth, p.mean, p.bias, p.se, p.ese});
  return t;
}

io::Table sim_prevalence_table(const sim::SimSummary& s) {
  io::Table t;
  t.columns = {"quantity", "mean", "sd", "ci_low", "ci_high", "se", "replicates"};
  for (const auto& q : s.scalars) t.add({q.name, q.mean, q.sd, q.ci_low, q.ci_high, q.se, count(s.succeeded)});
  return t;
}

io::Table sim_calibration_table(const sim::SimSummary& s) {
  io::Table t;
  t.columns = {"interval", "lower", "upper", "model_predicted", "nonparametric"};
  for (const auto& iv : s.calibration)
    t.add({interval_label(iv.lower, iv.upper), iv.lower, iv.upper, iv.model_predicted, iv.nonparametric});
  t.add({std::string("max_discrepancy"), kNaN, kNaN, s.calibration_max_discrepancy, kNaN});
  return t;
}

io::Table sim_accuracy_table(const sim::SimSummary& s) {
  io::Table t;
  t.columns = {"measure", "cutoff", "est_mean", "est_ese", "true_mean", "true_ese", "bootstrap_se"};
  for (const auto& m : s.accuracy)
    t.add({m.measure, m.cutoff, m.est_mean, m.est_ese, m.true_mean, m.true_ese, m.bootstrap_se});
  return t;
}

io::Json sim_replicates_json(const sim::SimSummary& s) {
  io::Json body;
  io::Json design = io::Json::object();
  for (const auto& [k, v] : design_to_keys(s.design)) design[k] = v;
  body["design"] = design;
  body["attempted"] = s.attempted;
  body["succeeded"] = s.succeeded;
  body["failed"] = s.failed;
  io::Json recs = io::Json::array();
  for (const auto& r : s.records) {
    io::Json j;
    j["index"] = r.index;
    j["converged"] = r.converged;
    j["failure"] = r.failure;
    j["iterations"] = r.iterations;
    j["realized_prevalence"] = io::to_json(r.realized_prevalence);
    j["n_anchor"] = r.n_anchor;
    j["beta"] = json_vec(r.beta);
    j["beta_se"] = json_vec(r.beta_se);
    j["sens"] = json_vec(r.sens);
    j["sens_se"] = json_vec(r.sens_se);
    j["q_ratio"] = io::to_json(r.q_ratio);
    j["q_ratio_se"] = io::to_json(r.q_ratio_se);
    j["q_avg"] = io::to_json(r.q_avg);
    j["calibration_model"] = json_vec(r.cal_model);
    j["calibration_nonparametric"] = json_vec(r.cal_nonparametric);
    j["calibration_max_discrepancy"] = io::to_json(r.cal_max_discrepancy);
    j["est_tpr"] = json_vec(r.est_tpr);
    j["est_fpr"] = json_vec(r.est_fpr);
    j["est_ppv"] = json_vec(r.est_ppv);
    j["est_npv"] = json_vec(r.est_npv);
    j["est_auc"] = io::to_json(r.est_auc);
    j["true_tpr"] = json_vec(r.truth.tpr);
    j["true_fpr"] = json_vec(r.truth.fpr);
    j["true_ppv"] = json_vec(r.truth.ppv);
    j["true_npv"] = json_vec(r.truth.npv);
    j["true_auc"] = io::to_json(r.truth.auc);
    if (r.bootstrap_se) {
      j["bootstrap_se"] = {{"tpr", json_vec(r.bootstrap_se->tpr)},
                           {"fpr", json_vec(r.bootstrap_se->fpr)},
                           {"ppv", json_vec(r.bootstrap_se->ppv)},
                           {"npv", json_vec(r.bootstrap_se->npv)},
                           {"auc", io::to_json(r.bootstrap_se->auc)}};
    }
    recs.push_back(std::move(j));
  }
  body["replicates"] = recs;
  return body;
}

void write_simulation(const std::filesystem::path& dir, const sim::SimSummary& s, Format format,
                      const io::Provenance& prov) {
  write_table(dir, "params", sim_params_table(s), format, prov);
  write_table(dir, "sensitivity_prevalence", sim_prevalence_table(s), format, prov);
  write_table(dir, "calibration", sim_calibration_table(s), format, prov);
  write_table(dir, "accuracy", sim_accuracy_table(s), format, prov);
  io::write_json(dir / "replicates.json", sim_replicates_json(s), prov);
}

std::vector<std::pair<std::string, std::string>> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(s.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (key.empty()) throw UsageError(path.string() + ":" + std::to_string(lineno) + ": empty key");
    out.emplace_back(key, trim(s.substr(eq + 1)));
  }
  return out;
}

sim::SimDesign design_from_keys(const std::vector<std::pair<std::string, std::string>>& kv) {
  sim::SimDesign d;
  for (const auto& [key, v] : kv) {
    if (key == "beta") d.beta_true = to_doubles(key, v);
    else if (key == "prevalence") {
      if (v == "none") d.prevalence_target.reset();
      else d.prevalence_target = to_double(key, v);
    } else if (key == "c") d.c_true = to_doubles(key, v);
    else if (key == "n_train") d.n_train = to_count(key, v);
    else if (key == "n_test") d.n_test = to_count(key, v);
    else if (key == "replicates") d.replicates = to_count(key, v);
    else if (key == "seed") d.seed = static_cast<std::uint64_t>(to_count(key, v));
    else if (key == "model") {
      if (v == "full") d.fitted_model = sim::FittedModel::Full;
      else if (v == "drop_weak") d.fitted_model = sim::FittedModel::DropWeak;
      else if (v == "drop_strong") d.fitted_model = sim::FittedModel::DropStrong;
      else throw UsageError("model must be full, drop_weak or drop_strong");
    } else if (key == "stratified") d.stratified = to_bool(key, v);
    else if (key == "fit_strata") d.fit_strata = to_bool(key, v);
    else if (key == "normal_scale") {
      if (v == "variance") d.normal_scale = sim::NormalScale::Variance;
      else if (v == "sd") d.normal_scale = sim::NormalScale::StdDev;
      else throw UsageError("normal_scale must be variance or sd");
    } else if (key == "thresholds") d.thresholds = to_doubles(key, v);
    else if (key == "edges") d.edges = to_doubles(key, v);
    else if (key == "bootstrap") d.bootstrap = to_count(key, v);
    else if (key == "max_iter") d.fit_config.max_iter = static_cast<int>(to_count(key, v));
    else if (key == "grad_tol") d.fit_config.grad_tol = to_double(key, v);
    else throw UsageError("unknown design key: " + key);
  }
  d.validate();
  return d;
}

std::map<std::string, std::string> design_to_keys(const sim::SimDesign& d) {
  std::map<std::string, std::string> kv;
  kv["beta"] = join(d.beta_true);
  kv["prevalence"] = d.prevalence_target ? io::format_number(*d.prevalence_target) : "none";
  kv["c"] = join(d.c_true);
  kv["n_train"] = std::to_string(d.n_train);
  kv["n_test"] = std::to_string(d.n_test);
  kv["replicates"] = std::to_string(d.replicates);
  kv["seed"] = std::to_string(d.seed);
  kv["model"] = d.fitted_model == sim::FittedModel::Full       ? "full"
                : d.fitted_model == sim::FittedModel::DropWeak ? "drop_weak"
                                                               : "drop_strong";
  kv["stratified"] = d.stratified ? "true" : "false";
  kv["fit_strata"] = d.fit_strata ? "true" : "false";
  kv["normal_scale"] = d.normal_scale == sim::NormalScale::Variance ? "variance" : "sd";
  kv["thresholds"] = join(d.thresholds);
  kv["edges"] = join(d.edges);
  kv["bootstrap"] = std::to_string(d.bootstrap);
  kv["max_iter"] = std::to_string(d.fit_config.max_iter);
  kv["grad_tol"] = io::format_number(d.fit_config.grad_tol);
  return kv;
}

std::uint64_t config_hash(const std::map<std::string, std::string>& kv) {
  std::string text;
  for (const auto& [k, v] : kv) text += k + "=" + v + "\n";
  return io::fnv1a(text);
}

}  // namespace phiap::report
