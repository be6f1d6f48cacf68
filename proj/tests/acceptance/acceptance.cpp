// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Usage: phiap_acceptance <path to phiap executable>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/fixtures.hpp"
#include "phiap/estimation.hpp"
#include "phiap/model.hpp"
#include "phiap/simulation.hpp"

namespace fs = std::filesystem;
using namespace phiap;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  std::string failed;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      failed += " [fail: " + what + "]";
    }
  }
};

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << x;
  return s.str();
}

bool within(double x, double lo, double hi) { return x >= lo && x <= hi; }

// Memoized experiment runs, keyed by a label.
class Runs {
 public:
  const sim::SimSummary& get(const std::string& label, const sim::SimDesign& design) {
    auto it = cache_.find(label);
    if (it != cache_.end()) return it->second;
    const auto t0 = std::chrono::steady_clock::now();
    auto [pos, _] = cache_.emplace(label, sim::run_experiment(design));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "  run " << label << ": " << pos->second.succeeded << "/" << pos->second.attempted << " replicates, "
              << fmt(secs, 1) << " s\n";
    return pos->second;
  }

 private:
  std::map<std::string, sim::SimSummary> cache_;
};

sim::SimDesign base_design() {
  sim::SimDesign d;
  d.replicates = 100;
  d.n_train = 10000;
  d.n_test = 5000;
  return d;
}

sim::SimDesign small_c_design(std::size_t n_train) {
  sim::SimDesign d = base_design();
  d.c_true = {0.2};
  d.n_train = n_train;
  return d;
}

sim::SimDesign stratified_design(bool fit_strata) {
  sim::SimDesign d = base_design();
  d.stratified = true;
  d.c_true = {0.2, 0.8};
  d.fit_strata = fit_strata;
  return d;
}

Outcome criterion1(Runs& runs) {
  Outcome o;
  const auto& s = runs.get("default", base_design());
  o.require(s.succeeded == s.attempted, "all replicates converge");
  double worst_strong = 0, worst_weak = 0, lo_ratio = HUGE_VAL, hi_ratio = 0;
  for (int j = 0; j <= 9; ++j) {
    const auto& p = s.param("beta" + std::to_string(j));
    if (j >= 7) worst_strong = std::max(worst_strong, std::abs(p.bias));
    if (j >= 1 && j <= 3) worst_weak = std::max(worst_weak, std::abs(p.bias));
    const double ratio = p.se / p.ese;
    lo_ratio = std::min(lo_ratio, ratio);
    hi_ratio = std::max(hi_ratio, ratio);
    o.require(within(ratio, 0.85, 1.15), "SE/ESE beta" + std::to_string(j) + " = " + fmt(ratio, 3));
  }
  o.require(worst_strong <= 0.15, "strong-trio bias");
  o.require(worst_weak <= 0.05, "weak-trio bias");
  o.detail << "max|bias| strong " << fmt(worst_strong) << " weak " << fmt(worst_weak) << "; SE/ESE in ["
           << fmt(lo_ratio, 3) << ", " << fmt(hi_ratio, 3) << "]";
  return o;
}

Outcome criterion2(Runs& runs) {
  Outcome o;
  const auto& a = runs.get("default", base_design());
  const auto& b = runs.get("c0.2_n10000", small_c_design(10000));
  const double c5 = a.scalar("c").mean, q5 = a.scalar("q_ratio").mean;
  const double c2 = b.scalar("c").mean, q2 = b.scalar("q_ratio").mean;
  o.require(within(c5, 0.48, 0.52), "c at 0.5");
  o.require(within(q5, 0.094, 0.106), "q at c=0.5");
  o.require(within(c2, 0.17, 0.23), "c at 0.2");
  o.require(within(q2, 0.085, 0.115), "q at c=0.2");
  o.detail << "c=0.5: c " << fmt(c5) << " q " << fmt(q5) << "; c=0.2: c " << fmt(c2) << " q " << fmt(q2);
  return o;
}

Outcome criterion3(Runs& runs) {
  Outcome o;
  const auto& full = runs.get("default", base_design());
  sim::SimDesign ds = base_design();
  ds.fitted_model = sim::FittedModel::DropStrong;
  sim::SimDesign dw = base_design();
  dw.fitted_model = sim::FittedModel::DropWeak;
  const auto& strong = runs.get("drop_strong", ds);
  const auto& weak = runs.get("drop_weak", dw);
  const double d_full = full.calibration_max_discrepancy;
  const double d_strong = strong.calibration_max_discrepancy;
  const double d_weak = weak.calibration_max_discrepancy;
  const double q_strong = strong.scalar("q_ratio").mean, q_weak = weak.scalar("q_ratio").mean;
  o.require(q_strong >= 0.18, "DropStrong q");
  o.require(d_strong >= 3 * d_full, "DropStrong discrepancy");
  o.require(within(q_weak, 0.09, 0.11), "DropWeak q");
  o.require(d_weak < 3 * d_full, "DropWeak discrepancy comparable");
  o.detail << "DropStrong q " << fmt(q_strong) << " disc " << fmt(d_strong, 1) << "; DropWeak q " << fmt(q_weak)
           << " disc " << fmt(d_weak, 1) << "; full disc " << fmt(d_full, 1);
  return o;
}

Outcome criterion4(Runs& runs) {
  Outcome o;
  const auto& s = runs.get("default", base_design());
  const auto& ppv = s.measure("PPV", 0.5);
  const auto& tpr = s.measure("TPR", 0.5);
  const auto& auc = s.measure("AUC", 0.5);
  o.require(std::abs(ppv.est_mean - 0.798) <= 0.02, "PPV");
  o.require(std::abs(tpr.est_mean - 0.852) <= 0.02, "TPR");
  o.require(std::abs(auc.est_mean - 0.994) <= 0.005, "AUC");
  double worst_gap = 0.0;
  for (const char* m : {"PPV", "TPR", "NPV", "FPR", "AUC"}) {
    const auto& x = s.measure(m, 0.5);
    const double gap = std::abs(x.est_mean - x.true_mean);
    worst_gap = std::max(worst_gap, gap);
    o.require(gap <= 0.01, std::string(m) + " gap " + fmt(gap));
  }
  o.detail << "PPV " << fmt(ppv.est_mean) << " TPR " << fmt(tpr.est_mean) << " AUC " << fmt(auc.est_mean)
           << "; max est-true gap " << fmt(worst_gap);
  return o;
}

Outcome criterion5(Runs& runs) {
  Outcome o;
  const auto& st = runs.get("stratified", stratified_design(true));
  const auto& pooled = runs.get("stratified_ignored", stratified_design(false));
  const double c1 = st.scalar("c1").mean, c2 = st.scalar("c2").mean, q = st.scalar("q_ratio").mean;
  const double tpr_modelled = st.measure("TPR", 0.5).true_mean;
  const double tpr_ignored = pooled.measure("TPR", 0.5).true_mean;
  o.require(within(c1, 0.17, 0.23), "c1");
  o.require(within(c2, 0.77, 0.83), "c2");
  o.require(within(q, 0.091, 0.109), "q");
  o.require(tpr_ignored <= 0.60, "true TPR ignoring strata");
  o.require(tpr_modelled >= 0.80, "true TPR modelling strata");
  o.detail << "c1 " << fmt(c1) << " c2 " << fmt(c2) << " q " << fmt(q) << "; true TPR@0.5 ignored "
           << fmt(tpr_ignored) << " modelled " << fmt(tpr_modelled);
  return o;
}

Outcome criterion6() {
  Outcome o;
  std::mt19937_64 gen(606);
  std::uniform_real_distribution<double> coef(-2.0, 2.0), sens(0.05, 0.95);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const bool stratified = trial % 3 == 0;
    const std::size_t p = 2 + static_cast<std::size_t>(trial % 4);
    Eigen::VectorXd truth(static_cast<Eigen::Index>(p));
    for (auto& v : truth) v = coef(gen);
    const std::vector<double> c_true = stratified ? std::vector<double>{0.3, 0.7} : std::vector<double>{0.5};
    const Dataset d = fixtures::random_dataset(20 + 3 * static_cast<std::size_t>(trial), p, 7000 + trial, truth,
                                               c_true, stratified);
    ModelParams params;
    params.beta.resize(static_cast<Eigen::Index>(p));
    for (auto& v : params.beta) v = coef(gen);
    params.sens.resize(d.num_strata());
    for (auto& c : params.sens) c = sens(gen);

    const Eigen::VectorXd g = gradient(params, d);
    const double h = 1e-6;
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      ModelParams up = params, dn = params;
      if (j < static_cast<Eigen::Index>(p)) {
        up.beta[j] += h;
        dn.beta[j] -= h;
      } else {
        up.sens[static_cast<std::size_t>(j) - p] += h;
        dn.sens[static_cast<std::size_t>(j) - p] -= h;
      }
      const double fd = (log_likelihood(up, d) - log_likelihood(dn, d)) / (2 * h);
      const double rel = std::abs(g[j] - fd) / std::max({1.0, std::abs(g[j]), std::abs(fd)});
      worst = std::max(worst, rel);
    }
  }
  o.require(worst < 1e-5, "relative error");
  o.detail << "50 fixtures, max relative error " << std::scientific << worst;
  return o;
}

Outcome criterion7() {
  Outcome o;
  int used = 0;
  double worst_coord = 0.0, worst_ll = -HUGE_VAL;
  for (std::uint64_t seed = 1; used < 10 && seed < 200; ++seed) {
    const Dataset d = fixtures::tiny_fixture(60, seed);
    const auto grid = fixtures::grid_search(d.design(), fixtures::anchors_of(d));
    if (grid.on_boundary) continue;
    ++used;
    const FitResult f = fit(d);
    o.require(f.converged, "fixture " + std::to_string(seed) + " converged");
    const double coord = std::max({std::abs(f.params.beta[0] - grid.b0), std::abs(f.params.beta[1] - grid.b1),
                                   std::abs(f.params.sens[0] - grid.c)});
    worst_coord = std::max(worst_coord, coord);
    worst_ll = std::max(worst_ll, grid.loglik - f.loglik);
    o.require(coord <= 0.02, "fixture " + std::to_string(seed) + " coordinates");
    o.require(f.loglik >= grid.loglik - 1e-6, "fixture " + std::to_string(seed) + " loglik");
  }
  o.require(used == 10, "10 interior fixtures");
  o.detail << used << " fixtures (N=60, p=2), max coordinate gap " << fmt(worst_coord)
           << ", max (grid - fit) loglik " << std::scientific << worst_ll;
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion8(const std::string& cli) {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "phiap_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root / "a");
  fs::create_directories(root / "b");
  {
    std::ofstream design(root / "design.txt");
    design << "replicates = 20\nn_train = 5000\nn_test = 2000\nbootstrap = 5\n";
  }
  const std::string base = cli + " simulate --design " + (root / "design.txt").string() + " --export-sample";
  const int ra = std::system(("PHIAP_THREADS=1 " + base + " --output-dir " + (root / "a").string() + " > /dev/null").c_str());
  const int rb = std::system(("PHIAP_THREADS=4 " + base + " --output-dir " + (root / "b").string() + " > /dev/null").c_str());
  o.require(ra == 0 && rb == 0, "simulate exit status");
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    ++files;
    const fs::path other = root / "b" / entry.path().filename();
    o.require(fs::exists(other) && slurp(entry.path()) == slurp(other),
              entry.path().filename().string() + " identical");
  }
  o.require(files >= 5, "output files written");
  o.detail << files << " files compared across 1 and 4 worker threads";
  fs::remove_all(root);
  return o;
}

Outcome criterion9(Runs& runs) {
  Outcome o;
  const double b10 = runs.get("c0.2_n10000", small_c_design(10000)).param("beta9").bias;
  const double b20 = runs.get("c0.2_n20000", small_c_design(20000)).param("beta9").bias;
  o.require(std::abs(b20) <= 0.5 * std::abs(b10), "bias halves");
  o.detail << "bias beta9 at n=10000 " << fmt(b10) << ", n=20000 " << fmt(b20);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: phiap_acceptance <phiap executable>\n";
    return 2;
  }
  const std::string cli = argv[1];
  Runs runs;
  struct Entry {
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Entry> criteria{
      {"parameter recovery", [&] { return criterion1(runs); }},
      {"sensitivity and prevalence recovery", [&] { return criterion2(runs); }},
      {"misspecification detection", [&] { return criterion3(runs); }},
      {"accuracy estimator fidelity", [&] { return criterion4(runs); }},
      {"stratified sensitivity", [&] { return criterion5(runs); }},
      {"gradient correctness", [] { return criterion6(); }},
      {"optimizer oracle", [] { return criterion7(); }},
      {"determinism", [&] { return criterion8(cli); }},
      {"small-c bias shrinkage", [&] { return criterion9(runs); }},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    failures += !o.pass;
    std::cout << "criterion " << k + 1 << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[k].name << ": "
              << o.detail.str() << o.failed << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
