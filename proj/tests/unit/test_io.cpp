#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fixtures.hpp"
#include "phiap/error.hpp"
#include "phiap/ingest.hpp"
#include "phiap/io.hpp"
#include "phiap/report.hpp"

using namespace phiap;

namespace {

io::DelimitedText parse(const std::string& text, char delim = ',') {
  std::istringstream in(text);
  return io::read_delimited(in, delim);
}

IngestConfig config_for(std::string anchor) {
  IngestConfig c;
  c.anchor_column = std::move(anchor);
  return c;
}

std::vector<std::size_t> argsort(const Eigen::VectorXd& v) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return v[static_cast<Eigen::Index>(a)] < v[static_cast<Eigen::Index>(b)]; });
  return idx;
}

}  // namespace

TEST(Io, FormatNumberRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.125, 5e-324, 0.0}) {
    const std::string s = io::format_number(x);
    double back = 0.0;
    ASSERT_TRUE(io::parse_double(s, back)) << s;
    EXPECT_EQ(back, x) << s;
  }
  EXPECT_EQ(io::format_number(std::nan("")), "NA");
  EXPECT_EQ(io::format_number(0.5), "0.5");
}

TEST(Io, CsvQuotingRoundTrips) {
  io::Table t;
  t.columns = {"name", "value"};
  t.add({std::string("a,b"), 1.5});
  t.add({std::string("say \"hi\""), std::int64_t{3}});
  t.add({std::string("plain"), std::nan("")});
  std::ostringstream out;
  io::write_csv(out, t, io::Provenance{"0.1.0", 1, 2});
  const auto back = parse(out.str());
  ASSERT_EQ(back.rows.size(), 3u);
  EXPECT_EQ(back.header, (std::vector<std::string>{"name", "value"}));
  EXPECT_EQ(back.rows[0][0], "a,b");
  EXPECT_EQ(back.rows[1][0], "say \"hi\"");
  EXPECT_EQ(back.rows[2][1], "NA");
  EXPECT_EQ(out.str().rfind("# phiap 0.1.0 seed=1 config=0000000000000002", 0), 0u);
}

TEST(Io, MissingTokens) {
  for (const char* s : {"", "NA", "na", "NaN", " nan "}) EXPECT_TRUE(io::is_missing(s)) << s;
  for (const char* s : {"0", "N", "none"}) EXPECT_FALSE(io::is_missing(s)) << s;
  double v = 0.0;
  EXPECT_FALSE(io::parse_double("1.5x", v));
  EXPECT_TRUE(io::parse_double("-1e3", v));
  EXPECT_EQ(v, -1000.0);
}

TEST(Io, FieldCountMismatchAndEmptyInputAreDataErrors) {
  EXPECT_THROW(parse("a,b\n1,2,3\n"), DataError);
  EXPECT_THROW(parse(""), DataError);
  EXPECT_THROW(parse("# only a comment\n\n"), DataError);
}

TEST(Ingest, CompleteCaseDropsIncompleteRows) {
  const auto text = parse("s,x1,x2\n1,0.5,2\n0,NA,3\n0,1.5,4\n1,2.5,\n0,3.5,6\n");
  IngestConfig cfg = config_for("s");
  EXPECT_THROW(ingest(parse("s,x1,x2\n1,0.5,2\n0,NA,3\n0,1,1\n"), [] {
                 IngestConfig c;
                 c.anchor_column = "s";
                 c.complete_case = false;
                 return c;
               }()),
               DataError);
  const auto in = ingest(text, cfg);
  EXPECT_EQ(in.report.rows_read, 5u);
  EXPECT_EQ(in.report.rows_dropped, 2u);
  EXPECT_EQ(in.data.rows(), 3u);
  EXPECT_EQ(in.source_rows, (std::vector<std::size_t>{0, 2, 4}));
  EXPECT_EQ(in.data.feature_names(), (std::vector<std::string>{"(Intercept)", "x1", "x2"}));
}

TEST(Ingest, OneMissingCellOfFiveRows) {
  const auto in = ingest(parse("s,x\n1,1\n0,2\n0,\n1,4\n0,5\n"), config_for("s"));
  EXPECT_EQ(in.data.rows(), 4u);
  EXPECT_EQ(in.report.rows_dropped, 1u);
}

TEST(Ingest, InvalidValuesAreErrors) {
  EXPECT_THROW(ingest(parse("s,x\n1,1\n2,2\n0,3\n"), config_for("s")), DataError);
  EXPECT_THROW(ingest(parse("s,x\n1,1\n0,abc\n0,3\n"), config_for("s")), DataError);
  EXPECT_THROW(ingest(parse("s,x\n1,1\n0,inf\n0,3\n"), config_for("s")), DataError);
  EXPECT_THROW(ingest(parse("s,x\n0,1\n0,2\n"), config_for("s")), DataError);
  EXPECT_THROW(ingest(parse("s,x\n1,1\n0,2\n"), config_for("missing")), UsageError);
  IngestConfig cfg = config_for("s");
  cfg.features = {"x", "y"};
  EXPECT_THROW(ingest(parse("s,x\n1,1\n0,2\n"), cfg), UsageError);
}

TEST(Ingest, StandardizationSkipsBinaryAndRejectsConstant) {
  IngestConfig cfg = config_for("s");
  cfg.standardize = true;
  const auto in = ingest(parse("s,x,b\n1,1,0\n0,2,1\n0,3,1\n1,4,0\n"), cfg);
  const auto& cols = in.report.preprocessing.columns;
  ASSERT_EQ(cols.size(), 2u);
  EXPECT_TRUE(cols[0].standardized);
  EXPECT_DOUBLE_EQ(cols[0].mean, 2.5);
  EXPECT_NEAR(cols[0].sd, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_FALSE(cols[1].standardized);
  const auto x = in.data.design().col(1);
  EXPECT_NEAR(x.mean(), 0.0, 1e-15);
  EXPECT_NEAR((x.array() - x.mean()).square().sum() / 3.0, 1.0, 1e-14);
  EXPECT_TRUE(in.data.design().col(2).isApprox(Eigen::Vector4d(0, 1, 1, 0)));
  EXPECT_THROW(ingest(parse("s,x\n1,7\n0,7\n0,7\n"), cfg), DataError);
}

TEST(Ingest, LogTransformBeforeStandardizing) {
  IngestConfig cfg = config_for("s");
  cfg.log_transform = {"x"};
  const auto in = ingest(parse("s,x\n1,0\n0,1\n0,9\n"), cfg);
  EXPECT_DOUBLE_EQ(in.data.design()(1, 1), std::log1p(1.0));
  EXPECT_DOUBLE_EQ(in.data.design()(2, 1), std::log1p(9.0));
  EXPECT_TRUE(in.report.preprocessing.columns[0].log1p);
  EXPECT_THROW(ingest(parse("s,x\n1,0\n0,-1\n0,9\n"), cfg), DataError);
}

TEST(Ingest, StoredPreprocessingIsReused) {
  IngestConfig cfg = config_for("s");
  cfg.standardize = true;
  const auto train = ingest(parse("s,x\n1,1\n0,2\n0,3\n1,4\n"), cfg);
  const auto scored = ingest(parse("s,x\n1,10\n0,2.5\n"), cfg, &train.report.preprocessing);
  const auto& t = train.report.preprocessing.columns[0];
  EXPECT_DOUBLE_EQ(scored.data.design()(0, 1), (10 - t.mean) / t.sd);
  EXPECT_DOUBLE_EQ(scored.data.design()(1, 1), 0.0);
}

TEST(Ingest, ScoresRankInvariantUnderAffineRescalingWithStoredConstants) {
  Eigen::VectorXd beta(3);
  beta << -0.5, 1.0, -0.7;
  const Dataset d = fixtures::random_dataset(200, 3, 8, beta, {0.5});
  std::ostringstream raw, scaled;
  raw << "s,a,b\n";
  scaled << "s,a,b\n";
  for (std::size_t i = 0; i < d.rows(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    raw << int(d.anchor()[i]) << ',' << io::format_number(d.design()(r, 1)) << ','
        << io::format_number(d.design()(r, 2)) << '\n';
    scaled << int(d.anchor()[i]) << ',' << io::format_number(3.0 * d.design()(r, 1) + 7.0) << ','
           << io::format_number(0.5 * d.design()(r, 2) - 2.0) << '\n';
  }
  IngestConfig cfg = config_for("s");
  cfg.standardize = true;
  const auto a = ingest(parse(raw.str()), cfg);
  const auto b = ingest(parse(scaled.str()), cfg);
  EXPECT_LT((a.data.design() - b.data.design()).cwiseAbs().maxCoeff(), 1e-12);
  const FitResult f = fit(a.data);
  // Re-scoring the rescaled rows through the rescaled constants keeps the order.
  const auto rescored = ingest(parse(scaled.str()), cfg, &b.report.preprocessing);
  EXPECT_EQ(argsort(predict_probs(f.params.beta, a.data)), argsort(predict_probs(f.params.beta, rescored.data)));
}

TEST(Ingest, StrataTabsAndFeatureOrder) {
  IngestConfig cfg = config_for("s");
  cfg.stratum_column = "site";
  cfg.features = {"b", "a"};
  cfg.delimiter = '\t';
  const auto in = ingest(parse("a\ts\tsite\tb\n1\t1\tnorth\t5\n2\t0\tnorth\t6\n3\t1\tsouth\t7\n4\t0\tsouth\t8\n", '\t'), cfg);
  EXPECT_EQ(in.data.feature_names(), (std::vector<std::string>{"(Intercept)", "b", "a"}));
  EXPECT_EQ(in.report.preprocessing.stratum_levels, (std::vector<std::string>{"north", "south"}));
  EXPECT_EQ(in.data.stratum_of(2), 1);
  EXPECT_DOUBLE_EQ(in.data.design()(0, 1), 5.0);
  Preprocessing stored = in.report.preprocessing;
  EXPECT_THROW(ingest(parse("a\ts\tsite\tb\n1\t1\teast\t5\n2\t0\teast\t6\n", '\t'), cfg, &stored), DataError);
}

TEST(Ingest, ExportedDatasetRoundTrips) {
  Eigen::VectorXd beta(3);
  beta << 0.1, -0.4, 1.2;
  const Dataset d = fixtures::random_dataset(80, 3, 9, beta, {0.3, 0.7}, true);
  const auto dir = std::filesystem::temp_directory_path() / "phiap_io_roundtrip";
  std::filesystem::create_directories(dir);
  const auto path = dir / "data.csv";
  io::write_csv(path, report::dataset_table(d), io::Provenance{"0.1.0", 0, 0});
  IngestConfig cfg = config_for("anchor");
  cfg.stratum_column = "stratum";
  const auto back = ingest(path, cfg);
  EXPECT_LT((back.data.design() - d.design()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(std::equal(d.anchor().begin(), d.anchor().end(), back.data.anchor().begin()));
  for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_EQ(back.data.stratum_of(i), d.stratum_of(i));
  std::filesystem::remove_all(dir);
}

TEST(Report, IntervalLabels) {
  EXPECT_EQ(report::interval_label(0.0, 0.1), "0.0_0.1");
  EXPECT_EQ(report::interval_label(0.9, 1.0), "0.9_1.0");
}

TEST(Report, DesignKeysRoundTripAndRejectUnknown) {
  sim::SimDesign d;
  d.c_true = {0.2};
  d.replicates = 7;
  const auto keys = report::design_to_keys(d);
  std::vector<std::pair<std::string, std::string>> kv(keys.begin(), keys.end());
  const auto back = report::design_from_keys(kv);
  EXPECT_EQ(back.c_true, d.c_true);
  EXPECT_EQ(back.replicates, 7u);
  EXPECT_EQ(report::config_hash(report::design_to_keys(back)), report::config_hash(keys));
  EXPECT_THROW(report::design_from_keys({{"bogus", "1"}}), UsageError);
}

TEST(Report, StoredModelRoundTrips) {
  report::StoredModel m;
  m.params.beta = Eigen::Vector2d(0.25, -1.0 / 3.0);
  m.params.sens = {0.4};
  m.feature_names = {"(Intercept)", "x"};
  m.anchor_column = "s";
  m.preprocessing.columns = {{"x", true, true, 1.5, 2.0}};
  m.q_ratio = 0.125;
  const auto path = std::filesystem::temp_directory_path() / "phiap_model_test.json";
  report::save_model(path, m, io::Provenance{"0.1.0", 1, 1});
  const auto back = report::load_model(path);
  EXPECT_EQ(back.params.beta[1], m.params.beta[1]);
  EXPECT_EQ(back.params.sens, m.params.sens);
  EXPECT_EQ(back.feature_names, m.feature_names);
  EXPECT_EQ(back.preprocessing.columns[0].sd, 2.0);
  EXPECT_TRUE(back.preprocessing.columns[0].log1p);
  EXPECT_EQ(back.q_ratio, 0.125);
  std::filesystem::remove(path);
}
