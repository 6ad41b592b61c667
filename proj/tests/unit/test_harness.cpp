#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dahr/estimators.hpp"
#include "dahr/harness.hpp"

using namespace dahr;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.n = 100;
  cfg.p = 5;
  cfg.m = {2, 4};
  cfg.dist = {ErrorKind::t2, ErrorKind::burr};
  cfg.methods = {Method::global_ahr, Method::dc_ahr, Method::dc_ols, Method::dist_ols, Method::dist_ahr};
  cfg.reps = 3;
  cfg.seed = 5;
  return cfg;
}

std::string csv(const ExperimentResult& r, void (*fn)(std::ostream&, const ExperimentResult&)) {
  std::ostringstream out;
  fn(out, r);
  return out.str();
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST(Methods, NamesRoundTrip) {
  for (Method m : {Method::global_ahr, Method::dc_ahr, Method::dc_ols, Method::dist_ols, Method::dist_ahr,
                   Method::l1_ahr, Method::dc_l1_ahr, Method::lasso, Method::dist_reg_ahr}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_method("ridge"), std::invalid_argument);
}

TEST(Config, ParsesAllKeys) {
  std::istringstream in(
      "# study\n"
      "regime = highdim\n"
      "n = 250\n"
      "p = 1000   # columns\n"
      "m = 10, 20,30\n"
      "s = 5\n"
      "dist = burr, pareto\n"
      "methods = lasso,dist_reg_ahr\n"
      "reps = 30\n"
      "seed = 18446744073709551615\n"
      "alpha = 0.1\n"
      "c_grid = 1, 2.5\n"
      "validation_fraction = 0.5\n");
  const ExperimentConfig cfg = parse_config(in);
  EXPECT_EQ(cfg.regime, Regime::highdim);
  EXPECT_EQ(cfg.n, 250u);
  EXPECT_EQ(cfg.p, 1000u);
  EXPECT_EQ(cfg.m, (std::vector<std::size_t>{10, 20, 30}));
  EXPECT_EQ(cfg.dist, (std::vector<ErrorKind>{ErrorKind::burr, ErrorKind::pareto}));
  EXPECT_EQ(cfg.methods, (std::vector<Method>{Method::lasso, Method::dist_reg_ahr}));
  EXPECT_EQ(cfg.reps, 30u);
  EXPECT_EQ(cfg.seed, 18446744073709551615ull);
  EXPECT_DOUBLE_EQ(cfg.alpha, 0.1);
  EXPECT_EQ(cfg.c_grid, (std::vector<double>{1.0, 2.5}));
  EXPECT_DOUBLE_EQ(cfg.validation_fraction, 0.5);
}

TEST(Config, RejectsInvalid) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
  };
  EXPECT_THROW(parse("bogus = 1\n"), std::invalid_argument);
  EXPECT_THROW(parse("m = 10, 10\n"), std::invalid_argument);
  EXPECT_THROW(parse("m = 20, 10\n"), std::invalid_argument);
  EXPECT_THROW(parse("reps = 0\n"), std::invalid_argument);
  EXPECT_THROW(parse("reps = -3\n"), std::invalid_argument);
  EXPECT_THROW(parse("methods = \n"), std::invalid_argument);
  EXPECT_THROW(parse("alpha = 1.5\n"), std::invalid_argument);
  EXPECT_THROW(parse("n = 12x\n"), std::invalid_argument);
  EXPECT_THROW(parse("just words\n"), std::invalid_argument);
  EXPECT_THROW(parse("regime = highdim\np = 5\ns = 5\n"), std::invalid_argument);
  EXPECT_THROW(load_config("/nonexistent/dir/cfg.txt"), std::runtime_error);
}

TEST(Config, FullScale) {
  ExperimentConfig cfg;
  cfg.apply_full_scale();
  EXPECT_EQ(cfg.reps, 500u);
  EXPECT_EQ(cfg.m.back(), 500u);
  cfg.regime = Regime::highdim;
  cfg.apply_full_scale();
  EXPECT_EQ(cfg.reps, 100u);
  EXPECT_EQ(cfg.m.back(), 50u);
}

TEST(Replication, SingleShardAverageIsLocalFit) {
  ExperimentConfig cfg;
  cfg.m = {1};
  cfg.methods = {Method::dc_ols};
  cfg.reps = 1;
  const ReplicationRecord rec = run_replication(cfg, 1, ErrorKind::normal, 0);
  GenConfig gen;
  gen.n = cfg.n;
  gen.p = cfg.p;
  gen.m = 1;
  gen.seed = replication_seed(cfg, 1, ErrorKind::normal, 0);
  const Dataset d = generate(gen, default_beta_star(Regime::lowdim, cfg.p, cfg.s));
  ASSERT_EQ(rec.methods.size(), 1u);
  EXPECT_DOUBLE_EQ(rec.methods[0].l2_error, (ols_solve(d.shards[0]) - d.beta_star).norm());
}

TEST(Replication, Deterministic) {
  const ExperimentConfig cfg = small_config();
  const ReplicationRecord a = run_replication(cfg, 4, ErrorKind::burr, 2);
  const ReplicationRecord b = run_replication(cfg, 4, ErrorKind::burr, 2);
  ASSERT_EQ(a.methods.size(), b.methods.size());
  for (std::size_t k = 0; k < a.methods.size(); ++k) {
    EXPECT_EQ(a.methods[k].l2_error, b.methods[k].l2_error);
    EXPECT_EQ(a.methods[k].comm_values, b.methods[k].comm_values);
    EXPECT_EQ(a.methods[k].coverage, b.methods[k].coverage);
  }
  EXPECT_NE(replication_seed(cfg, 4, ErrorKind::burr, 2), replication_seed(cfg, 4, ErrorKind::burr, 3));
}

TEST(Replication, FailuresAreMarkedNotThrown) {
  ExperimentConfig cfg;
  cfg.n = 10;
  cfg.p = 20;
  cfg.m = {2};
  cfg.methods = {Method::dc_ols, Method::lasso};
  cfg.reps = 2;
  const ExperimentResult res = run_experiment(cfg, 1);
  EXPECT_EQ(res.summary[0].failures, 2u);
  const std::string est = csv(res, write_estimation_csv);
  EXPECT_NE(est.find("dc_ols,2,normal,NA,NA,NA"), std::string::npos);
}

TEST(Experiment, SchemasAndCounts) {
  const ExperimentConfig cfg = small_config();
  const ExperimentResult res = run_experiment(cfg, 1);
  const std::string est = csv(res, write_estimation_csv);
  EXPECT_EQ(est.substr(0, est.find('\n')), "rep,method,m,dist,l2_error,rounds,comm_values");
  EXPECT_EQ(count_lines(est), 1 + cfg.methods.size() * cfg.m.size() * cfg.reps * cfg.dist.size());
  const std::string cov = csv(res, write_coverage_csv);
  EXPECT_EQ(cov[0], '#');
  EXPECT_NE(cov.find("\nmethod,m,dist,coverage_mean,coverage_sd,width_mean,width_sd\n"), std::string::npos);
  // coverage rows for dist_ols and dist_ahr in every cell
  EXPECT_EQ(count_lines(cov), 2 + 2 * cfg.m.size() * cfg.dist.size());
  for (const auto& row : res.summary) {
    EXPECT_EQ(row.reps, cfg.reps);
    EXPECT_GE(row.l2_sd, 0.0);
    if (row.coverage_mean) {
      EXPECT_GE(*row.coverage_mean, 0.0);
      EXPECT_LE(*row.coverage_mean, 1.0);
    }
  }
  const SummaryRow* dc = find_summary(res, Method::dc_ols, 4, ErrorKind::t2);
  ASSERT_NE(dc, nullptr);
  EXPECT_DOUBLE_EQ(dc->comm_values_mean, 3.0 * 5.0);
  EXPECT_EQ(find_summary(res, Method::lasso, 4, ErrorKind::t2), nullptr);
}

TEST(Experiment, ThreadCountDoesNotChangeOutput) {
  const ExperimentConfig cfg = small_config();
  const ExperimentResult a = run_experiment(cfg, 1);
  const ExperimentResult b = run_experiment(cfg, 3);
  EXPECT_EQ(csv(a, write_estimation_csv), csv(b, write_estimation_csv));
  EXPECT_EQ(csv(a, write_coverage_csv), csv(b, write_coverage_csv));
  EXPECT_EQ(csv(a, write_summary_csv), csv(b, write_summary_csv));
}

TEST(Experiment, WritesFilesAndReportsPaths) {
  const auto dir = std::filesystem::temp_directory_path() / "dahr_harness_test";
  std::filesystem::remove_all(dir);
  ExperimentConfig cfg = small_config();
  cfg.reps = 1;
  const ExperimentResult res = run_experiment(cfg, 1);
  write_outputs(dir, res);
  for (const char* f : {"estimation.csv", "coverage.csv", "summary.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  const auto blocker = dir / "estimation.csv" / "sub";
  try {
    write_outputs(blocker, res);
    FAIL() << "expected an I/O error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("estimation.csv"), std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST(Format, SixSignificantDigits) {
  EXPECT_EQ(format_number(0.123456789), "0.123457");
  EXPECT_EQ(format_number(1234567.0), "1.23457e+06");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(format_number(std::nan("")), "NA");
}
