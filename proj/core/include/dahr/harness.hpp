#pragma once

// Monte Carlo driver for the simulation studies. A cell is one
// (error law, machine count) pair; each replication of a cell draws a fresh
// dataset from its own stream, so results do not depend on scheduling.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dahr/synth.hpp"

namespace dahr {

enum class Method {
  global_ahr,
  dc_ahr,
  dc_ols,
  dist_ols,
  dist_ahr,
  l1_ahr,
  dc_l1_ahr,
  lasso,
  dist_reg_ahr,
};

std::string_view to_string(Method method);
Method parse_method(std::string_view name);

struct ExperimentConfig {
  Regime regime = Regime::lowdim;
  std::size_t n = 400;
  std::size_t p = 20;
  std::vector<std::size_t> m{10, 25, 50, 100};
  std::size_t s = 5;
  std::vector<ErrorKind> dist{ErrorKind::normal};
  std::vector<Method> methods{Method::dist_ahr};
  std::size_t reps = 100;
  std::uint64_t seed = 20200101;
  double alpha = 0.05;
  std::vector<double> c_grid{1, 2, 3, 4, 5};
  double validation_fraction = 0.25;

  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
  /// Full-size grids: 500 (lowdim) / 100 (highdim) reps and
  /// the full range of machine counts.
  void apply_full_scale();
};

/// Flat `key = value` text; `#` starts a comment; lists are comma separated.
/// Unknown keys throw std::invalid_argument.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

struct MethodRecord {
  Method method = Method::dist_ahr;
  bool failed = false;
  double l2_error = 0.0;
  std::uint64_t rounds = 0;
  std::uint64_t comm_values = 0;
  /// Fraction of slope coefficients covered, and mean slope CI width.
  std::optional<double> coverage;
  std::optional<double> width;
};

struct ReplicationRecord {
  std::size_t rep = 0;
  std::size_t m = 0;
  ErrorKind dist = ErrorKind::normal;
  std::vector<MethodRecord> methods;
};

/// Seed of the dataset stream for one replication of one cell.
std::uint64_t replication_seed(const ExperimentConfig& config, std::size_t m, ErrorKind dist,
                               std::size_t rep);

/// Runs every configured method on one dataset. Method failures are recorded,
/// not thrown.
ReplicationRecord run_replication(const ExperimentConfig& config, std::size_t m, ErrorKind dist,
                                  std::size_t rep);

struct SummaryRow {
  Method method = Method::dist_ahr;
  std::size_t m = 0;
  ErrorKind dist = ErrorKind::normal;
  std::size_t reps = 0;
  std::size_t failures = 0;
  double l2_mean = 0.0;
  double l2_sd = 0.0;
  std::optional<double> coverage_mean, coverage_sd, width_mean, width_sd;
  double rounds_mean = 0.0;
  double comm_values_mean = 0.0;
};

struct ExperimentResult {
  std::vector<ReplicationRecord> records;  // ordered by dist, m, rep
  std::vector<SummaryRow> summary;         // ordered by dist, m, method
};

/// Runs all replications on `threads` workers and folds them in a fixed order.
ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads = 1);

std::vector<SummaryRow> summarize(const ExperimentConfig& config,
                                  const std::vector<ReplicationRecord>& records);

const SummaryRow* find_summary(const ExperimentResult& result, Method method, std::size_t m,
                               ErrorKind dist);

/// `rep,method,m,dist,l2_error,rounds,comm_values`
void write_estimation_csv(std::ostream& out, const ExperimentResult& result);
/// `method,m,dist,coverage_mean,coverage_sd,width_mean,width_sd`
void write_coverage_csv(std::ostream& out, const ExperimentResult& result);
/// Full per-cell summary table.
void write_summary_csv(std::ostream& out, const ExperimentResult& result);
/// Writes estimation.csv, coverage.csv and summary.csv into dir.
void write_outputs(const std::filesystem::path& dir, const ExperimentResult& result);

/// printf("%.6g") without locale effects.
std::string format_number(double v);

}  // namespace dahr
