#include "dahr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "dahr/highdim.hpp"
#include "dahr/inference.hpp"

namespace dahr {

namespace {

constexpr std::uint64_t kValidationStream = 0x7661'6c69'6461'7465ULL;

// Multipliers of sigma * sqrt(log p / N) tried for lambda, largest first so
// each fit warm-starts from a sparser neighbour.
constexpr double kLambdaMultipliers[] = {6.0, 4.0, 3.0, 2.0, 1.5, 1.0, 0.5};
// Distributed schedule grid: decay weight b and floor multiplier a.
constexpr double kScheduleDecay[] = {0.5, 1.0};
constexpr double kScheduleFloor[] = {3.0, 2.0, 1.5, 1.0, 0.5};
constexpr int kPilotPathLength = 12;

struct MethodName {
  Method method;
  std::string_view name;
};

constexpr MethodName kMethodNames[] = {
    {Method::global_ahr, "global_ahr"}, {Method::dc_ahr, "dc_ahr"},
    {Method::dc_ols, "dc_ols"},         {Method::dist_ols, "dist_ols"},
    {Method::dist_ahr, "dist_ahr"},     {Method::l1_ahr, "l1_ahr"},
    {Method::dc_l1_ahr, "dc_l1_ahr"},   {Method::lasso, "lasso"},
    {Method::dist_reg_ahr, "dist_reg_ahr"},
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = s.find(',', start);
    std::string item = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    if (!value.empty() && value.front() == '-') throw std::invalid_argument("negative");
    v = std::stoull(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) {
    throw std::invalid_argument("config key '" + key + "': '" + value + "' is not a nonnegative integer");
  }
  return v;
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) {
    throw std::invalid_argument("config key '" + key + "': '" + value + "' is not a number");
  }
  return v;
}

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Everything one replication shares between methods, built on first use.
class ReplicationContext {
 public:
  ReplicationContext(const ExperimentConfig& config, std::size_t m, ErrorKind dist, std::size_t rep)
      : config_(config) {
    gen_.n = config.n;
    gen_.p = config.p;
    gen_.m = m;
    gen_.dist = ErrorDist::of(dist);
    gen_.regime = config.regime;
    gen_.s = config.s;
    gen_.seed = replication_seed(config, m, dist, rep);
    data_ = generate(gen_, default_beta_star(config.regime, config.p, config.s));
  }

  const ExperimentConfig& config() const { return config_; }
  const Dataset& data() const { return data_; }
  std::span<const Shard> shards() const { return data_.shards; }
  std::size_t m() const { return data_.shards.size(); }
  std::size_t p() const { return config_.p; }
  std::size_t N() const { return data_.total_rows(); }
  std::uint64_t one_shot_values() const { return static_cast<std::uint64_t>(m() - 1) * p(); }

  const Shard& pooled() {
    if (!pooled_) pooled_ = data_.pooled();
    return *pooled_;
  }

  const Shard& validation() {
    if (!validation_) {
      const auto rows = static_cast<std::size_t>(
          std::floor(config_.validation_fraction * static_cast<double>(N())));
      validation_ = generate_block(gen_, data_.beta_star, std::max<std::size_t>(rows, 1),
                                   kValidationStream);
    }
    return *validation_;
  }

  const Coefficients& dc_ols_init() {
    if (!dc_ols_) dc_ols_ = dc_ols(shards());
    return *dc_ols_;
  }

  // Local lasso on the central shard along a geometric path from lambda_max,
  // the path point picked by validation.
  const Coefficients& pilot() {
    if (pilot_) return *pilot_;
    const Shard& central = data_.shards.front();
    const double n = static_cast<double>(central.rows());
    Coefficients beta = Coefficients::Zero(central.dim());
    beta[0] = central.y().mean();
    const Vector grad = -(central.x().transpose() * (central.y() - central.x() * beta)) / n;
    const double lam_max = grad.tail(grad.size() - 1).lpNorm<Eigen::Infinity>();
    Coefficients best = beta;
    double best_score = validation_mse(validation(), beta);
    double lam = lam_max;
    for (int k = 0; k < kPilotPathLength; ++k) {
      lam *= 0.7;
      beta = lasso_fit(central, lam, beta);
      const double score = validation_mse(validation(), beta);
      if (score < best_score) {
        best_score = score;
        best = beta;
      }
    }
    pilot_ = best;
    sigma_ = std::max(robust_scale(residuals(central, best)), 1e-12);
    return *pilot_;
  }

  double sigma() {
    pilot();
    return sigma_;
  }

  double local_kappa() {
    if (!local_kappa_) local_kappa_ = tune_kappa_sparse(residuals(data_.shards.front(), pilot()),
                                                       data_.shards.front().dim());
    return *local_kappa_;
  }

  double lambda_unit(double rows) {
    return sigma() * std::sqrt(std::log(static_cast<double>(p())) / rows);
  }

 private:
  const ExperimentConfig& config_;
  GenConfig gen_;
  Dataset data_;
  std::optional<Shard> pooled_;
  std::optional<Shard> validation_;
  std::optional<Coefficients> dc_ols_;
  std::optional<Coefficients> pilot_;
  double sigma_ = 1.0;
  std::optional<double> local_kappa_;
};

void attach_coverage(MethodRecord& record, ReplicationContext& ctx, const Coefficients& beta,
                     double tau) {
  const Eigen::Index p = beta.size();
  if (p < 2) return;
  const VarianceReport var = distributed_variance(ctx.shards(), beta, tau);
  const Coefficients& truth = ctx.data().beta_star;
  std::size_t covered = 0;
  double width = 0.0;
  for (Eigen::Index j = 1; j < p; ++j) {
    const ConfInterval ci = conf_interval(beta[j], var.sigma_hat[j], var.N, ctx.config().alpha);
    covered += ci.contains(truth[j]) ? 1 : 0;
    width += ci.width();
  }
  record.coverage = static_cast<double>(covered) / static_cast<double>(p - 1);
  record.width = width / static_cast<double>(p - 1);
}

// Validated lambda path on one block of data, warm-started from the pilot.
template <typename Fit>
Coefficients validated_path(ReplicationContext& ctx, double unit, Fit&& fit) {
  Coefficients beta = ctx.pilot();
  Coefficients best;
  double best_score = std::numeric_limits<double>::infinity();
  for (double a : kLambdaMultipliers) {
    beta = fit(a * unit, beta);
    const double score = validation_mse(ctx.validation(), beta);
    if (score < best_score) {
      best_score = score;
      best = beta;
    }
  }
  return best;
}

Coefficients run_method(Method method, ReplicationContext& ctx, MethodRecord& record) {
  const auto shards = ctx.shards();
  switch (method) {
    case Method::global_ahr:
      return centralized_ahr(ctx.pooled()).beta;

    case Method::dc_ahr:
      record.rounds = 1;
      record.comm_values = ctx.one_shot_values();
      return dc_ahr(shards);

    case Method::dc_ols:
      record.rounds = 1;
      record.comm_values = ctx.one_shot_values();
      return ctx.dc_ols_init();

    case Method::dist_ols: {
      CommLedger ledger;
      DistributedFit fit = distributed_ols(shards, ctx.dc_ols_init(), ledger);
      record.rounds = ledger.rounds;
      record.comm_values = ledger.values_sent + ctx.one_shot_values();
      attach_coverage(record, ctx, fit.beta, std::numeric_limits<double>::infinity());
      return fit.beta;
    }

    case Method::dist_ahr: {
      const TunedDistributedFit tuned = tuned_distributed_ahr(
          shards, ctx.dc_ols_init(), ctx.config().c_grid, &ctx.validation());
      record.rounds = tuned.fit.trace.ledger.rounds;
      record.comm_values = tuned.fit.trace.ledger.values_sent + ctx.one_shot_values();
      attach_coverage(record, ctx, tuned.fit.beta, tuned.tau);
      return tuned.fit.beta;
    }

    case Method::lasso: {
      const Shard& pooled = ctx.pooled();
      return validated_path(ctx, ctx.lambda_unit(static_cast<double>(ctx.N())),
                            [&](double lam, const Coefficients& start) {
                              return lasso_fit(pooled, lam, start);
                            });
    }

    case Method::l1_ahr: {
      const Shard& pooled = ctx.pooled();
      const double tau = tune_kappa_sparse(residuals(pooled, ctx.pilot()), pooled.dim());
      return validated_path(ctx, ctx.lambda_unit(static_cast<double>(ctx.N())),
                            [&](double lam, const Coefficients& start) {
                              return l1_ahr_fit(pooled, tau, lam, start);
                            });
    }

    case Method::dc_l1_ahr: {
      record.rounds = 1;
      record.comm_values = ctx.one_shot_values();
      const double kappa = ctx.local_kappa();
      const double unit = ctx.lambda_unit(static_cast<double>(ctx.config().n));
      std::vector<Coefficients> local(shards.size(), ctx.pilot());
      Coefficients best;
      double best_score = std::numeric_limits<double>::infinity();
      for (double a : kLambdaMultipliers) {
        for (std::size_t j = 0; j < shards.size(); ++j) {
          local[j] = l1_ahr_fit(shards[j], kappa, a * unit, local[j]);
        }
        Coefficients avg = dc_average(local);
        const double score = validation_mse(ctx.validation(), avg);
        if (score < best_score) {
          best_score = score;
          best = std::move(avg);
        }
      }
      return best;
    }

    case Method::dist_reg_ahr: {
      const double kappa = ctx.local_kappa();
      // self-tuned on all residuals at the pilot; only scalar sums cross machines
      const double tau = std::max(kappa, tune_kappa_sparse(residuals(ctx.pooled(), ctx.pilot()), static_cast<Eigen::Index>(ctx.p())));
      const int rounds = std::max(1, static_cast<int>(std::floor(std::log(static_cast<double>(ctx.m())))));
      LambdaSchedule schedule;
      schedule.sigma = ctx.sigma();
      schedule.p = ctx.p();
      schedule.n = ctx.config().n;
      schedule.N = ctx.N();
      schedule.s = ctx.config().s;
      Coefficients best;
      FitTrace best_trace;
      double best_score = std::numeric_limits<double>::infinity();
      for (double b : kScheduleDecay) {
        for (double a : kScheduleFloor) {
          schedule.a = a;
          schedule.b = b;
          CommLedger ledger;
          DistributedFit fit = dist_reg_ahr(shards, kappa, tau, schedule, rounds, ctx.pilot(), ledger);
          // With p > n the shifted objective is unbounded below once lambda is
          // too small to dominate the shift; smaller floors only make it worse.
          const bool ran_off = std::any_of(fit.trace.rounds.begin(), fit.trace.rounds.end(),
                                           [](const RoundRecord& r) { return !r.inner_converged; });
          const double score = validation_mse(ctx.validation(), fit.beta);
          if (score < best_score) {
            best_score = score;
            best = std::move(fit.beta);
            best_trace = std::move(fit.trace);
          }
          if (ran_off) break;
        }
      }
      record.rounds = best_trace.ledger.rounds;
      record.comm_values = best_trace.ledger.values_sent;
      return best;
    }
  }
  throw std::invalid_argument("unhandled method");
}

}  // namespace

std::string_view to_string(Method method) {
  for (const auto& entry : kMethodNames) {
    if (entry.method == method) return entry.name;
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (const auto& entry : kMethodNames) {
    if (entry.name == name) return entry.method;
  }
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  if (n < 1 || p < 1) throw std::invalid_argument("n and p must be at least 1");
  if (regime == Regime::highdim && (s < 1 || s + 1 > p)) {
    throw std::invalid_argument("highdim sparsity must satisfy 1 <= s <= p - 1");
  }
  if (m.empty()) throw std::invalid_argument("machine grid m is empty");
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] < 1) throw std::invalid_argument("machine counts must be at least 1");
    if (i > 0 && m[i] <= m[i - 1]) throw std::invalid_argument("machine grid m must be strictly increasing");
  }
  if (dist.empty()) throw std::invalid_argument("no error distribution given");
  if (methods.empty()) throw std::invalid_argument("no methods given");
  if (reps < 1) throw std::invalid_argument("reps must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (c_grid.empty()) throw std::invalid_argument("c_grid is empty");
  for (double c : c_grid) {
    if (!(c > 0.0)) throw std::invalid_argument("c_grid entries must be positive");
  }
  if (!(validation_fraction > 0.0 && validation_fraction <= 1.0)) {
    throw std::invalid_argument("validation_fraction must lie in (0, 1]");
  }
}

void ExperimentConfig::apply_full_scale() {
  if (regime == Regime::lowdim) {
    reps = 500;
    m = {10, 50, 100, 200, 300, 400, 500};
  } else {
    reps = 100;
    m = {10, 20, 30, 40, 50};
  }
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key == "regime") {
      config.regime = parse_regime(value);
    } else if (key == "n") {
      config.n = parse_u64(key, value);
    } else if (key == "p") {
      config.p = parse_u64(key, value);
    } else if (key == "m") {
      config.m.clear();
      for (const auto& item : split_list(value)) config.m.push_back(parse_u64(key, item));
    } else if (key == "s") {
      config.s = parse_u64(key, value);
    } else if (key == "dist") {
      config.dist.clear();
      for (const auto& item : split_list(value)) config.dist.push_back(parse_error_kind(item));
    } else if (key == "methods") {
      config.methods.clear();
      for (const auto& item : split_list(value)) config.methods.push_back(parse_method(item));
    } else if (key == "reps") {
      config.reps = parse_u64(key, value);
    } else if (key == "seed") {
      config.seed = parse_u64(key, value);
    } else if (key == "alpha") {
      config.alpha = parse_double(key, value);
    } else if (key == "c_grid") {
      config.c_grid.clear();
      for (const auto& item : split_list(value)) config.c_grid.push_back(parse_double(key, item));
    } else if (key == "validation_fraction") {
      config.validation_fraction = parse_double(key, value);
    } else {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  try {
    return parse_config(in);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

std::uint64_t replication_seed(const ExperimentConfig& config, std::size_t m, ErrorKind dist,
                               std::size_t rep) {
  std::uint64_t s = mix_seed(config.seed, static_cast<std::uint64_t>(dist));
  s = mix_seed(s, m);
  return mix_seed(s, rep);
}

ReplicationRecord run_replication(const ExperimentConfig& config, std::size_t m, ErrorKind dist,
                                  std::size_t rep) {
  ReplicationContext ctx(config, m, dist, rep);
  ReplicationRecord out;
  out.rep = rep;
  out.m = m;
  out.dist = dist;
  for (Method method : config.methods) {
    MethodRecord record;
    record.method = method;
    try {
      const Coefficients beta = run_method(method, ctx, record);
      record.l2_error = (beta - ctx.data().beta_star).norm();
      if (!std::isfinite(record.l2_error)) record.failed = true;
    } catch (const std::exception&) {
      record = MethodRecord{};
      record.method = method;
      record.failed = true;
    }
    out.methods.push_back(std::move(record));
  }
  return out;
}

std::vector<SummaryRow> summarize(const ExperimentConfig& config,
                                  const std::vector<ReplicationRecord>& records) {
  std::vector<SummaryRow> rows;
  for (ErrorKind dist : config.dist) {
    for (std::size_t m : config.m) {
      for (std::size_t k = 0; k < config.methods.size(); ++k) {
        SummaryRow row;
        row.method = config.methods[k];
        row.m = m;
        row.dist = dist;
        std::vector<double> l2, cov, width, rounds, comm;
        for (const auto& rec : records) {
          if (rec.m != m || rec.dist != dist) continue;
          ++row.reps;
          const MethodRecord& mr = rec.methods.at(k);
          if (mr.failed) {
            ++row.failures;
            continue;
          }
          l2.push_back(mr.l2_error);
          rounds.push_back(static_cast<double>(mr.rounds));
          comm.push_back(static_cast<double>(mr.comm_values));
          if (mr.coverage) cov.push_back(*mr.coverage);
          if (mr.width) width.push_back(*mr.width);
        }
        row.l2_mean = mean_of(l2);
        row.l2_sd = sd_of(l2);
        row.rounds_mean = mean_of(rounds);
        row.comm_values_mean = mean_of(comm);
        if (!cov.empty()) {
          row.coverage_mean = mean_of(cov);
          row.coverage_sd = sd_of(cov);
          row.width_mean = mean_of(width);
          row.width_sd = sd_of(width);
        }
        rows.push_back(row);
      }
    }
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads) {
  config.validate();
  struct Cell {
    ErrorKind dist;
    std::size_t m;
    std::size_t rep;
  };
  std::vector<Cell> cells;
  for (ErrorKind dist : config.dist) {
    for (std::size_t m : config.m) {
      for (std::size_t rep = 0; rep < config.reps; ++rep) cells.push_back({dist, m, rep});
    }
  }

  ExperimentResult result;
  result.records.resize(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        result.records[i] = run_replication(config, cells[i].m, cells[i].dist, cells[i].rep);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(cells.size());
      }
    }
  };
  const unsigned count = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cells.size())));
  if (count == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(count);
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  result.summary = summarize(config, result.records);
  return result;
}

const SummaryRow* find_summary(const ExperimentResult& result, Method method, std::size_t m,
                               ErrorKind dist) {
  for (const auto& row : result.summary) {
    if (row.method == method && row.m == m && row.dist == dist) return &row;
  }
  return nullptr;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_estimation_csv(std::ostream& out, const ExperimentResult& result) {
  out << "rep,method,m,dist,l2_error,rounds,comm_values\n";
  for (const auto& rec : result.records) {
    for (const auto& mr : rec.methods) {
      out << rec.rep << ',' << to_string(mr.method) << ',' << rec.m << ',' << to_string(rec.dist) << ',';
      if (mr.failed) {
        out << "NA,NA,NA\n";
      } else {
        out << format_number(mr.l2_error) << ',' << mr.rounds << ',' << mr.comm_values << '\n';
      }
    }
  }
}

void write_coverage_csv(std::ostream& out, const ExperimentResult& result) {
  out << "# sd columns: standard deviation across replications of the per-replication "
         "slope-averaged coverage and width\n";
  out << "method,m,dist,coverage_mean,coverage_sd,width_mean,width_sd\n";
  for (const auto& row : result.summary) {
    if (!row.coverage_mean) continue;
    out << to_string(row.method) << ',' << row.m << ',' << to_string(row.dist) << ','
        << format_number(*row.coverage_mean) << ',' << format_number(*row.coverage_sd) << ','
        << format_number(*row.width_mean) << ',' << format_number(*row.width_sd) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const ExperimentResult& result) {
  out << "method,m,dist,reps,failures,l2_mean,l2_sd,coverage_mean,coverage_sd,width_mean,width_sd,"
         "rounds_mean,comm_values_mean\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string("NA"); };
  for (const auto& row : result.summary) {
    out << to_string(row.method) << ',' << row.m << ',' << to_string(row.dist) << ',' << row.reps << ','
        << row.failures << ',' << format_number(row.l2_mean) << ',' << format_number(row.l2_sd) << ','
        << opt(row.coverage_mean) << ',' << opt(row.coverage_sd) << ',' << opt(row.width_mean) << ','
        << opt(row.width_sd) << ',' << format_number(row.rounds_mean) << ','
        << format_number(row.comm_values_mean) << '\n';
  }
}

void write_outputs(const std::filesystem::path& dir, const ExperimentResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  auto write = [&](const char* name, auto&& fn) {
    const auto path = dir / name;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    fn(out, result);
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + path.string());
  };
  write("estimation.csv", write_estimation_csv);
  write("coverage.csv", write_coverage_csv);
  write("summary.csv", write_summary_csv);
}

}  // namespace dahr
