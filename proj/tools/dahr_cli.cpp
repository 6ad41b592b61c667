// dahr: simulation and one-off fitting front end.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <thread>

#include "dahr/errors.hpp"
#include "dahr/estimators.hpp"
#include "dahr/harness.hpp"
#include "dahr/highdim.hpp"
#include "dahr/runtime.hpp"
#include "dahr/synth.hpp"

namespace {

std::vector<dahr::Shard> load_shards(const std::string& path, std::size_t m) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return dahr::read_csv(in, m);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void print_coefficients(const dahr::Coefficients& beta) {
  std::cout << "coef,value\n";
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    std::cout << "beta" << (j + 1) << ',' << dahr::format_number(beta[j]) << '\n';
  }
}

struct FitArgs {
  std::string data;
  std::string method;
  std::size_t m = 1;
  std::optional<double> tau;
  std::optional<double> kappa;
  std::optional<double> lambda;
  double c = 1.0;
  int rounds = 0;
};

int run_fit(const FitArgs& args) {
  using namespace dahr;
  const Method method = parse_method(args.method);
  const std::vector<Shard> shards = load_shards(args.data, args.m);
  const std::span<const Shard> view(shards);
  const Shard& central = shards.front();
  CommLedger ledger;
  Coefficients beta;

  auto need_lambda = [&]() {
    if (!args.lambda) throw std::invalid_argument("method " + args.method + " needs --lambda");
    return *args.lambda;
  };
  auto local_kappa = [&]() {
    if (args.kappa) return *args.kappa;
    return central.rows() > central.dim() ? centralized_ahr(central).tau
                                          : tune_kappa_sparse(residuals(central, Coefficients::Zero(central.dim())), central.dim());
  };
  auto start = [&]() {
    Coefficients b = Coefficients::Zero(central.dim());
    b[0] = central.y().mean();
    return b;
  };

  switch (method) {
    case Method::global_ahr:
      beta = centralized_ahr(pool_shards(view), args.tau).beta;
      break;
    case Method::dc_ahr:
      beta = dc_ahr(view);
      break;
    case Method::dc_ols:
      beta = dc_ols(view);
      break;
    case Method::dist_ols:
      beta = distributed_ols(view, dc_ols(view), ledger).beta;
      break;
    case Method::dist_ahr: {
      const double kappa = local_kappa();
      const double tau = args.tau ? *args.tau : std::max(kappa, tune_tau_global(kappa, args.m, args.c));
      beta = distributed_ahr(view, kappa, tau, dc_ols(view), ledger).beta;
      break;
    }
    case Method::lasso:
      beta = lasso_fit(pool_shards(view), need_lambda(), start());
      break;
    case Method::l1_ahr: {
      const Shard pooled = pool_shards(view);
      const double tau = args.tau ? *args.tau
                                  : tune_kappa_sparse(residuals(pooled, start()), pooled.dim());
      beta = l1_ahr_fit(pooled, tau, need_lambda(), start());
      break;
    }
    case Method::dc_l1_ahr:
      beta = dc_l1_ahr(view, local_kappa(), need_lambda(), start());
      break;
    case Method::dist_reg_ahr: {
      const double kappa = local_kappa();
      const double tau = args.tau ? *args.tau : std::max(kappa, tune_tau_global(kappa, args.m, args.c));
      const double lam = need_lambda();
      LambdaSchedule schedule;
      schedule.p = central.dim();
      schedule.n = central.rows();
      schedule.N = schedule.n * shards.size();
      schedule.s = 1;
      schedule.a = 1.0;
      schedule.b = 0.0;
      const double unit = std::sqrt(std::log(static_cast<double>(schedule.p)) / static_cast<double>(schedule.N));
      if (!(unit > 0.0)) throw std::invalid_argument("dist_reg_ahr needs p >= 2");
      schedule.sigma = lam / unit;
      const int rounds = args.rounds > 0
                             ? args.rounds
                             : std::max(1, static_cast<int>(std::floor(std::log(static_cast<double>(args.m)))));
      const Coefficients init = lasso_fit(central, lam, start());
      beta = dist_reg_ahr(view, kappa, tau, schedule, rounds, init, ledger).beta;
      break;
    }
  }
  print_coefficients(beta);
  std::cerr << "rounds=" << ledger.rounds << " comm_values=" << ledger.values_sent << '\n';
  return 0;
}

int run_tune(const std::string& data, std::size_t m, const std::string& validation_path) {
  using namespace dahr;
  std::vector<Shard> shards = load_shards(data, m);
  std::optional<Shard> validation;
  if (!validation_path.empty()) {
    std::vector<Shard> v = load_shards(validation_path, 1);
    validation = std::move(v.front());
  } else if (shards.size() >= 2) {
    // hold out the last shard for choosing c
    validation = std::move(shards.back());
    shards.pop_back();
  }
  const std::vector<double> grid{1, 2, 3, 4, 5};
  const TunedDistributedFit fit =
      tuned_distributed_ahr(shards, dc_ols(shards), grid, validation ? &*validation : nullptr);
  std::cout << "kappa," << format_number(fit.kappa) << '\n'
            << "tau," << format_number(fit.tau) << '\n'
            << "c," << format_number(fit.c_mult) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed adaptive Huber regression: simulation harness and fitting tool"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "results";
  std::optional<std::uint64_t> seed;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  bool full_scale = false;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo study from a config file");
  simulate->add_option("--config", config_path, "key = value config file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out-dir", out_dir, "Directory for estimation.csv, coverage.csv, summary.csv");
  simulate->add_option("--seed", seed, "Override the config seed");
  simulate->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  simulate->add_flag("--full-scale", full_scale, "Use the full replication counts and machine grid");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit one method to CSV data (header y,x1..xp; x1 = 1)");
  fit_cmd->add_option("--data", fit.data, "CSV file")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--method", fit.method, "Method name")->required();
  fit_cmd->add_option("--m", fit.m, "Number of equal contiguous shards")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--tau", fit.tau, "Global robustification parameter");
  fit_cmd->add_option("--kappa", fit.kappa, "Local robustification parameter");
  fit_cmd->add_option("--lambda", fit.lambda, "l1 penalty level");
  fit_cmd->add_option("--c", fit.c, "Multiplier in tau = c sqrt(m) kappa");
  fit_cmd->add_option("--rounds", fit.rounds, "Rounds for dist_reg_ahr (default floor(log m))");

  std::string tune_data, tune_validation;
  std::size_t tune_m = 1;
  auto* tune = app.add_subcommand("tune", "Print self-tuned kappa, tau and the chosen c");
  tune->add_option("--data", tune_data, "CSV file")->required()->check(CLI::ExistingFile);
  tune->add_option("--m", tune_m, "Number of shards")->check(CLI::PositiveNumber);
  tune->add_option("--validation", tune_validation, "Validation CSV; default holds out the last shard")
      ->check(CLI::ExistingFile);

  dahr::GenConfig gen;
  std::string gen_dist = "normal", gen_regime = "lowdim", gen_out;
  auto* generate = app.add_subcommand("generate", "Write one simulated dataset as CSV");
  generate->add_option("--n", gen.n, "Rows per shard");
  generate->add_option("--p", gen.p, "Columns including the intercept");
  generate->add_option("--m", gen.m, "Shards");
  generate->add_option("--s", gen.s, "Nonzero slopes (highdim)");
  generate->add_option("--dist", gen_dist, "normal, t2, pareto or burr");
  generate->add_option("--regime", gen_regime, "lowdim or highdim");
  generate->add_option("--seed", gen.seed, "Seed");
  generate->add_option("--out", gen_out, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      dahr::ExperimentConfig config = dahr::load_config(config_path);
      if (seed) config.seed = *seed;
      if (full_scale) config.apply_full_scale();
      const dahr::ExperimentResult result = dahr::run_experiment(config, threads);
      dahr::write_outputs(out_dir, result);
      std::size_t failures = 0;
      for (const auto& row : result.summary) failures += row.failures;
      std::cout << "wrote " << result.records.size() << " replications to " << out_dir
                << " (" << failures << " failed method fits)\n";
      return 0;
    }
    if (*fit_cmd) return run_fit(fit);
    if (*tune) return run_tune(tune_data, tune_m, tune_validation);
    if (*generate) {
      gen.dist = dahr::ErrorDist::of(dahr::parse_error_kind(gen_dist));
      gen.regime = dahr::parse_regime(gen_regime);
      gen.validate();
      const dahr::Dataset data = dahr::generate(gen, dahr::default_beta_star(gen.regime, gen.p, gen.s));
      if (gen_out.empty()) {
        dahr::write_csv(std::cout, data.shards);
      } else {
        std::ofstream out(gen_out);
        if (!out) throw std::runtime_error("cannot open " + gen_out + " for writing");
        dahr::write_csv(out, data.shards);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "dahr: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
