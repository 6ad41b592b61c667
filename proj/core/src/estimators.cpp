#include "dahr/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "dahr/errors.hpp"

namespace dahr {

namespace {

// (1/dof) sum min(r^2, k^2) / k^2 - target, non-increasing in k.
double tuning_gap(const Vector& r2, double kappa, double dof, double target) {
  const double k2 = kappa * kappa;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < r2.size(); ++i) sum += std::min(r2[i], k2);
  return sum / (k2 * dof) - target;
}

}  // namespace

double solve_tuning_equation(const Vector& residuals, double complexity, double dof) {
  const auto n = static_cast<double>(residuals.size());
  if (residuals.size() == 0) throw std::invalid_argument("no residuals to tune on");
  if (!(dof > 0.0)) throw std::invalid_argument("tuning needs positive degrees of freedom");
  if (!residuals.allFinite()) throw std::invalid_argument("residuals must be finite");

  const Vector r2 = residuals.array().square();
  const double max_abs = residuals.lpNorm<Eigen::Infinity>();
  if (max_abs == 0.0) throw DegenerateInput("all residuals are zero");

  const double target = complexity / n;
  if (!(target > 0.0) || target >= 1.0) return max_abs;

  double min_nonzero = max_abs;
  std::size_t nonzero = 0;
  double sum_sq = 0.0;
  for (Eigen::Index i = 0; i < residuals.size(); ++i) {
    const double a = std::abs(residuals[i]);
    if (a > 0.0) {
      ++nonzero;
      min_nonzero = std::min(min_nonzero, a);
    }
    sum_sq += r2[i];
  }
  // Below the smallest nonzero residual every nonzero term contributes 1.
  if (static_cast<double>(nonzero) / dof - target <= 0.0) return max_abs;

  double lo = 0.5 * min_nonzero;
  // Past max|r| the gap is sum_sq / (k^2 dof) - target, negative beyond hi.
  double hi = 2.0 * std::max(max_abs, std::sqrt(sum_sq / (dof * target)));
  for (int it = 0; it < 200 && (hi - lo) > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (tuning_gap(r2, mid, dof, target) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double tune_kappa(const Vector& residuals, Eigen::Index p) {
  const auto n = residuals.size();
  if (n <= p) throw std::invalid_argument("tune_kappa needs n > p");
  const auto nd = static_cast<double>(n);
  return solve_tuning_equation(residuals, static_cast<double>(p) + std::log(nd),
                               static_cast<double>(n - p));
}

double tune_kappa_sparse(const Vector& residuals, Eigen::Index p) {
  return solve_tuning_equation(residuals, std::log(static_cast<double>(p)),
                               static_cast<double>(residuals.size()));
}

double tune_tau_global(double kappa, std::size_t m, double c_mult) {
  if (!(kappa > 0.0) || m < 1 || !(c_mult > 0.0)) {
    throw std::invalid_argument("tune_tau_global needs positive arguments");
  }
  return c_mult * std::sqrt(static_cast<double>(m)) * kappa;
}

SmoothProblem ShiftedLossSpec::problem() const {
  if (central == nullptr) throw std::invalid_argument("shifted loss has no central shard");
  SmoothProblem problem;
  problem.dim = central->dim();
  problem.value = [data = central, kappa = kappa, shift = shift](const Coefficients& beta) {
    return shard_loss(*data, beta, kappa) - shift.dot(beta);
  };
  problem.gradient = [data = central, kappa = kappa, shift = shift](const Coefficients& beta,
                                                                    Vector& grad) {
    shard_loss_and_gradient(*data, beta, kappa, grad);
    grad -= shift;
  };
  return problem;
}

ShiftedLossSpec make_shifted_loss(const Shard& central, double kappa, const Coefficients& anchor,
                                  const Vector& global_gradient) {
  ShiftedLossSpec spec;
  spec.central = &central;
  spec.kappa = kappa;
  spec.anchor = anchor;
  spec.shift = shard_gradient(central, anchor, kappa) - global_gradient;
  return spec;
}

namespace {

void check_start(std::span<const Shard> shards, const Coefficients& beta0) {
  check_homogeneous(shards);
  if (beta0.size() != shards.front().dim()) {
    throw std::invalid_argument("initial estimate has wrong dimension");
  }
  if (!beta0.allFinite()) throw std::invalid_argument("initial estimate is not finite");
}

}  // namespace

DistributedFit distributed_ahr(std::span<const Shard> shards, double kappa, double tau,
                               const Coefficients& beta0, CommLedger& ledger,
                               const DistributedOptions& options) {
  check_start(shards, beta0);
  if (!(kappa > 0.0) || !(tau >= kappa)) throw std::invalid_argument("need tau >= kappa > 0");

  const Shard& central = shards.front();
  const std::size_t m = shards.size();
  const auto p = static_cast<std::size_t>(central.dim());

  DistributedFit out;
  out.beta = beta0;
  double g_prev = options.g0;
  for (int t = 1; t <= options.max_rounds; ++t) {
    const GatherResult gathered = gather_gradients(shards, out.beta, tau, ledger);
    out.trace.ledger.record_gradient_round(m, p);

    RoundRecord record;
    record.round = t;
    record.grad_infnorm = gathered.mean_gradient.lpNorm<Eigen::Infinity>();
    if (record.grad_infnorm >= g_prev || record.grad_infnorm <= options.stop_tol) {
      record.beta = out.beta;
      out.trace.rounds.push_back(std::move(record));
      break;
    }

    const ShiftedLossSpec spec = make_shifted_loss(central, kappa, out.beta, gathered.mean_gradient);
    SolverReport report;
    try {
      report = gd_bb_minimize(spec.problem(), out.beta, options.inner);
    } catch (const NumericFailure& e) {
      throw DistributedFitError(std::string("round ") + std::to_string(t) + ": " + e.what(),
                                out.trace);
    }
    record.updated = true;
    record.inner_iters = report.iterations;
    record.inner_converged = report.converged;
    record.beta = report.beta;
    out.beta = std::move(report.beta);
    g_prev = record.grad_infnorm;
    out.trace.rounds.push_back(std::move(record));
  }
  return out;
}

DistributedFit distributed_ols(std::span<const Shard> shards, const Coefficients& beta0,
                               CommLedger& ledger, const DistributedOptions& options) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return distributed_ahr(shards, inf, inf, beta0, ledger, options);
}

AhrFit centralized_ahr(const Shard& data, std::optional<double> tau,
                       std::optional<Coefficients> beta0, const GdBbOptions& options) {
  const Eigen::Index p = data.dim();
  std::optional<Coefficients> pilot;
  auto ols_pilot = [&]() -> const Coefficients& {
    if (!pilot) pilot = ols_solve(data);
    return *pilot;
  };

  Coefficients start;
  if (beta0) {
    if (beta0->size() != p) throw std::invalid_argument("initial estimate has wrong dimension");
    start = *beta0;
  } else {
    start = data.rows() > p ? ols_pilot() : Coefficients::Zero(p);
  }

  AhrFit fit;
  if (tau) {
    if (!(*tau > 0.0)) throw std::invalid_argument("tau must be positive");
    SolverReport r = gd_bb_minimize(huber_problem(data, *tau), start, options);
    fit.beta = std::move(r.beta);
    fit.tau = *tau;
    fit.iterations = r.iterations;
    return fit;
  }

  const double tau0 = tune_kappa(residuals(data, ols_pilot()), p);
  SolverReport first = gd_bb_minimize(huber_problem(data, tau0), start, options);
  const double tau1 = tune_kappa(residuals(data, first.beta), p);
  SolverReport second = gd_bb_minimize(huber_problem(data, tau1), first.beta, options);
  fit.beta = std::move(second.beta);
  fit.tau = tau1;
  fit.iterations = first.iterations + second.iterations;
  return fit;
}

Coefficients dc_average(std::span<const Coefficients> local_fits) {
  if (local_fits.empty()) throw std::invalid_argument("cannot average zero estimates");
  Coefficients sum = Coefficients::Zero(local_fits.front().size());
  for (const auto& b : local_fits) {
    if (b.size() != sum.size()) throw std::invalid_argument("estimates disagree on dimension");
    sum += b;
  }
  return sum / static_cast<double>(local_fits.size());
}

Coefficients dc_ols(std::span<const Shard> shards) {
  check_homogeneous(shards);
  std::vector<Coefficients> fits;
  fits.reserve(shards.size());
  for (const auto& s : shards) fits.push_back(ols_solve(s));
  return dc_average(fits);
}

Coefficients dc_ahr(std::span<const Shard> shards) {
  check_homogeneous(shards);
  std::vector<Coefficients> fits;
  fits.reserve(shards.size());
  for (const auto& s : shards) fits.push_back(centralized_ahr(s).beta);
  return dc_average(fits);
}

double validation_mse(const Shard& validation, const Coefficients& beta) {
  return residuals(validation, beta).squaredNorm() / static_cast<double>(validation.rows());
}

TunedDistributedFit tuned_distributed_ahr(std::span<const Shard> shards, const Coefficients& beta0,
                                          std::span<const double> c_grid,
                                          const Shard* validation,
                                          const DistributedOptions& options) {
  check_start(shards, beta0);
  if (c_grid.empty()) throw std::invalid_argument("c grid is empty");

  TunedDistributedFit best;
  best.kappa = centralized_ahr(shards.front()).tau;
  double best_score = std::numeric_limits<double>::infinity();
  bool have_fit = false;
  std::string last_error;
  for (double c : c_grid) {
    const double tau = std::max(tune_tau_global(best.kappa, shards.size(), c), best.kappa);
    CommLedger ledger;
    DistributedFit fit;
    try {
      fit = distributed_ahr(shards, best.kappa, tau, beta0, ledger, options);
    } catch (const DistributedFitError& e) {
      last_error = e.what();
      continue;
    }
    const double score = validation != nullptr ? validation_mse(*validation, fit.beta) : 0.0;
    if (!have_fit || score < best_score) {
      best.fit = std::move(fit);
      best.tau = tau;
      best.c_mult = c;
      best_score = score;
      have_fit = true;
    }
    if (validation == nullptr) break;
  }
  if (!have_fit) throw std::runtime_error("every c value failed: " + last_error);
  return best;
}

}  // namespace dahr
