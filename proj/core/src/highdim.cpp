#include "dahr/highdim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dahr/errors.hpp"

namespace dahr {

double LambdaSchedule::floor() const {
  const double logp = std::log(static_cast<double>(p));
  return sigma * a * std::sqrt(logp / static_cast<double>(N));
}

double LambdaSchedule::at(int t) const {
  const double logp = std::log(static_cast<double>(p));
  const double nd = static_cast<double>(n);
  // Capped at 1 so the schedule never increases when s^2 log p > n.
  const double ratio = std::min(1.0, static_cast<double>(s * s) * logp / nd);
  return floor() + sigma * b * std::pow(ratio, 0.5 * t) * std::sqrt(logp / nd);
}

Coefficients l1_ahr_fit(const Shard& data, double tau, double lambda, const Coefficients& beta0,
                        const LammOptions& options) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  return lamm_minimize(huber_problem(data, tau), lambda, beta0, options).beta;
}

Coefficients lasso_fit(const Shard& data, double lambda, const Coefficients& beta0,
                       const LammOptions& options) {
  if (data.dim() > data.rows() && !(lambda > 0.0)) {
    throw std::invalid_argument("lasso with p > n needs lambda > 0");
  }
  return lamm_minimize(huber_problem(data, std::numeric_limits<double>::infinity()), lambda, beta0,
                       options)
      .beta;
}

DistributedFit dist_reg_ahr(std::span<const Shard> shards, double kappa, double tau,
                            const LambdaSchedule& schedule, int rounds, const Coefficients& beta0,
                            CommLedger& ledger, const LammOptions& options) {
  check_homogeneous(shards);
  if (!(kappa > 0.0) || !(tau >= kappa)) throw std::invalid_argument("need tau >= kappa > 0");
  if (rounds < 1) throw std::invalid_argument("need at least one round");
  if (beta0.size() != shards.front().dim() || !beta0.allFinite()) {
    throw std::invalid_argument("initial estimate has wrong dimension or is not finite");
  }

  const Shard& central = shards.front();
  const std::size_t m = shards.size();
  const auto p = static_cast<std::size_t>(central.dim());

  DistributedFit out;
  out.beta = beta0;
  for (int t = 1; t <= rounds; ++t) {
    const GatherResult gathered = gather_gradients(shards, out.beta, tau, ledger);
    out.trace.ledger.record_gradient_round(m, p);
    const ShiftedLossSpec spec = make_shifted_loss(central, kappa, out.beta, gathered.mean_gradient);
    SolverReport report;
    try {
      report = lamm_minimize(spec.problem(), schedule.at(t), out.beta, options);
    } catch (const NumericFailure& e) {
      throw DistributedFitError(std::string("round ") + std::to_string(t) + ": " + e.what(),
                                out.trace);
    }
    RoundRecord record;
    record.round = t;
    record.grad_infnorm = gathered.mean_gradient.lpNorm<Eigen::Infinity>();
    record.updated = true;
    record.inner_iters = report.iterations;
    record.inner_converged = report.converged;
    record.beta = report.beta;
    out.beta = std::move(report.beta);
    out.trace.rounds.push_back(std::move(record));
  }
  return out;
}

Coefficients dc_l1_ahr(std::span<const Shard> shards, double kappa, double lambda,
                       const Coefficients& beta0, const LammOptions& options) {
  check_homogeneous(shards);
  std::vector<Coefficients> fits;
  fits.reserve(shards.size());
  for (const auto& s : shards) fits.push_back(l1_ahr_fit(s, kappa, lambda, beta0, options));
  return dc_average(fits);
}

namespace {

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

double robust_scale(const Vector& residuals) {
  if (residuals.size() == 0) throw std::invalid_argument("no residuals");
  std::vector<double> v(residuals.data(), residuals.data() + residuals.size());
  const double med = median_of(v);
  for (double& x : v) x = std::abs(x - med);
  return 1.4826 * median_of(std::move(v));
}

}  // namespace dahr
