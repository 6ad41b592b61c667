#pragma once

// l1-penalised adaptive Huber regression: centralized fits, one-shot
// averaging, and the multi-round distributed procedure with a decaying
// regularisation schedule.

#include <span>

#include "dahr/estimators.hpp"

namespace dahr {

/// lambda_t = sigma * ( a * sqrt(log p / N)
///                    + b * (s^2 log p / n)^{t/2} * sqrt(log p / n) ).
struct LambdaSchedule {
  double sigma = 1.0;
  double a = 1.0;
  double b = 1.0;
  std::size_t p = 1;
  std::size_t n = 1;
  std::size_t N = 1;
  std::size_t s = 1;

  double at(int t) const;
  /// The floor sigma * a * sqrt(log p / N).
  double floor() const;
};

/// argmin L_tau(beta) + lambda ||beta_-||_1 by LAMM.
Coefficients l1_ahr_fit(const Shard& data, double tau, double lambda, const Coefficients& beta0,
                        const LammOptions& options = {});

/// Squared-loss lasso by LAMM. Requires lambda > 0 when p > n.
Coefficients lasso_fit(const Shard& data, double lambda, const Coefficients& beta0,
                       const LammOptions& options = {});

/// T rounds of: gather tau-gradients, build the shifted loss on the central
/// shard, solve its lambda_t-penalised version from beta^{(t-1)}. No early stop.
DistributedFit dist_reg_ahr(std::span<const Shard> shards, double kappa, double tau,
                            const LambdaSchedule& schedule, int rounds, const Coefficients& beta0,
                            CommLedger& ledger, const LammOptions& options = {});

/// Average of local l1-AHR fits with a common kappa and lambda.
Coefficients dc_l1_ahr(std::span<const Shard> shards, double kappa, double lambda,
                       const Coefficients& beta0, const LammOptions& options = {});

/// 1.4826 * median absolute deviation.
double robust_scale(const Vector& residuals);

}  // namespace dahr
