#pragma once

// Distributed variance estimates and normal-based confidence intervals.

#include <span>

#include "dahr/model.hpp"

namespace dahr {

struct SandwichParts {
  Matrix sigma;        // (1/n) sum x x'
  Matrix lambda;       // (1/n) sum psi^2(e) x x'
  Vector sigma2_row;   // diag(Sigma^{-1} Lambda Sigma^{-1})
};

/// Per-shard sandwich pieces at beta_hat. A positive ridge is added to the
/// Gram matrix's diagonal; without it a condition number above 1e12 throws
/// SingularDesign.
SandwichParts shard_sandwich(const Shard& shard, const Coefficients& beta_hat, double tau,
                             double ridge = 0.0);

/// Coordinatewise mean of per-shard rows (one row per shard).
Vector averaged_variance(const Matrix& per_shard_rows);

/// (sigma_eps^2 / m) sum_k diag(Sigma_k^{-1}),
/// sigma_eps^2 = (N - p)^{-1} sum_i psi_tau^2(e_i).
Vector homoscedastic_variance(std::span<const Shard> shards, const Coefficients& beta_hat,
                              double tau);

struct VarianceReport {
  Vector sigma_hat;    // sqrt of averaged sandwich variances
  Vector sigma_tilde;  // sqrt of homoscedastic variances
  std::size_t N = 0;
};

VarianceReport distributed_variance(std::span<const Shard> shards, const Coefficients& beta_hat,
                                    double tau);

struct ConfInterval {
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.0;

  double width() const noexcept { return hi - lo; }
  bool contains(double v) const noexcept { return lo <= v && v <= hi; }
};

/// Phi^{-1}(q) for q in (0, 1).
double normal_quantile(double q);

/// beta_j -/+ z_{alpha/2} sigma_j / sqrt(N).
ConfInterval conf_interval(double beta_j, double sigma_j, std::size_t N, double alpha);

}  // namespace dahr
