#pragma once

// Huber loss, its score function, and per-shard loss/gradient evaluation.
//
// The Huber loss is C1 but not C2: psi is continuous at |u| = tau, its
// derivative jumps from 1 to 0 there. An infinite tau is accepted everywhere
// and yields the plain squared loss.

#include <cmath>
#include <cstddef>
#include <span>

#include "dahr/types.hpp"

namespace dahr {

/// One node's block of observations: n responses and an n x p design whose
/// first column is identically 1.
class Shard {
 public:
  /// Validates shape, finiteness and the intercept column; throws
  /// std::invalid_argument otherwise.
  Shard(std::size_t id, Vector y, DesignMatrix x);

  std::size_t id() const noexcept { return id_; }
  const Vector& y() const noexcept { return y_; }
  const DesignMatrix& x() const noexcept { return x_; }
  Eigen::Index rows() const noexcept { return x_.rows(); }
  Eigen::Index dim() const noexcept { return x_.cols(); }

 private:
  std::size_t id_;
  Vector y_;
  DesignMatrix x_;
};

/// Local (kappa) and global (tau) robustification parameters plus the
/// multiplier c in tau = c * sqrt(m) * kappa.
class RobustConfig {
 public:
  RobustConfig(double kappa, double tau, double c_mult);

  double kappa() const noexcept { return kappa_; }
  double tau() const noexcept { return tau_; }
  double c_mult() const noexcept { return c_mult_; }

 private:
  double kappa_;
  double tau_;
  double c_mult_;
};

inline double huber_loss(double u, double tau) {
  const double a = std::abs(u);
  return a <= tau ? 0.5 * u * u : tau * a - 0.5 * tau * tau;
}

/// psi_tau(u) = sign(u) * min(|u|, tau).
inline double huber_psi(double u, double tau) {
  if (u > tau) return tau;
  if (u < -tau) return -tau;
  return u;
}

/// Residuals y - X beta.
Vector residuals(const Shard& shard, const Coefficients& beta);

/// (1/n) sum_i huber_loss(y_i - x_i' beta, tau), summed in row order.
double shard_loss(const Shard& shard, const Coefficients& beta, double tau);

/// -(1/n) sum_i psi_tau(y_i - x_i' beta) x_i, accumulated in row order.
Vector shard_gradient(const Shard& shard, const Coefficients& beta, double tau);

/// Loss and gradient from one residual pass.
double shard_loss_and_gradient(const Shard& shard, const Coefficients& beta, double tau,
                               Vector& grad);

/// Concatenates shards (in the order given) into one block with id 0.
Shard pool_shards(std::span<const Shard> shards);

}  // namespace dahr
