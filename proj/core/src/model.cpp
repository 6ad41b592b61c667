#include "dahr/model.hpp"

#include <stdexcept>
#include <string>

namespace dahr {

namespace {

void check_dim(const Shard& shard, const Coefficients& beta) {
  if (beta.size() != shard.dim()) {
    throw std::invalid_argument("coefficient length " + std::to_string(beta.size()) +
                                " does not match shard dimension " +
                                std::to_string(shard.dim()));
  }
}

}  // namespace

Shard::Shard(std::size_t id, Vector y, DesignMatrix x) : id_(id), y_(std::move(y)), x_(std::move(x)) {
  if (x_.rows() < 1 || x_.cols() < 1) throw std::invalid_argument("shard needs n >= 1 and p >= 1");
  if (y_.size() != x_.rows()) throw std::invalid_argument("response length does not match design rows");
  if (!y_.allFinite() || !x_.allFinite()) throw std::invalid_argument("shard holds non-finite values");
  for (Eigen::Index i = 0; i < x_.rows(); ++i) {
    if (x_(i, 0) != 1.0) {
      throw std::invalid_argument("design row " + std::to_string(i) + " lacks the intercept 1");
    }
  }
}

RobustConfig::RobustConfig(double kappa, double tau, double c_mult)
    : kappa_(kappa), tau_(tau), c_mult_(c_mult) {
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
  if (!(tau >= kappa)) throw std::invalid_argument("tau must be at least kappa");
  if (!(c_mult > 0.0)) throw std::invalid_argument("c must be positive");
}

Vector residuals(const Shard& shard, const Coefficients& beta) {
  check_dim(shard, beta);
  return shard.y() - shard.x() * beta;
}

double shard_loss(const Shard& shard, const Coefficients& beta, double tau) {
  const Vector r = residuals(shard, beta);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) sum += huber_loss(r[i], tau);
  return sum / static_cast<double>(r.size());
}

double shard_loss_and_gradient(const Shard& shard, const Coefficients& beta, double tau,
                               Vector& grad) {
  const Vector r = residuals(shard, beta);
  const auto& x = shard.x();
  grad.setZero(shard.dim());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    sum += huber_loss(r[i], tau);
    const double psi = huber_psi(r[i], tau);
    if (psi != 0.0) grad.noalias() += psi * x.row(i).transpose();
  }
  const double n = static_cast<double>(r.size());
  grad /= -n;
  return sum / n;
}

Vector shard_gradient(const Shard& shard, const Coefficients& beta, double tau) {
  Vector grad;
  shard_loss_and_gradient(shard, beta, tau, grad);
  return grad;
}

Shard pool_shards(std::span<const Shard> shards) {
  if (shards.empty()) throw std::invalid_argument("cannot pool zero shards");
  const Eigen::Index p = shards.front().dim();
  Eigen::Index rows = 0;
  for (const auto& s : shards) {
    if (s.dim() != p) throw std::invalid_argument("shards disagree on dimension");
    rows += s.rows();
  }
  Vector y(rows);
  DesignMatrix x(rows, p);
  Eigen::Index at = 0;
  for (const auto& s : shards) {
    y.segment(at, s.rows()) = s.y();
    x.middleRows(at, s.rows()) = s.x();
    at += s.rows();
  }
  return Shard(0, std::move(y), std::move(x));
}

}  // namespace dahr
