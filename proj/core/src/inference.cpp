#include "dahr/inference.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <stdexcept>

#include "dahr/errors.hpp"
#include "dahr/runtime.hpp"

namespace dahr {

namespace {

constexpr double kMaxCondition = 1e12;

// Inverse of a symmetric positive definite Gram matrix, refusing
// ill-conditioned ones.
Matrix gram_inverse(const Matrix& gram) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) throw SingularDesign("eigen-decomposition of the Gram matrix failed");
  const Vector& values = eig.eigenvalues();
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxCondition) {
    throw SingularDesign("Gram matrix is singular or has condition number above 1e12");
  }
  return eig.eigenvectors() * values.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

Matrix shard_gram(const Shard& shard, double ridge) {
  const double n = static_cast<double>(shard.rows());
  Matrix gram = Matrix::Zero(shard.dim(), shard.dim());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(shard.x().transpose(), 1.0 / n);
  gram = gram.selfadjointView<Eigen::Lower>();
  gram.diagonal().array() += ridge;
  return gram;
}

}  // namespace

SandwichParts shard_sandwich(const Shard& shard, const Coefficients& beta_hat, double tau,
                             double ridge) {
  if (!(ridge >= 0.0)) throw std::invalid_argument("ridge must be nonnegative");
  const Vector r = residuals(shard, beta_hat);
  const double n = static_cast<double>(shard.rows());
  const auto& x = shard.x();

  SandwichParts parts;
  parts.sigma = shard_gram(shard, ridge);

  Vector w(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double psi = huber_psi(r[i], tau);
    w[i] = psi * psi;
  }
  const Matrix weighted = x.transpose() * w.asDiagonal();
  parts.lambda = (weighted * x) / n;
  parts.lambda = 0.5 * (parts.lambda + parts.lambda.transpose());

  const Matrix inv = gram_inverse(parts.sigma);
  const Matrix sandwich = inv * parts.lambda * inv;
  parts.sigma2_row = sandwich.diagonal().cwiseMax(0.0);
  return parts;
}

Vector averaged_variance(const Matrix& per_shard_rows) {
  if (per_shard_rows.rows() == 0) throw std::invalid_argument("no shard rows to average");
  Vector sum = Vector::Zero(per_shard_rows.cols());
  for (Eigen::Index k = 0; k < per_shard_rows.rows(); ++k) sum += per_shard_rows.row(k).transpose();
  return sum / static_cast<double>(per_shard_rows.rows());
}

Vector homoscedastic_variance(std::span<const Shard> shards, const Coefficients& beta_hat,
                              double tau) {
  check_homogeneous(shards);
  const Eigen::Index p = shards.front().dim();
  double psi_sq = 0.0;
  std::size_t total = 0;
  Vector diag_sum = Vector::Zero(p);
  for (const auto& s : shards) {
    const Vector r = residuals(s, beta_hat);
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const double psi = huber_psi(r[i], tau);
      psi_sq += psi * psi;
    }
    total += static_cast<std::size_t>(s.rows());
    diag_sum += gram_inverse(shard_gram(s, 0.0)).diagonal();
  }
  if (total <= static_cast<std::size_t>(p)) throw std::invalid_argument("need N > p");
  const double sigma2_eps = psi_sq / static_cast<double>(total - static_cast<std::size_t>(p));
  return (sigma2_eps / static_cast<double>(shards.size())) * diag_sum;
}

VarianceReport distributed_variance(std::span<const Shard> shards, const Coefficients& beta_hat,
                                    double tau) {
  check_homogeneous(shards);
  Matrix rows(static_cast<Eigen::Index>(shards.size()), shards.front().dim());
  std::size_t total = 0;
  for (std::size_t k = 0; k < shards.size(); ++k) {
    rows.row(static_cast<Eigen::Index>(k)) =
        shard_sandwich(shards[k], beta_hat, tau).sigma2_row.transpose();
    total += static_cast<std::size_t>(shards[k].rows());
  }
  VarianceReport report;
  report.sigma_hat = averaged_variance(rows).cwiseSqrt();
  report.sigma_tilde = homoscedastic_variance(shards, beta_hat, tau).cwiseSqrt();
  report.N = total;
  return report;
}

double normal_quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("quantile level must lie in (0, 1)");
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * q);
}

ConfInterval conf_interval(double beta_j, double sigma_j, std::size_t N, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (!(sigma_j >= 0.0) || N == 0) throw std::invalid_argument("need sigma >= 0 and N >= 1");
  const double half = normal_quantile(1.0 - alpha / 2.0) * sigma_j / std::sqrt(static_cast<double>(N));
  return ConfInterval{beta_j - half, beta_j + half, 1.0 - alpha};
}

}  // namespace dahr
