#include "dahr/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dahr/errors.hpp"

namespace dahr {

SmoothProblem huber_problem(const Shard& data, double tau) {
  SmoothProblem problem;
  problem.dim = data.dim();
  problem.value = [&data, tau](const Coefficients& beta) { return shard_loss(data, beta, tau); };
  problem.gradient = [&data, tau](const Coefficients& beta, Vector& grad) {
    shard_loss_and_gradient(data, beta, tau, grad);
  };
  return problem;
}

std::optional<double> bb_stepsize(const Vector& s, const Vector& g_diff, BbVariant variant) {
  const double sd = s.dot(g_diff);
  if (!(sd > 0.0)) return std::nullopt;
  const double eta = variant == BbVariant::bb1 ? s.squaredNorm() / sd : sd / g_diff.squaredNorm();
  if (!std::isfinite(eta) || !(eta > 0.0)) return std::nullopt;
  return eta;
}

SolverReport gd_bb_minimize(const SmoothProblem& problem, const Coefficients& beta0,
                            const GdBbOptions& options) {
  if (beta0.size() != problem.dim) throw std::invalid_argument("initial point has wrong dimension");
  if (!beta0.allFinite()) throw std::invalid_argument("initial point is not finite");

  SolverReport report;
  Coefficients beta = beta0;
  Vector grad;
  problem.gradient(beta, grad);
  if (!grad.allFinite()) throw NumericFailure("GD-BB: non-finite gradient at the start", beta);

  double norm = grad.lpNorm<Eigen::Infinity>();
  Coefficients prev_beta;
  Vector prev_grad;
  double step = std::min(1.0, options.step_cap);
  int iter = 0;
  while (norm > options.grad_tol && iter < options.max_iter) {
    if (iter > 0) {
      step = std::min(bb_stepsize(beta - prev_beta, grad - prev_grad, options.variant).value_or(1.0),
                      options.step_cap);
    }
    if (options.on_step) options.on_step(step);
    prev_beta = beta;
    prev_grad = grad;
    beta.noalias() -= step * grad;
    ++iter;
    problem.gradient(beta, grad);
    if (!beta.allFinite() || !grad.allFinite()) {
      throw NumericFailure("GD-BB: non-finite iterate after " + std::to_string(iter) + " steps",
                           prev_beta);
    }
    norm = grad.lpNorm<Eigen::Infinity>();
  }
  report.beta = std::move(beta);
  report.iterations = iter;
  report.final_metric = norm;
  report.converged = norm <= options.grad_tol;
  return report;
}

double penalty_norm(const Coefficients& beta, const std::vector<Eigen::Index>& unpenalized) {
  double sum = beta.lpNorm<1>();
  for (Eigen::Index j : unpenalized) sum -= std::abs(beta[j]);
  return sum;
}

double kkt_residual(const Vector& grad, const Coefficients& beta, double lam,
                    const std::vector<Eigen::Index>& unpenalized) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const bool free = std::find(unpenalized.begin(), unpenalized.end(), j) != unpenalized.end();
    double r;
    if (free) {
      r = std::abs(grad[j]);
    } else if (beta[j] == 0.0) {
      r = std::max(0.0, std::abs(grad[j]) - lam);
    } else {
      r = std::abs(grad[j] + lam * (beta[j] > 0.0 ? 1.0 : -1.0));
    }
    worst = std::max(worst, r);
  }
  return worst;
}

SolverReport lamm_minimize(const SmoothProblem& problem, double lam, const Coefficients& beta0,
                           const LammOptions& options) {
  if (!(lam >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
  if (beta0.size() != problem.dim) throw std::invalid_argument("initial point has wrong dimension");
  if (!beta0.allFinite()) throw std::invalid_argument("initial point is not finite");

  std::vector<char> penalized(static_cast<std::size_t>(problem.dim), 1);
  for (Eigen::Index j : options.unpenalized) {
    if (j < 0 || j >= problem.dim) throw std::invalid_argument("unpenalized index out of range");
    penalized[static_cast<std::size_t>(j)] = 0;
  }

  Coefficients prev = beta0;
  double f_prev = problem.value(prev);
  if (!std::isfinite(f_prev)) throw NumericFailure("LAMM: non-finite loss at the start", prev);

  Coefficients cand(problem.dim);
  Vector grad;
  double phi = options.phi0;
  double step_norm = std::numeric_limits<double>::infinity();
  int k = 0;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  while (k < options.max_iter) {
    ++k;
    problem.gradient(prev, grad);
    if (!grad.allFinite()) throw NumericFailure("LAMM: non-finite gradient", prev);
    phi = std::max(options.phi0, phi / options.inflate);
    double f_cand = 0.0;
    double surrogate = 0.0;
    for (;;) {
      const double inv = 1.0 / phi;
      for (Eigen::Index j = 0; j < problem.dim; ++j) {
        const double u = prev[j] - inv * grad[j];
        cand[j] = penalized[static_cast<std::size_t>(j)] ? soft_threshold(u, inv * lam) : u;
      }
      const Vector d = cand - prev;
      f_cand = problem.value(cand);
      surrogate = f_prev + grad.dot(d) + 0.5 * phi * d.squaredNorm();
      // A few ulps of slack so rounding cannot stall acceptance of tiny steps.
      if (std::isfinite(f_cand) && f_cand <= surrogate + 8.0 * eps * std::max(1.0, std::abs(f_prev))) {
        step_norm = d.norm();
        break;
      }
      phi *= options.inflate;
      if (phi > options.phi_ceiling) {
        throw NumericFailure("LAMM: isotropic parameter exceeded its ceiling", prev);
      }
    }
    prev.swap(cand);
    f_prev = f_cand;
    if (options.on_iteration) {
      options.on_iteration(LammStep{k, phi, f_cand, surrogate,
                                    f_cand + lam * penalty_norm(prev, options.unpenalized)});
    }
    if (step_norm <= options.step_tol) break;
  }

  SolverReport report;
  report.beta = std::move(prev);
  report.iterations = k;
  report.final_metric = step_norm;
  report.converged = step_norm <= options.step_tol;
  return report;
}

Coefficients ols_solve(const DesignMatrix& x, const Vector& y, double ridge_eps) {
  if (!(ridge_eps >= 0.0)) throw std::invalid_argument("ridge must be nonnegative");
  if (y.size() != x.rows()) throw std::invalid_argument("response length does not match design rows");
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (ridge_eps == 0.0 && n < p) throw SingularDesign("OLS needs n >= p without a ridge");

  Matrix a;
  Vector b;
  if (ridge_eps > 0.0) {
    a.resize(n + p, p);
    a.topRows(n) = x;
    a.bottomRows(p) = std::sqrt(static_cast<double>(n) * ridge_eps) * Matrix::Identity(p, p);
    b = Vector::Zero(n + p);
    b.head(n) = y;
  } else {
    a = x;
    b = y;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  if (qr.rank() < p) throw SingularDesign("design is rank deficient");
  Coefficients beta = qr.solve(b);
  if (!beta.allFinite()) throw SingularDesign("least-squares solution is not finite");
  return beta;
}

Coefficients ols_solve(const Shard& data, double ridge_eps) {
  return ols_solve(data.x(), data.y(), ridge_eps);
}

}  // namespace dahr
