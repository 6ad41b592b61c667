#pragma once

// Inner optimisers: gradient descent with Barzilai-Borwein steps for smooth
// problems, the locally adaptive majorize-minimize (LAMM) proximal scheme for
// l1-penalised problems, and a QR least-squares solve.

#include <functional>
#include <optional>
#include <vector>

#include "dahr/model.hpp"

namespace dahr {

/// A smooth objective given by value and gradient callbacks.
struct SmoothProblem {
  Eigen::Index dim = 0;
  std::function<double(const Coefficients&)> value;
  std::function<void(const Coefficients&, Vector&)> gradient;
};

/// Plain Huber objective on one block of data (tau may be +inf).
SmoothProblem huber_problem(const Shard& data, double tau);

struct SolverReport {
  Coefficients beta;
  int iterations = 0;
  /// Gradient sup-norm for GD-BB, last step l2-norm for LAMM.
  double final_metric = 0.0;
  bool converged = false;
};

enum class BbVariant { bb1, bb2 };

/// bb1 = <s,s>/<s,d>, bb2 = <s,d>/<d,d>. Empty when <s,d> <= 0 or the
/// quotient is not finite; the caller then uses a unit step.
std::optional<double> bb_stepsize(const Vector& s, const Vector& g_diff, BbVariant variant);

struct GdBbOptions {
  double grad_tol = 1e-4;
  double step_cap = 10.0;
  int max_iter = 1000;
  BbVariant variant = BbVariant::bb1;
  /// Called with every applied step size.
  std::function<void(double)> on_step;
};

/// beta <- beta - min(eta_k, step_cap) * grad, eta_1 = 1, until the gradient
/// sup-norm is at most grad_tol. Throws NumericFailure on non-finite values.
SolverReport gd_bb_minimize(const SmoothProblem& problem, const Coefficients& beta0,
                            const GdBbOptions& options = {});

inline double soft_threshold(double u, double lam) {
  if (u > lam) return u - lam;
  if (u < -lam) return u + lam;
  return 0.0;
}

/// Per-iteration record passed to LammOptions::on_iteration.
struct LammStep {
  int iteration = 0;
  double phi = 0.0;
  double loss = 0.0;       // L(beta^k)
  double surrogate = 0.0;  // g_k(beta^k; beta^{k-1}, phi_k)
  double objective = 0.0;  // L(beta^k) + lam * ||beta^k_-||_1
};

struct LammOptions {
  double phi0 = 1e-4;
  double inflate = 1.1;
  double step_tol = 1e-5;
  int max_iter = 20000;
  double phi_ceiling = 1e12;
  /// Coordinates left out of the penalty. Defaults to the intercept.
  std::vector<Eigen::Index> unpenalized{0};
  std::function<void(const LammStep&)> on_iteration;
};

/// Minimises L(beta) + lam * sum_{j not unpenalized} |beta_j|.
/// Throws NumericFailure once phi exceeds phi_ceiling.
SolverReport lamm_minimize(const SmoothProblem& problem, double lam, const Coefficients& beta0,
                           const LammOptions& options = {});

/// l1 norm over the penalised coordinates.
double penalty_norm(const Coefficients& beta, const std::vector<Eigen::Index>& unpenalized);

/// Largest violation of the lasso stationarity conditions given the smooth
/// gradient at beta.
double kkt_residual(const Vector& grad, const Coefficients& beta, double lam,
                    const std::vector<Eigen::Index>& unpenalized);

/// argmin (1/n)||y - X beta||^2 + ridge_eps ||beta||^2 via column-pivoted QR.
/// Throws SingularDesign for a rank-deficient design when ridge_eps == 0.
Coefficients ols_solve(const DesignMatrix& x, const Vector& y, double ridge_eps = 0.0);
Coefficients ols_solve(const Shard& data, double ridge_eps = 0.0);

}  // namespace dahr
