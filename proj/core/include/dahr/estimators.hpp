#pragma once

// Low-dimensional estimators: centralized adaptive Huber regression (AHR),
// the multi-round distributed AHR and distributed OLS, one-shot
// divide-and-conquer averages, and robustification-parameter tuning.

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dahr/runtime.hpp"
#include "dahr/solvers.hpp"

namespace dahr {

/// Root in kappa of
///   (1/dof) * sum_i min(r_i^2, kappa^2) / kappa^2 = complexity / n,
/// found by bisection. Returns max|r_i| when complexity / n >= 1 or the
/// left side never crosses the target. Throws DegenerateInput on all-zero
/// residuals.
double solve_tuning_equation(const Vector& residuals, double complexity, double dof);

/// Low-dimensional rule: complexity p + log n, dof n - p. Requires n > p.
double tune_kappa(const Vector& residuals, Eigen::Index p);

/// Sparse high-dimensional rule: complexity log p, dof n.
double tune_kappa_sparse(const Vector& residuals, Eigen::Index p);

/// c * sqrt(m) * kappa.
double tune_tau_global(double kappa, std::size_t m, double c_mult);

/// The shifted loss L_{1,kappa}(beta) - <shift, beta> built on the central
/// shard at an anchor, with shift = grad L_{1,kappa}(anchor) - grad L_tau(anchor).
struct ShiftedLossSpec {
  const Shard* central = nullptr;
  double kappa = 0.0;
  Coefficients anchor;
  Vector shift;

  SmoothProblem problem() const;
};

ShiftedLossSpec make_shifted_loss(const Shard& central, double kappa, const Coefficients& anchor,
                                  const Vector& global_gradient);

struct RoundRecord {
  int round = 0;
  /// Sup-norm of the global gradient at the round's anchor.
  double grad_infnorm = 0.0;
  /// False on the round that triggered early stopping.
  bool updated = false;
  int inner_iters = 0;
  /// Whether the inner solver met its tolerance before its iteration cap.
  bool inner_converged = false;
  /// Iterate after the round (equal to the anchor when not updated).
  Coefficients beta;
};

struct FitTrace {
  std::vector<RoundRecord> rounds;
  CommLedger ledger;
};

struct DistributedFit {
  Coefficients beta;
  FitTrace trace;
};

/// Raised when an inner solve fails; carries the trace up to that point.
class DistributedFitError : public std::runtime_error {
 public:
  DistributedFitError(const std::string& what, FitTrace trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const FitTrace& trace() const noexcept { return trace_; }

 private:
  FitTrace trace_;
};

struct DistributedOptions {
  int max_rounds = 50;
  double g0 = 1.0;
  double stop_tol = 1e-5;
  GdBbOptions inner;
};

/// Multi-round distributed AHR with early stopping: at round t gather the
/// tau-gradients at beta^{(t-1)}; stop if g_t >= g_{t-1} or g_t <= stop_tol,
/// otherwise minimise the shifted loss from beta^{(t-1)} with GD-BB.
DistributedFit distributed_ahr(std::span<const Shard> shards, double kappa, double tau,
                               const Coefficients& beta0, CommLedger& ledger,
                               const DistributedOptions& options = {});

/// The same loop with the squared loss (kappa = tau = +inf).
DistributedFit distributed_ols(std::span<const Shard> shards, const Coefficients& beta0,
                               CommLedger& ledger, const DistributedOptions& options = {});

struct AhrFit {
  Coefficients beta;
  double tau = 0.0;
  int iterations = 0;
};

/// Huber M-estimator on one block of data. With tau unset, tau is self-tuned
/// from pilot OLS residuals, the model is fitted, tau is re-tuned on the new
/// residuals and the model refitted once. beta0 defaults to the OLS fit.
AhrFit centralized_ahr(const Shard& data, std::optional<double> tau = std::nullopt,
                       std::optional<Coefficients> beta0 = std::nullopt,
                       const GdBbOptions& options = {});

/// Coordinatewise mean. Throws std::invalid_argument on an empty list or
/// mismatched dimensions.
Coefficients dc_average(std::span<const Coefficients> local_fits);

/// Average of local OLS fits.
Coefficients dc_ols(std::span<const Shard> shards);
/// Average of self-tuned local AHR fits.
Coefficients dc_ahr(std::span<const Shard> shards);

/// Mean squared prediction error on held-out data.
double validation_mse(const Shard& validation, const Coefficients& beta);

struct TunedDistributedFit {
  DistributedFit fit;
  double kappa = 0.0;
  double tau = 0.0;
  double c_mult = 0.0;
};

/// Distributed AHR with kappa self-tuned on the central shard and
/// tau = c sqrt(m) kappa, c picked from c_grid by validation MSE (ties go to
/// the earlier entry). Without validation data the first entry is used.
TunedDistributedFit tuned_distributed_ahr(std::span<const Shard> shards, const Coefficients& beta0,
                                          std::span<const double> c_grid,
                                          const Shard* validation,
                                          const DistributedOptions& options = {});

}  // namespace dahr
