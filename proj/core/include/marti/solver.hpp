#pragma once

#include "marti/core.hpp"
#include "marti/mnorm.hpp"

#include <optional>
#include <vector>

namespace marti {

struct StepSchedule {
  enum class Kind { InvSqrt, Constant };
  Kind kind = Kind::InvSqrt;
  double t0 = 1e-2;

  /// t_k = t0 / sqrt(k + 1) or t0.
  double at(int k) const noexcept;
};

struct SolveOptions {
  int iterations = 1000;
  StepSchedule schedule;
  /// Coordinates of beta held at their initial value. Defaults to the weight
  /// matrix's fixed coordinates (the response weight in the regression layout).
  std::optional<std::vector<Index>> pinned;
  /// Record a trace sample every this many iterations (the last one is always kept).
  int record_every = 1;
};

struct TraceSample {
  int iteration = 0;
  double objective = 0.0;
  double subgradient_norm = 0.0;
};

struct SolveTrace {
  std::vector<TraceSample> samples;
  ModelParams best_beta;
  double best_value = 0.0;
  /// Subgradient returned at best_beta.
  Vector best_subgradient;
  double wallclock = 0.0;
  int iterations = 0;
};

/// Gradient of E[loss] plus gamma rho M^{-1} beta plus an element of dR(beta).
///
/// Quadratic loss only. Throws ZeroBeta if ||beta||_{M^{-1}} = 0 while epsilon > 0.
Vector full_subgradient(const ModelParams& beta, const Dataset& data, const WeightMatrix& w,
                        const RobustnessConfig& cfg);

/// Subgradient method beta_{k+1} = beta_k - t_k g_k on the perturbed-martingale objective,
/// returning the best iterate by true objective value.
SolveTrace solve(const Dataset& data, const WeightMatrix& w, const RobustnessConfig& cfg,
                 const ModelParams& init, const SolveOptions& opts);

/// Picks t0 among candidates by running probe_iterations of the method from init
/// and keeping the lowest best objective (ties toward the smaller step).
double tune_step_size(const Dataset& data, const WeightMatrix& w, const RobustnessConfig& cfg,
                      const ModelParams& init,
                      const std::vector<double>& candidates = {1e-3, 1e-2, 1e-1},
                      int probe_iterations = 100);

/// Least-squares coefficients b minimizing E[(Y - b^T Z)^2] on the response-first
/// encoding X = (Y, Z).
Vector ols_coefficients(const Dataset& encoded);

/// Ridge coefficients (Z^T Z / N + rho Q^{-1})^{-1} Z^T Y / N.
Vector ridge_coefficients(const Dataset& encoded, const Matrix& q, double rho);

}  // namespace marti
