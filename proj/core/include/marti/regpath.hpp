#pragma once

#include "marti/core.hpp"
#include "marti/mnorm.hpp"

namespace marti {

/// Which branch of the l1/l2 inner problem produced the minimizer.
///
/// AllZero: s* = 0 (square-root regime, every martingale constraint active).
/// Middle:  s* = soft-threshold of y at level tau, a strict subset active.
/// Full:    s* = y (Jacobian regime, no constraint active).
enum class Regime { AllZero, Middle, Full };

const char* to_string(Regime r) noexcept;

struct SSolution {
  Vector s_star;
  /// a*||s*||_1 + b*||y - s*||_2
  double value = 0.0;
  Regime regime = Regime::AllZero;
  /// Number of nonzero entries of s*.
  Index active_count = 0;
  /// Soft-threshold level; equals the shrinkage applied to the active entries.
  /// 0 for Full, kInfinity for AllZero.
  double tau = 0.0;
};

/// Global minimizer of a*||s||_1 + b*||y - s||_2 over s.
///
/// Exact: sorts |y| once and solves b^2 tau^2 = a^2 (sum_{inactive} y_i^2 + k tau^2)
/// on each breakpoint interval. a may be kInfinity (forces s = 0).
SSolution solve_s_subproblem(const Vector& y, double a, double b);

/// G_beta = (loss'(beta^T X_1), ..., loss'(beta^T X_N)).
Vector gradient_vector(const ModelParams& beta, const Dataset& data, const LossSpec& loss);

struct RegularizerValue {
  double value = 0.0;
  SSolution sol;
};

/// R(beta) = ||beta||_{M^{-1}} * min_s (eps/N ||s||_1 + sqrt(rho/N) ||G_beta - s||_2).
/// Quadratic loss only.
RegularizerValue regularizer_R(const ModelParams& beta, const Dataset& data,
                               const WeightMatrix& w, const RobustnessConfig& cfg);

/// An element of the Clarke subdifferential of R at beta.
///
/// Throws ZeroBeta when ||beta||_{M^{-1}} = 0 and epsilon > 0.
Vector subgrad_R(const ModelParams& beta, const Dataset& data, const WeightMatrix& w,
                 const RobustnessConfig& cfg);

namespace detail {
/// Subgradient of R given precomputed G_beta, ||beta||_{M^{-1}} and the s-solution.
Vector subgrad_R_from(const ModelParams& beta, const Dataset& data, const WeightMatrix& w,
                      const RobustnessConfig& cfg, const Vector& g, double dual_norm,
                      const SSolution& sol);
}  // namespace detail

}  // namespace marti
