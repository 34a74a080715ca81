#pragma once

#include "marti/core.hpp"
#include "marti/mnorm.hpp"
#include "marti/regpath.hpp"

namespace marti {

/// Decomposition of the perturbed-martingale worst case for a linear model.
struct ObjectiveReport {
  double empirical_loss = 0.0;
  double tikhonov_term = 0.0;
  double r_term = 0.0;
  double total = 0.0;
  Regime regime = Regime::Full;
};

/// (1/N) sum_i loss(beta^T X_i).
double empirical_risk(const ModelParams& beta, const Dataset& data, const LossSpec& loss);

/// Exact-martingale worst case: E[loss] + (gamma rho / 2) ||beta||^2_{M^{-1}}.
double exact_martingale_value(const ModelParams& beta, const Dataset& data,
                              const WeightMatrix& w, double rho, const LossSpec& loss);

/// Perturbed-martingale worst case E[loss] + (gamma rho / 2)||beta||^2_{M^{-1}} + R(beta).
///
/// epsilon = 0 reduces to exact_martingale_value, epsilon >= sqrt(N rho) to
/// conventional_dro_value. rho = 0 returns the empirical risk.
ObjectiveReport perturbed_value(const ModelParams& beta, const Dataset& data,
                                const WeightMatrix& w, const RobustnessConfig& cfg);

/// Conventional OT-DRO worst case (sqrt(E[loss]) + sqrt(gamma rho / 2) ||beta||_{M^{-1}})^2.
double conventional_dro_value(const ModelParams& beta, const Dataset& data,
                              const WeightMatrix& w, double rho, const LossSpec& loss);

struct ConvexBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Sandwich for a mu-strongly convex, C-smooth loss:
/// E[loss] + (mu rho/2)||beta||^2 <= worst case <= E[loss] + (C rho/2)||beta||^2.
ConvexBounds convex_bounds(const ModelParams& beta, const Dataset& data, const WeightMatrix& w,
                           double rho, const LossSpec& loss, double mu, double c);

}  // namespace marti
