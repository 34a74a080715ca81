#pragma once

#include "marti/core.hpp"
#include "marti/mnorm.hpp"

namespace marti {

/// Dual multipliers: lambda for the transport budget, alpha_i (row i) for the
/// per-sample martingale-violation constraint.
struct DualPoint {
  double lambda = 0.0;
  Matrix alpha;
};

/// Per-sample two-point coupling. With q_i = 1 / (1 + exp(-skew_i)), sample i moves to
/// X_i + eta_i + t_i exp(-skew_i / 2) v_i with mass q_i and to
/// X_i + eta_i - t_i exp(skew_i / 2) v_i with mass 1 - q_i. The conditional mean shift is
/// exactly eta_i and the spread has second moment t_i^2. An empty skew means all zeros.
struct ParametricCoupling {
  Matrix eta;   ///< N x d, ||eta_i||_M <= epsilon
  Vector t;     ///< N, t_i >= 0
  Matrix v;     ///< N x d, ||v_i||_M = 1
  Vector skew;  ///< N or empty

  double skew_at(Index i) const { return skew.size() == 0 ? 0.0 : skew(i); }

  /// (1/N) sum_i (||eta_i||_M^2 + t_i^2)
  double transport_cost(const WeightMatrix& w) const;
  /// max_i ||eta_i||_M
  double max_mean_shift(const WeightMatrix& w) const;
  bool feasible(const WeightMatrix& w, double rho, double epsilon, double tol = 1e-12) const;
};

struct DualityIterations {
  int dual_evaluations = 0;
  int primal_steps = 0;
};

struct DualityReport {
  double dual_value = 0.0;
  double primal_lower = 0.0;
  double rel_gap = 0.0;
  DualityIterations iterations;
};

struct DualOptions {
  double tol = 1e-10;
  int max_iterations = 400;
};

struct DualResult {
  double value = 0.0;
  DualPoint point;
  int evaluations = 0;
};

struct PrimalResult {
  double value = 0.0;
  ParametricCoupling coupling;
  int steps = 0;
};

/// sup_D [ loss(beta^T (x_i + D)) - alpha_i^T D - lambda ||D||_M^2 ] for quadratic loss.
///
/// Returns kInfinity below lambda = (gamma/2)||beta||^2_{M^{-1}}, and at that
/// threshold unless alpha_i = loss'(beta^T x_i) beta. Above it the value is
/// closed form through the Sherman-Morrison inverse of lambda M - (gamma/2) beta beta^T.
double inner_sup_quadratic(const ModelParams& beta, const Vector& x_i, const Vector& alpha_i,
                           double lambda, const WeightMatrix& w, const LossSpec& loss);

/// Dual objective lambda rho + (eps/N) sum ||alpha_i||_{M^{-1}} + (1/N) sum inner_sup_i
/// for quadratic loss.
double dual_objective(const ModelParams& beta, const Dataset& data, const WeightMatrix& w,
                      double rho, double epsilon, const LossSpec& loss, const DualPoint& point);

/// Scalar inner supremum sup_u [ loss(score + B u) - s B u - lambda u^2 ] along
/// M^{-1} beta, valid for any loss; numeric (grid + golden refinement) for logistic.
double inner_sup_scalar(const LossSpec& loss, double score, double dual_norm, double s,
                        double lambda);

/// Minimizes the dual over lambda (golden section) and alpha_i = s_i beta.
/// Requires rho > 0 and epsilon > 0.
DualResult dual_value(const ModelParams& beta, const Dataset& data, const WeightMatrix& w,
                      const RobustnessConfig& cfg, const DualOptions& opts = {});

/// Best feasible two-point coupling found by projected ascent on its magnitudes;
/// its objective is a certified lower bound on the primal worst case.
PrimalResult primal_lower_bound(const ModelParams& beta, const Dataset& data,
                                const WeightMatrix& w, const RobustnessConfig& cfg,
                                int budget_iters = 300);

/// Primal objective: mean over samples of the coupling's expected loss.
double coupling_objective(const ModelParams& beta, const Dataset& data, const LossSpec& loss,
                          const ParametricCoupling& coupling);

/// rel_gap = (dual - primal) / max(1, |dual|).
DualityReport verify_duality(const ModelParams& beta, const Dataset& data, const WeightMatrix& w,
                             const RobustnessConfig& cfg);

}  // namespace marti
