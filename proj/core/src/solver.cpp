#include "marti/solver.hpp"

#include "marti/objectives.hpp"
#include "marti/regpath.hpp"

#include <chrono>
#include <cmath>

namespace marti {

double StepSchedule::at(int k) const noexcept {
  if (kind == Kind::Constant) return t0;
  return t0 / std::sqrt(static_cast<double>(k) + 1.0);
}

namespace {

struct Evaluation {
  double value;
  Vector subgradient;
};

// Objective and subgradient from one pass over the scores.
Evaluation evaluate(const ModelParams& beta, const Dataset& data, const WeightMatrix& w,
                    const RobustnessConfig& cfg) {
  const LossSpec& loss = cfg.loss;
  const auto n = static_cast<double>(data.rows());
  const Vector scores = data.features() * beta.beta;
  Vector g(scores.size());
  double risk = 0.0;
  for (Index i = 0; i < scores.size(); ++i) {
    risk += loss.eval(scores(i));
    g(i) = loss.grad(scores(i));
  }
  risk /= n;

  const Vector minv_beta = w.apply_inverse(beta.beta);
  const double dn = std::sqrt(std::max(0.0, beta.beta.dot(minv_beta)));
  const double gamma = loss.gamma();

  Evaluation ev;
  ev.value = risk;
  ev.subgradient = data.features().transpose() * g / n;
  if (cfg.rho == 0.0) return ev;

  ev.value += 0.5 * gamma * cfg.rho * dn * dn;
  ev.subgradient += gamma * cfg.rho * minv_beta;
  if (cfg.epsilon == 0.0) return ev;

  const SSolution sol =
      solve_s_subproblem(g, cfg.epsilon / n, std::sqrt(cfg.rho / n));
  ev.value += dn * sol.value;
  ev.subgradient += detail::subgrad_R_from(beta, data, w, cfg, g, dn, sol);
  return ev;
}

void require_regression(const Dataset& data, const WeightMatrix& w, const RobustnessConfig& cfg,
                        const ModelParams& beta) {
  if (!cfg.loss.is_quadratic()) {
    throw Error(ErrorCode::UnsupportedLoss, "subgradient solver requires a quadratic loss");
  }
  cfg.validate();
  require_same_dim(data.dim(), beta.beta.size(), "solver beta");
  require_same_dim(w.dim(), beta.beta.size(), "solver weight");
}

}  // namespace

Vector full_subgradient(const ModelParams& beta, const Dataset& data, const WeightMatrix& w,
                        const RobustnessConfig& cfg) {
  require_regression(data, w, cfg, beta);
  return evaluate(beta, data, w, cfg).subgradient;
}

SolveTrace solve(const Dataset& data, const WeightMatrix& w, const RobustnessConfig& cfg,
                 const ModelParams& init, const SolveOptions& opts) {
  require_regression(data, w, cfg, init);
  if (opts.iterations < 1) throw Error(ErrorCode::InvalidArgument, "solver needs K >= 1");
  if (init.beta.isZero(0.0)) throw Error(ErrorCode::ZeroBeta, "solver initialization is zero");

  const auto start = std::chrono::steady_clock::now();
  const std::vector<Index>& pinned = opts.pinned ? *opts.pinned : w.fixed_coords();
  const int record_every = std::max(1, opts.record_every);

  SolveTrace trace;
  ModelParams beta = init;
  Evaluation ev = evaluate(beta, data, w, cfg);
  trace.best_beta = beta;
  trace.best_value = ev.value;
  trace.best_subgradient = ev.subgradient;
  trace.samples.push_back({0, ev.value, ev.subgradient.norm()});

  for (int k = 0; k < opts.iterations; ++k) {
    Vector step = ev.subgradient;
    for (Index j : pinned) step(j) = 0.0;
    beta.beta -= opts.schedule.at(k) * step;
    ev = evaluate(beta, data, w, cfg);
    if (ev.value < trace.best_value) {
      trace.best_value = ev.value;
      trace.best_beta = beta;
      trace.best_subgradient = ev.subgradient;
    }
    const int it = k + 1;
    if (it % record_every == 0 || it == opts.iterations) {
      trace.samples.push_back({it, ev.value, ev.subgradient.norm()});
    }
  }
  trace.iterations = opts.iterations;
  trace.wallclock =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

double tune_step_size(const Dataset& data, const WeightMatrix& w, const RobustnessConfig& cfg,
                      const ModelParams& init, const std::vector<double>& candidates,
                      int probe_iterations) {
  if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "no step-size candidates");
  double best_t0 = candidates.front();
  double best_value = kInfinity;
  for (double t0 : candidates) {
    SolveOptions opts;
    opts.iterations = probe_iterations;
    opts.schedule.t0 = t0;
    opts.record_every = probe_iterations;
    const SolveTrace tr = solve(data, w, cfg, init, opts);
    if (std::isfinite(tr.best_value) && tr.best_value < best_value) {
      best_value = tr.best_value;
      best_t0 = t0;
    }
  }
  return best_t0;
}

namespace {

void split_regression(const Dataset& encoded, Matrix& z, Vector& y) {
  if (encoded.dim() < 2) {
    throw Error(ErrorCode::DimensionMismatch, "regression encoding needs (Y, Z) columns");
  }
  y = encoded.features().col(0);
  z = encoded.features().rightCols(encoded.dim() - 1);
}

}  // namespace

Vector ols_coefficients(const Dataset& encoded) {
  Matrix z;
  Vector y;
  split_regression(encoded, z, y);
  return z.colPivHouseholderQr().solve(y);
}

Vector ridge_coefficients(const Dataset& encoded, const Matrix& q, double rho) {
  Matrix z;
  Vector y;
  split_regression(encoded, z, y);
  require_same_dim(z.cols(), q.rows(), "ridge weight");
  const auto n = static_cast<double>(z.rows());
  const Matrix qinv = q.llt().solve(Matrix::Identity(q.rows(), q.cols()));
  const Matrix lhs = z.transpose() * z / n + rho * qinv;
  return lhs.llt().solve(z.transpose() * y / n);
}

}  // namespace marti
