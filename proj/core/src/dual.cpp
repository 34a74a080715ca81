#include "marti/dual.hpp"

#include "golden.hpp"
#include "marti/objectives.hpp"
#include "marti/regpath.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace marti {

double ParametricCoupling::transport_cost(const WeightMatrix& w) const {
  double sum = 0.0;
  for (Index i = 0; i < eta.rows(); ++i) {
    const double n = m_norm(w, eta.row(i).transpose());
    sum += n * n + t(i) * t(i);
  }
  return sum / static_cast<double>(eta.rows());
}

double ParametricCoupling::max_mean_shift(const WeightMatrix& w) const {
  double out = 0.0;
  for (Index i = 0; i < eta.rows(); ++i) out = std::max(out, m_norm(w, eta.row(i).transpose()));
  return out;
}

bool ParametricCoupling::feasible(const WeightMatrix& w, double rho, double epsilon,
                                  double tol) const {
  if ((t.array() < 0.0).any()) return false;
  for (Index i = 0; i < v.rows(); ++i) {
    if (t(i) > 0.0 && std::abs(m_norm(w, v.row(i).transpose()) - 1.0) > 1e-9) return false;
  }
  return transport_cost(w) <= rho + tol && max_mean_shift(w) <= epsilon + tol;
}

double inner_sup_quadratic(const ModelParams& beta, const Vector& x_i, const Vector& alpha_i,
                           double lambda, const WeightMatrix& w, const LossSpec& loss) {
  if (!loss.is_quadratic()) {
    throw Error(ErrorCode::UnsupportedLoss, "inner_sup_quadratic requires a quadratic loss");
  }
  require_same_dim(w.dim(), beta.beta.size(), "inner_sup_quadratic beta");
  require_same_dim(w.dim(), x_i.size(), "inner_sup_quadratic x");
  require_same_dim(w.dim(), alpha_i.size(), "inner_sup_quadratic alpha");

  const double gamma = loss.gamma();
  const double score = beta.beta.dot(x_i);
  const double g = loss.grad(score);
  const double base = loss.eval(score);

  const Vector bt = w.restrict(beta.beta);
  const Vector qinv_b = w.q_inverse() * bt;
  const double b2 = bt.dot(qinv_b);
  const double threshold = 0.5 * gamma * b2;

  // Only the transportable block of the residual can be paired with a perturbation.
  const Vector r = g * bt - w.restrict(alpha_i);
  const double scale = 1.0 + std::abs(g) * bt.norm();
  const bool residual_zero = r.norm() <= 1e-12 * scale;

  if (lambda < threshold) return kInfinity;
  if (lambda == threshold) return residual_zero ? base : kInfinity;
  if (residual_zero) return base;

  // (lambda M - (gamma/2) b b^T)^{-1} = M^{-1}/lambda + gamma M^{-1} b b^T M^{-1} / (lambda (2 lambda - gamma b2))
  const Vector qinv_r = w.q_inverse() * r;
  const double quad = r.dot(qinv_r);
  const double proj = r.dot(qinv_b);
  const double value =
      quad / lambda + gamma * proj * proj / (lambda * (2.0 * lambda - gamma * b2));
  return base + 0.25 * value;
}

double dual_objective(const ModelParams& beta, const Dataset& data, const WeightMatrix& w,
                      double rho, double epsilon, const LossSpec& loss, const DualPoint& point) {
  require_same_dim(data.rows(), point.alpha.rows(), "dual_objective alpha rows");
  require_same_dim(data.dim(), point.alpha.cols(), "dual_objective alpha cols");
  const auto n = static_cast<double>(data.rows());
  double penalty = 0.0;
  double sups = 0.0;
  for (Index i = 0; i < data.rows(); ++i) {
    const Vector a = point.alpha.row(i).transpose();
    const double an = m_dual_norm(w, a);
    if (an > 0.0) {
      if (std::isinf(epsilon)) return kInfinity;
      penalty += epsilon * an;
    }
    const double s = inner_sup_quadratic(beta, data.row(i), a, point.lambda, w, loss);
    if (std::isinf(s)) return kInfinity;
    sups += s;
  }
  return point.lambda * rho + penalty / n + sups / n;
}

namespace {

constexpr int kScalarGrid = 257;
constexpr int kScalarRefine = 80;

double logistic_inner_sup(const LossSpec& loss, double score, double dn, double s,
                          double lambda) {
  auto h = [&](double u) { return loss.eval(score + dn * u) - s * dn * u - lambda * u * u; };
  // |loss'| <= 1, so stationary points satisfy |u| <= dn (1 + |s|) / (2 lambda)
  const double bound = dn * (1.0 + std::abs(s)) / (2.0 * lambda) * 1.05 + 1e-12;
  const double step = 2.0 * bound / (kScalarGrid - 1);
  std::array<double, kScalarGrid> vals;
  for (int k = 0; k < kScalarGrid; ++k) vals[k] = h(-bound + step * k);
  // At the dual optimum the supremum is typically attained at two separated points
  // with nearly equal values, so every grid local maximum is refined.
  double best = h(0.0);
  for (int k = 0; k < kScalarGrid; ++k) {
    best = std::max(best, vals[k]);
    const bool left = k == 0 || vals[k] >= vals[k - 1];
    const bool right = k + 1 == kScalarGrid || vals[k] >= vals[k + 1];
    if (!left || !right) continue;
    const double u = -bound + step * k;
    const auto res =
        detail::golden_min([&](double v) { return -h(v); }, u - step, u + step, 1e-13, kScalarRefine);
    best = std::max(best, -res.fx);
  }
  return best;
}

}  // namespace

double inner_sup_scalar(const LossSpec& loss, double score, double dual_norm, double s,
                        double lambda) {
  if (dual_norm == 0.0) return lambda >= 0.0 ? loss.eval(score) : kInfinity;
  if (loss.is_quadratic()) {
    const double gamma = loss.gamma();
    const double g = loss.grad(score);
    const double threshold = 0.5 * gamma * dual_norm * dual_norm;
    if (lambda < threshold) return kInfinity;
    if (lambda == threshold) return s == g ? loss.eval(score) : kInfinity;
    const double u = dual_norm * (g - s) / (2.0 * lambda - gamma * dual_norm * dual_norm);
    return loss.eval(score + dual_norm * u) - s * dual_norm * u - lambda * u * u;
  }
  if (!(lambda > 0.0)) return kInfinity;
  return logistic_inner_sup(loss, score, dual_norm, s, lambda);
}

namespace {

Vector soft_threshold(const Vector& y, double tau) {
  Vector s(y.size());
  for (Index i = 0; i < y.size(); ++i) {
    const double mag = std::abs(y(i)) - tau;
    s(i) = mag > 0.0 ? std::copysign(mag, y(i)) : 0.0;
  }
  return s;
}

DualPoint point_from_scalars(const ModelParams& beta, double lambda, const Vector& s) {
  DualPoint p;
  p.lambda = lambda;
  p.alpha = s * beta.beta.transpose();
  return p;
}

DualResult quadratic_dual(const ModelParams& beta, const Dataset& data, const WeightMatrix& w,
                          const RobustnessConfig& cfg, const DualOptions& opts) {
  const double gamma = cfg.loss.gamma();
  const double dn = m_dual_norm(w, beta.beta);
  const Vector g = gradient_vector(beta, data, cfg.loss);
  const auto n = static_cast<double>(data.rows());
  const double threshold = 0.5 * gamma * dn * dn;

  DualResult out;
  if (dn == 0.0) {
    out.value = empirical_risk(beta, data, cfg.loss);
    out.point = point_from_scalars(beta, 0.0, Vector::Zero(data.rows()));
    out.evaluations = 1;
    return out;
  }

  // Per-lambda optimal alpha_i = s_i beta: minimizing eps B |s| + B^2 (g - s)^2 / (2 w)
  // with w = 2 lambda - gamma B^2 soft-thresholds g at eps w / B.
  auto scalars_at = [&](double lambda) -> Vector {
    if (std::isinf(cfg.epsilon)) return Vector::Zero(g.size());
    const double wgap = 2.0 * lambda - gamma * dn * dn;
    return soft_threshold(g, cfg.epsilon * wgap / dn);
  };
  auto objective = [&](double lambda) {
    return dual_objective(beta, data, w, cfg.rho, cfg.epsilon, cfg.loss,
                          point_from_scalars(beta, lambda, scalars_at(lambda)));
  };

  // Optimal offset above threshold is B ||G - s*|| / (2 sqrt(N rho)) <= B ||G|| / (2 sqrt(N rho)).
  const double lo = threshold > 0.0 ? threshold * (1.0 + 1e-9) : 1e-300;
  const double hi = threshold + 10.0 * threshold + 10.0 + dn * g.norm() / std::sqrt(n * cfg.rho);
  const auto res = detail::golden_min(objective, lo, hi, opts.tol, opts.max_iterations);

  out.value = res.fx;
  out.point = point_from_scalars(beta, res.x, scalars_at(res.x));
  out.evaluations = res.evaluations;

  // lambda at the threshold is only finite with alpha_i = g_i beta.
  const DualPoint edge = point_from_scalars(beta, threshold, g);
  const double edge_value = dual_objective(beta, data, w, cfg.rho, cfg.epsilon, cfg.loss, edge);
  ++out.evaluations;
  if (edge_value < out.value) {
    out.value = edge_value;
    out.point = edge;
  }
  return out;
}

DualResult scalar_dual(const ModelParams& beta, const Dataset& data, const WeightMatrix& w,
                       const RobustnessConfig& cfg, const DualOptions& opts) {
  const double dn = m_dual_norm(w, beta.beta);
  const Vector scores = data.features() * beta.beta;
  const Index n = data.rows();
  const auto nd = static_cast<double>(n);

  DualResult out;
  if (dn == 0.0) {
    out.value = empirical_risk(beta, data, cfg.loss);
    out.point = point_from_scalars(beta, 0.0, Vector::Zero(n));
    out.evaluations = 1;
    return out;
  }

  int evals = 0;
  // min_s eps B |s| + sup_u [...] per sample; convex in s.
  auto per_sample = [&](double lambda, Index i, double* s_out) {
    const double score = scores(i);
    const double g = cfg.loss.grad(score);
    auto f = [&](double s) {
      const double pen = std::isinf(cfg.epsilon) ? (s == 0.0 ? 0.0 : kInfinity)
                                                 : cfg.epsilon * dn * std::abs(s);
      return pen + inner_sup_scalar(cfg.loss, score, dn, s, lambda);
    };
    if (std::isinf(cfg.epsilon)) {
      if (s_out) *s_out = 0.0;
      return f(0.0);
    }
    const double lo = std::min(g, 0.0) - 1.0;
    const double hi = std::max(g, 0.0) + 1.0;
    const auto res = detail::golden_min(f, lo, hi, 1e-10, 120);
    double best_s = res.x;
    double best = res.fx;
    const double at_zero = f(0.0);
    if (at_zero <= best) {
      best = at_zero;
      best_s = 0.0;
    }
    if (s_out) *s_out = best_s;
    return best;
  };
  auto objective = [&](double lambda) {
    ++evals;
    double total = lambda * cfg.rho;
    for (Index i = 0; i < n; ++i) total += per_sample(lambda, i, nullptr) / nd;
    return total;
  };

  double hi = 0.5 * cfg.loss.smoothness() * dn * dn + 1.0;
  double f_hi = objective(hi);
  for (int k = 0; k < 60; ++k) {
    const double f_next = objective(2.0 * hi);
    if (f_next >= f_hi) break;
    hi *= 2.0;
    f_hi = f_next;
  }
  const auto res = detail::golden_min(objective, 1e-12, 2.0 * hi, opts.tol, opts.max_iterations);

  Vector s(n);
  for (Index i = 0; i < n; ++i) per_sample(res.x, i, &s(i));
  out.value = res.fx;
  out.point = point_from_scalars(beta, res.x, s);
  out.evaluations = evals;
  return out;
}

}  // namespace

DualResult dual_value(const ModelParams& beta, const Dataset& data, const WeightMatrix& w,
                      const RobustnessConfig& cfg, const DualOptions& opts) {
  cfg.validate();
  if (!(cfg.rho > 0.0)) throw Error(ErrorCode::NonpositiveRho, "dual_value requires rho > 0");
  if (!(cfg.epsilon > 0.0)) {
    throw Error(ErrorCode::NonpositiveRadius, "dual_value requires epsilon > 0");
  }
  require_same_dim(data.dim(), beta.beta.size(), "dual_value");
  require_same_dim(w.dim(), beta.beta.size(), "dual_value weight");
  if (cfg.loss.is_quadratic()) return quadratic_dual(beta, data, w, cfg, opts);
  return scalar_dual(beta, data, w, cfg, opts);
}

double coupling_objective(const ModelParams& beta, const Dataset& data, const LossSpec& loss,
                          const ParametricCoupling& coupling) {
  require_same_dim(data.rows(), coupling.eta.rows(), "coupling rows");
  double sum = 0.0;
  for (Index i = 0; i < data.rows(); ++i) {
    const Vector base = data.row(i) + coupling.eta.row(i).transpose();
    const Vector spread = coupling.t(i) * coupling.v.row(i).transpose();
    const double th = coupling.skew_at(i);
    const double q = 1.0 / (1.0 + std::exp(-th));
    sum += q * loss.eval(beta.beta.dot(base + std::exp(-0.5 * th) * spread)) +
           (1.0 - q) * loss.eval(beta.beta.dot(base - std::exp(0.5 * th) * spread));
  }
  return sum / static_cast<double>(data.rows());
}

namespace {

// Magnitudes of the coupling along the unit direction e = M^{-1} beta / B:
// eta_i = p_i e, v_i = e. The score then moves by B (p_i +/- t_i).
struct Magnitudes {
  Vector p;
  Vector t;
  Vector skew;
};

constexpr double kMaxSkew = 30.0;

class CouplingAscent {
 public:
  CouplingAscent(const Vector& scores, double dn, const LossSpec& loss, double rho, double eps)
      : scores_(scores), dn_(dn), loss_(loss), budget_(rho * static_cast<double>(scores.size())),
        eps_(eps) {}

  double value(const Magnitudes& m) const {
    double sum = 0.0;
    for (Index i = 0; i < scores_.size(); ++i) {
      const double th = m.skew(i);
      const double q = 1.0 / (1.0 + std::exp(-th));
      sum += q * loss_.eval(scores_(i) + dn_ * (m.p(i) + m.t(i) * std::exp(-0.5 * th))) +
             (1.0 - q) * loss_.eval(scores_(i) + dn_ * (m.p(i) - m.t(i) * std::exp(0.5 * th)));
    }
    return sum / static_cast<double>(scores_.size());
  }

  Magnitudes gradient(const Magnitudes& m) const {
    const Index n = scores_.size();
    Magnitudes g{Vector(n), Vector(n), Vector(n)};
    const double c = 1.0 / static_cast<double>(n);
    for (Index i = 0; i < n; ++i) {
      const double th = m.skew(i);
      const double q = 1.0 / (1.0 + std::exp(-th));
      const double eu = std::exp(-0.5 * th);
      const double ed = std::exp(0.5 * th);
      const double su = scores_(i) + dn_ * (m.p(i) + m.t(i) * eu);
      const double sd = scores_(i) + dn_ * (m.p(i) - m.t(i) * ed);
      const double up = loss_.grad(su);
      const double down = loss_.grad(sd);
      g.p(i) = c * dn_ * (q * up + (1.0 - q) * down);
      g.t(i) = c * dn_ * (q * up * eu - (1.0 - q) * down * ed);
      g.skew(i) = c * (q * (1.0 - q) * (loss_.eval(su) - loss_.eval(sd)) -
                       0.5 * dn_ * m.t(i) * (q * up * eu + (1.0 - q) * down * ed));
    }
    return g;
  }

  /// Euclidean projection onto {|p_i| <= eps, t_i >= 0, ||p||^2 + ||t||^2 <= N rho}.
  Magnitudes project(const Magnitudes& z) const {
    auto clip = [&](double mu) {
      Magnitudes x{z.p / (1.0 + mu), z.t / (1.0 + mu), z.skew.cwiseMax(-kMaxSkew).cwiseMin(kMaxSkew)};
      for (Index i = 0; i < x.p.size(); ++i) {
        x.p(i) = std::clamp(x.p(i), -eps_, eps_);
        x.t(i) = std::max(x.t(i), 0.0);
      }
      return x;
    };
    auto sq = [](const Magnitudes& x) { return x.p.squaredNorm() + x.t.squaredNorm(); };
    Magnitudes x = clip(0.0);
    if (sq(x) <= budget_) return x;
    double lo = 0.0;
    double hi = 1.0;
    while (sq(clip(hi)) > budget_) hi *= 2.0;
    for (int k = 0; k < 200 && hi - lo > 1e-15 * (1.0 + hi); ++k) {
      const double mid = 0.5 * (lo + hi);
      if (sq(clip(mid)) > budget_) lo = mid; else hi = mid;
    }
    x = clip(hi);
    const double s = sq(x);
    if (s > budget_) {
      const double shrink = std::sqrt(budget_ / s);
      x.p *= shrink;
      x.t *= shrink;
    }
    return x;
  }

  Magnitudes ascend(Magnitudes m, int iters, int* steps) const {
    m = project(m);
    double val = value(m);
    double step = 1.0;
    for (int k = 0; k < iters; ++k) {
      const Magnitudes g = gradient(m);
      bool moved = false;
      for (int tries = 0; tries < 40; ++tries) {
        Magnitudes cand = project({m.p + step * g.p, m.t + step * g.t, m.skew + step * g.skew});
        const double cv = value(cand);
        if (cv > val) {
          m = std::move(cand);
          val = cv;
          step *= 1.5;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      ++*steps;
      if (!moved) break;
    }
    return m;
  }

 private:
  const Vector& scores_;
  double dn_;
  const LossSpec& loss_;
  double budget_;
  double eps_;
};

/// Maximizer of sum |g_i| n_i over {0 <= n_i <= eps, sum n_i^2 <= budget}: n_i = min(eps, k |g_i|).
Vector linear_box_ball(const Vector& g, double eps, double budget) {
  const Vector mag = g.cwiseAbs();
  auto at = [&](double k) {
    Vector n(mag.size());
    for (Index i = 0; i < mag.size(); ++i) n(i) = std::min(eps, k * mag(i));
    return n;
  };
  if (mag.maxCoeff() == 0.0) return Vector::Zero(g.size());
  if (!std::isinf(eps)) {
    Vector capped(mag.size());
    for (Index i = 0; i < mag.size(); ++i) capped(i) = mag(i) > 0.0 ? eps : 0.0;
    if (capped.squaredNorm() <= budget) return capped;
  }
  double lo = 0.0;
  double hi = std::sqrt(budget) / mag.norm();
  if (std::isinf(eps)) return at(hi);
  while (at(hi).squaredNorm() < budget) hi *= 2.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (at(mid).squaredNorm() > budget) hi = mid; else lo = mid;
  }
  return at(lo);
}

}  // namespace

PrimalResult primal_lower_bound(const ModelParams& beta, const Dataset& data,
                                const WeightMatrix& w, const RobustnessConfig& cfg,
                                int budget_iters) {
  cfg.validate();
  require_same_dim(data.dim(), beta.beta.size(), "primal_lower_bound");
  require_same_dim(w.dim(), beta.beta.size(), "primal_lower_bound weight");
  const Index n = data.rows();
  const Index d = data.dim();
  const double dn = m_dual_norm(w, beta.beta);
  const Vector scores = data.features() * beta.beta;

  PrimalResult out;
  out.coupling.eta = Matrix::Zero(n, d);
  out.coupling.t = Vector::Zero(n);

  Vector dir;
  if (dn > 0.0) {
    dir = w.apply_inverse(beta.beta) / dn;
  } else {
    const Index j = w.transportable_coords().front();
    Vector e = Vector::Zero(d);
    e(j) = 1.0;
    dir = e / m_norm(w, e);
  }
  out.coupling.v = Vector::Ones(n) * dir.transpose();
  if (dn == 0.0 || cfg.rho == 0.0) {
    out.value = coupling_objective(beta, data, cfg.loss, out.coupling);
    return out;
  }

  const CouplingAscent ascent(scores, dn, cfg.loss, cfg.rho, cfg.epsilon);
  const double budget = cfg.rho * static_cast<double>(n);
  const Vector g = scores.unaryExpr([&](double s) { return cfg.loss.grad(s); });

  std::array<Magnitudes, 3> starts;
  {
    // Exact maximizer for quadratic loss: mean shifts solve the linear box-ball
    // problem, and the leftover budget is spread evenly.
    const Vector mags = linear_box_ball(g, cfg.epsilon, budget);
    Vector p = mags.cwiseProduct(g.array().sign().matrix());
    const double rest = std::max(0.0, budget - p.squaredNorm());
    starts[0] = {p, Vector::Constant(n, std::sqrt(rest / static_cast<double>(n))), Vector::Zero(n)};
  }
  starts[1] = {Vector::Zero(n), Vector::Constant(n, std::sqrt(cfg.rho)), Vector::Zero(n)};
  {
    const double shift = std::min(cfg.epsilon, std::sqrt(0.5 * cfg.rho));
    Vector p = g.array().sign().matrix() * shift;
    const double rest = std::max(0.0, budget - p.squaredNorm());
    starts[2] = {p, Vector::Constant(n, std::sqrt(rest / static_cast<double>(n))), Vector::Zero(n)};
  }

  double best = -kInfinity;
  Magnitudes best_m;
  for (auto& s : starts) {
    Magnitudes m = ascent.ascend(s, budget_iters, &out.steps);
    const double val = ascent.value(m);
    if (val > best) {
      best = val;
      best_m = std::move(m);
    }
  }

  for (Index i = 0; i < n; ++i) {
    out.coupling.eta.row(i) = best_m.p(i) * dir.transpose();
    out.coupling.t(i) = best_m.t(i);
  }
  out.coupling.skew = best_m.skew;
  out.value = coupling_objective(beta, data, cfg.loss, out.coupling);
  return out;
}

DualityReport verify_duality(const ModelParams& beta, const Dataset& data, const WeightMatrix& w,
                             const RobustnessConfig& cfg) {
  const DualResult dual = dual_value(beta, data, w, cfg);
  const PrimalResult primal = primal_lower_bound(beta, data, w, cfg);
  DualityReport rep;
  rep.dual_value = dual.value;
  rep.primal_lower = primal.value;
  rep.rel_gap = std::max(0.0, dual.value - primal.value) / std::max(1.0, std::abs(dual.value));
  rep.iterations = {dual.evaluations, primal.steps};
  return rep;
}

}  // namespace marti
