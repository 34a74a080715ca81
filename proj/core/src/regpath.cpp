#include "marti/regpath.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace marti {

const char* to_string(Regime r) noexcept {
  switch (r) {
    case Regime::AllZero: return "all_zero";
    case Regime::Middle: return "middle";
    case Regime::Full: return "full";
  }
  return "unknown";
}

namespace {

SSolution make_zero(const Vector& y, double b) {
  SSolution sol;
  sol.s_star = Vector::Zero(y.size());
  sol.value = b > 0.0 ? b * y.norm() : 0.0;
  sol.regime = Regime::AllZero;
  sol.active_count = 0;
  sol.tau = kInfinity;
  return sol;
}

SSolution make_full(const Vector& y, double a) {
  SSolution sol;
  sol.s_star = y;
  sol.value = a > 0.0 ? a * y.lpNorm<1>() : 0.0;
  sol.regime = Regime::Full;
  sol.active_count = (y.array() != 0.0).count();
  sol.tau = 0.0;
  return sol;
}

Vector soft_threshold(const Vector& y, double tau) {
  Vector s(y.size());
  for (Index i = 0; i < y.size(); ++i) {
    const double mag = std::abs(y(i)) - tau;
    s(i) = mag > 0.0 ? std::copysign(mag, y(i)) : 0.0;
  }
  return s;
}

}  // namespace

SSolution solve_s_subproblem(const Vector& y, double a, double b) {
  if (!(a >= 0.0) || !(b >= 0.0) || std::isinf(b)) {
    throw Error(ErrorCode::InvalidArgument, "s-subproblem needs a >= 0 and finite b >= 0");
  }
  if (a == 0.0 && b == 0.0) {
    throw Error(ErrorCode::DegenerateInput, "s-subproblem with a = b = 0");
  }
  if (!y.allFinite()) throw Error(ErrorCode::InvalidArgument, "s-subproblem input not finite");

  const Index n = y.size();
  if (n == 0 || (y.array() == 0.0).all()) {
    SSolution sol = make_zero(y, b);
    sol.value = 0.0;
    return sol;
  }
  if (a == 0.0) return make_full(y, a);
  if (std::isinf(a) || b == 0.0) return make_zero(y, b);

  const double y_inf = y.lpNorm<Eigen::Infinity>();
  const double y_two = y.norm();
  if (b * y_inf <= a * y_two) return make_zero(y, b);

  const auto nnz = static_cast<Index>((y.array() != 0.0).count());
  if (b >= a * std::sqrt(static_cast<double>(nnz))) return make_full(y, a);

  // Middle regime: tau solves b*tau = a*||min(|y|, tau)||_2 with 0 < tau < ||y||_inf.
  std::vector<double> mag(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) mag[static_cast<std::size_t>(i)] = std::abs(y(i));
  std::sort(mag.begin(), mag.end(), std::greater<>());
  // tail[k] = sum of squares of mag[k..n-1]
  std::vector<double> tail(static_cast<std::size_t>(n) + 1, 0.0);
  for (Index k = n - 1; k >= 0; --k) {
    const auto ku = static_cast<std::size_t>(k);
    tail[ku] = tail[ku + 1] + mag[ku] * mag[ku];
  }

  const double a2 = a * a;
  const double b2 = b * b;
  double tau = -1.0;
  double best_violation = kInfinity;
  double fallback_tau = 0.0;
  for (Index k = 1; k < nnz; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double denom = b2 - a2 * static_cast<double>(k);
    if (denom <= 0.0) break;
    const double t = a * std::sqrt(tail[ku] / denom);
    const double hi = mag[ku - 1];
    const double lo = mag[ku];
    if (t >= lo && t <= hi) {
      tau = t;
      break;
    }
    const double violation = t < lo ? lo - t : t - hi;
    if (violation < best_violation) {
      best_violation = violation;
      fallback_tau = std::clamp(t, lo, hi);
    }
  }
  if (tau < 0.0) tau = fallback_tau;

  SSolution sol;
  sol.s_star = soft_threshold(y, tau);
  sol.regime = Regime::Middle;
  sol.active_count = (sol.s_star.array() != 0.0).count();
  sol.tau = tau;
  sol.value = a * sol.s_star.lpNorm<1>() + b * (y - sol.s_star).norm();
  return sol;
}

Vector gradient_vector(const ModelParams& beta, const Dataset& data, const LossSpec& loss) {
  require_same_dim(data.dim(), beta.beta.size(), "gradient_vector");
  const Vector scores = data.features() * beta.beta;
  return scores.unaryExpr([&](double t) { return loss.grad(t); });
}

namespace {

void require_quadratic(const RobustnessConfig& cfg, const char* what) {
  if (!cfg.loss.is_quadratic()) {
    throw Error(ErrorCode::UnsupportedLoss, std::string(what) + " requires a quadratic loss");
  }
}

struct InnerWeights {
  double a;
  double b;
};

InnerWeights inner_weights(const RobustnessConfig& cfg, Index n) {
  const auto nd = static_cast<double>(n);
  return {cfg.epsilon / nd, std::sqrt(cfg.rho / nd)};
}

}  // namespace

RegularizerValue regularizer_R(const ModelParams& beta, const Dataset& data,
                               const WeightMatrix& w, const RobustnessConfig& cfg) {
  require_quadratic(cfg, "regularizer_R");
  cfg.validate();
  require_same_dim(data.dim(), beta.beta.size(), "regularizer_R");
  require_same_dim(w.dim(), beta.beta.size(), "regularizer_R weight");

  const Vector g = gradient_vector(beta, data, cfg.loss);
  RegularizerValue out;
  if (cfg.epsilon == 0.0) {
    out.sol = make_full(g, 0.0);
    out.value = 0.0;
    return out;
  }
  if (cfg.rho == 0.0) {
    out.sol = make_zero(g, 0.0);
    out.value = 0.0;
    return out;
  }
  const auto [a, b] = inner_weights(cfg, data.rows());
  out.sol = solve_s_subproblem(g, a, b);
  out.value = m_dual_norm(w, beta.beta) * out.sol.value;
  return out;
}

Vector detail::subgrad_R_from(const ModelParams& beta, const Dataset& data, const WeightMatrix& w,
                              const RobustnessConfig& cfg, const Vector& g, double dual_norm,
                              const SSolution& sol) {
  const Index d = beta.beta.size();
  if (cfg.epsilon == 0.0 || cfg.rho == 0.0) return Vector::Zero(d);
  if (dual_norm == 0.0) {
    throw Error(ErrorCode::ZeroBeta, "subgradient of R undefined at ||beta||_{M^-1} = 0");
  }
  const auto [a, b] = inner_weights(cfg, data.rows());

  // Multiplier v in the subdifferential of ||G - s*||_2, chosen so that b*v lies in
  // a*d||s*||_1 (the optimality pairing); with G = s* this gives v = (a/b) sign(s*).
  const Vector r = g - sol.s_star;
  const double rn = r.norm();
  Vector v;
  if (rn > 0.0) {
    v = r / rn;
  } else {
    v = sol.s_star.array().sign().matrix() * (a / b);
  }

  const double gamma = cfg.loss.gamma();
  Vector grad = w.apply_inverse(beta.beta) * (sol.value / dual_norm);
  grad += (dual_norm * b * gamma) * (data.features().transpose() * v);
  return grad;
}

Vector subgrad_R(const ModelParams& beta, const Dataset& data, const WeightMatrix& w,
                 const RobustnessConfig& cfg) {
  const RegularizerValue reg = regularizer_R(beta, data, w, cfg);
  if (cfg.epsilon == 0.0 || cfg.rho == 0.0) return Vector::Zero(beta.beta.size());
  const Vector g = gradient_vector(beta, data, cfg.loss);
  return detail::subgrad_R_from(beta, data, w, cfg, g, m_dual_norm(w, beta.beta), reg.sol);
}

}  // namespace marti
