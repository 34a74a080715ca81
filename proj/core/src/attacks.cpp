#include "marti/attacks.hpp"

#include "marti/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace marti {

const char* to_string(AttackKind kind) noexcept {
  switch (kind) {
    case AttackKind::PGM: return "pgm";
    case AttackKind::FGSM: return "fgsm";
    case AttackKind::DRO: return "dro";
  }
  return "unknown";
}

AttackKind attack_kind_from_string(const std::string& name) {
  if (name == "pgm" || name == "pgd") return AttackKind::PGM;
  if (name == "fgsm") return AttackKind::FGSM;
  if (name == "dro") return AttackKind::DRO;
  throw Error(ErrorCode::InvalidArgument, "unknown attack kind: " + name);
}

void AttackConfig::validate() const {
  if (!(xi >= 0.0) || !std::isfinite(xi)) throw Error(ErrorCode::InvalidArgument, "xi must be >= 0");
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
  if (kind == AttackKind::DRO && !(gamma > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "DRO gamma must be positive");
  }
  if (steps < 1 || dro_steps < 0) throw Error(ErrorCode::InvalidArgument, "attack step counts");
}

namespace {

void mask(Vector& g, const std::vector<Index>& fixed) {
  for (Index j : fixed) {
    if (j < 0 || j >= g.size()) throw Error(ErrorCode::DimensionMismatch, "fixed coordinate");
    g(j) = 0.0;
  }
}

// Projection of p onto the ball of radius xi around z in the l2 or l_inf norm.
Vector project(const Vector& z, const Vector& p, double xi, bool linf) {
  Vector d = p - z;
  if (linf) return z + d.cwiseMax(-xi).cwiseMin(xi);
  const double n = d.norm();
  if (n > xi) d *= xi / n;
  // Guard the budget against rounding in the rescale.
  while (d.norm() > xi) d *= 1.0 - 1e-15;
  return z + d;
}

}  // namespace

Vector pgm_attack(const LossOracle& oracle, const Vector& z, Index label, const AttackConfig& cfg) {
  cfg.validate();
  if (cfg.kind == AttackKind::DRO) throw Error(ErrorCode::InvalidArgument, "pgm_attack needs PGM/FGSM");
  const bool linf = cfg.kind == AttackKind::FGSM;
  Vector cur = z;
  if (cfg.xi == 0.0) return cur;
  for (int s = 0; s < cfg.steps; ++s) {
    Vector g = oracle.gradient(cur, label);
    require_same_dim(z.size(), g.size(), "attack gradient");
    mask(g, cfg.fixed_coords);
    Vector dir;
    if (linf) {
      dir = g.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
    } else {
      const double n = g.norm();
      if (!(n > 0.0)) return cur;
      dir = g / n;
    }
    if (dir.isZero(0.0)) return cur;
    cur = project(z, cur + cfg.alpha * cfg.xi * dir, cfg.xi, linf);
  }
  return cur;
}

Vector dro_attack(const LossOracle& oracle, const Vector& z, Index label, const AttackConfig& cfg) {
  cfg.validate();
  if (cfg.kind != AttackKind::DRO) throw Error(ErrorCode::InvalidArgument, "dro_attack needs DRO");
  const double step = 0.1 / cfg.gamma;
  auto objective = [&](const Vector& p) { return oracle.loss(p, label) - cfg.gamma * (p - z).squaredNorm(); };
  Vector cur = z;
  Vector best = z;
  double best_val = objective(z);
  for (int s = 0; s < cfg.dro_steps; ++s) {
    Vector g = oracle.gradient(cur, label) - 2.0 * cfg.gamma * (cur - z);
    mask(g, cfg.fixed_coords);
    cur += step * g;
    const double v = objective(cur);
    if (v > best_val) {
      best_val = v;
      best = cur;
    }
  }
  return best;
}

Vector attack(const LossOracle& oracle, const Vector& z, Index label, const AttackConfig& cfg) {
  return cfg.kind == AttackKind::DRO ? dro_attack(oracle, z, label, cfg)
                                     : pgm_attack(oracle, z, label, cfg);
}

double adversarial_rmse(const ModelParams& beta, const Dataset& encoded, const AttackConfig& cfg) {
  require_same_dim(encoded.dim(), beta.beta.size(), "adversarial_rmse beta");
  AttackConfig c = cfg;
  if (std::find(c.fixed_coords.begin(), c.fixed_coords.end(), Index{0}) == c.fixed_coords.end()) {
    c.fixed_coords.push_back(0);
  }
  const RegressionOracle oracle(beta.beta);
  const auto n = static_cast<std::size_t>(encoded.rows());
  std::vector<double> sq(n);
  parallel_for(n, [&](std::size_t i) {
    const Vector adv = attack(oracle, encoded.row(static_cast<Index>(i)), 0, c);
    const double r = beta.beta.dot(adv);
    sq[i] = r * r;
  });
  double total = 0.0;
  for (double v : sq) total += v;
  return std::sqrt(total / static_cast<double>(n));
}

double adversarial_accuracy(const Mlp& net, const Dataset& data, const AttackConfig& cfg) {
  require_same_dim(net.input_dim(), data.dim(), "adversarial_accuracy input");
  const MlpOracle oracle(net);
  const auto n = static_cast<std::size_t>(data.rows());
  std::vector<int> correct(n);
  parallel_for(n, [&](std::size_t i) {
    const Index label = class_label(data.targets()(static_cast<Index>(i)));
    const Vector adv = attack(oracle, data.row(static_cast<Index>(i)), label, cfg);
    correct[i] = net.predict(adv) == label ? 1 : 0;
  });
  int total = 0;
  for (int v : correct) total += v;
  return static_cast<double>(total) / static_cast<double>(n);
}

}  // namespace marti
