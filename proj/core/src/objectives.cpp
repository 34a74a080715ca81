#include "marti/objectives.hpp"

#include <cmath>

namespace marti {

namespace {

void require_quadratic(const LossSpec& loss, const char* what) {
  if (!loss.is_quadratic()) {
    throw Error(ErrorCode::UnsupportedLoss, std::string(what) + " requires a quadratic loss");
  }
}

void require_rho(double rho) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) {
    throw Error(ErrorCode::NonpositiveRho, "rho must be finite and nonnegative");
  }
}

}  // namespace

double empirical_risk(const ModelParams& beta, const Dataset& data, const LossSpec& loss) {
  require_same_dim(data.dim(), beta.beta.size(), "empirical_risk");
  const Vector scores = data.features() * beta.beta;
  double sum = 0.0;
  for (Index i = 0; i < scores.size(); ++i) sum += loss.eval(scores(i));
  return sum / static_cast<double>(data.rows());
}

double exact_martingale_value(const ModelParams& beta, const Dataset& data,
                              const WeightMatrix& w, double rho, const LossSpec& loss) {
  require_quadratic(loss, "exact_martingale_value");
  require_rho(rho);
  const double dn = m_dual_norm(w, beta.beta);
  return empirical_risk(beta, data, loss) + 0.5 * loss.gamma() * rho * dn * dn;
}

ObjectiveReport perturbed_value(const ModelParams& beta, const Dataset& data,
                                const WeightMatrix& w, const RobustnessConfig& cfg) {
  require_quadratic(cfg.loss, "perturbed_value");
  require_rho(cfg.rho);
  cfg.validate();

  ObjectiveReport rep;
  rep.empirical_loss = empirical_risk(beta, data, cfg.loss);
  if (cfg.rho == 0.0) {
    rep.total = rep.empirical_loss;
    rep.regime = Regime::AllZero;
    return rep;
  }
  const double dn = m_dual_norm(w, beta.beta);
  rep.tikhonov_term = 0.5 * cfg.loss.gamma() * cfg.rho * dn * dn;
  const RegularizerValue reg = regularizer_R(beta, data, w, cfg);
  rep.r_term = reg.value;
  rep.regime = reg.sol.regime;
  rep.total = rep.empirical_loss + rep.tikhonov_term + rep.r_term;
  return rep;
}

double conventional_dro_value(const ModelParams& beta, const Dataset& data,
                              const WeightMatrix& w, double rho, const LossSpec& loss) {
  require_quadratic(loss, "conventional_dro_value");
  require_rho(rho);
  const double root = std::sqrt(empirical_risk(beta, data, loss)) +
                      std::sqrt(0.5 * loss.gamma() * rho) * m_dual_norm(w, beta.beta);
  return root * root;
}

ConvexBounds convex_bounds(const ModelParams& beta, const Dataset& data, const WeightMatrix& w,
                           double rho, const LossSpec& loss, double mu, double c) {
  require_rho(rho);
  if (!(mu >= 0.0) || !(mu <= c) || !std::isfinite(c)) {
    throw Error(ErrorCode::InvalidConstants, "convex bounds need 0 <= mu <= C < inf");
  }
  const double risk = empirical_risk(beta, data, loss);
  const double dn = m_dual_norm(w, beta.beta);
  const double scale = 0.5 * rho * dn * dn;
  return {risk + mu * scale, risk + c * scale};
}

}  // namespace marti
