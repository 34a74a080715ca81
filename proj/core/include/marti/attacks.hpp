#pragma once

#include "marti/core.hpp"
#include "marti/mlp.hpp"

#include <vector>

namespace marti {

enum class AttackKind { PGM, FGSM, DRO };

const char* to_string(AttackKind kind) noexcept;
AttackKind attack_kind_from_string(const std::string& name);

struct AttackConfig {
  AttackKind kind = AttackKind::PGM;
  double xi = 0.1;      ///< PGM/FGSM budget; xi = 0 returns the input unchanged
  double alpha = 1.0;   ///< scale applied to the ascent direction before projection
  double gamma = 1.0;   ///< DRO penalty weight
  int steps = 1;        ///< PGM/FGSM iterations
  int dro_steps = 100;
  /// Coordinates the attack may not move (the response in the regression layout).
  std::vector<Index> fixed_coords;

  void validate() const;
};

/// Loss and input gradient of a fixed model at one labelled point; read-only.
class LossOracle {
 public:
  virtual ~LossOracle() = default;
  virtual double loss(const Vector& z, Index label) const = 0;
  virtual Vector gradient(const Vector& z, Index label) const = 0;
};

class MlpOracle final : public LossOracle {
 public:
  explicit MlpOracle(const Mlp& net) : net_(net) {}
  double loss(const Vector& z, Index label) const override { return net_.loss(z, label); }
  Vector gradient(const Vector& z, Index label) const override {
    return net_.forward_backward(z, label).grad_input;
  }

 private:
  const Mlp& net_;
};

/// Squared residual (beta^T z)^2 on the response-first encoding; label is ignored.
class RegressionOracle final : public LossOracle {
 public:
  explicit RegressionOracle(Vector beta) : beta_(std::move(beta)) {}
  double loss(const Vector& z, Index) const override {
    const double r = beta_.dot(z);
    return r * r;
  }
  Vector gradient(const Vector& z, Index) const override { return 2.0 * beta_.dot(z) * beta_; }

 private:
  Vector beta_;
};

/// One (or cfg.steps) projected ascent steps inside the l2 ball (PGM) or l_inf box
/// (FGSM) of radius xi around z. A zero gradient returns the current point.
Vector pgm_attack(const LossOracle& oracle, const Vector& z, Index label, const AttackConfig& cfg);

/// Best iterate of cfg.dro_steps gradient steps of size 0.1/gamma on
/// z' -> loss(z') - gamma ||z' - z||_2^2, started at z.
Vector dro_attack(const LossOracle& oracle, const Vector& z, Index label, const AttackConfig& cfg);

/// Dispatches on cfg.kind.
Vector attack(const LossOracle& oracle, const Vector& z, Index label, const AttackConfig& cfg);

/// RMSE of beta on the encoded test set after attacking every row; coordinate 0
/// (the response) is always held fixed.
double adversarial_rmse(const ModelParams& beta, const Dataset& encoded, const AttackConfig& cfg);

/// Classification accuracy of net on data (targets +/-1) under the attack.
double adversarial_accuracy(const Mlp& net, const Dataset& data, const AttackConfig& cfg);

}  // namespace marti
