#pragma once

#include "marti/core.hpp"
#include "marti/mlp.hpp"
#include "marti/mnorm.hpp"
#include "marti/solver.hpp"

#include <cstdint>
#include <vector>

namespace marti {

struct TrainConfig {
  double epsilon = 1.0;   ///< M-ball radius for each perturbation
  double lambda = 2.0;    ///< penalty weight on ||Delta||_M^2
  int inner_steps = 15;   ///< ascent steps per inner maximization; 0 disables the attack
  double inner_lr = 0.2;  ///< inner step at t = 0, decayed as 1/sqrt(t + 1)
  bool random_start = false;
  int epochs = 50;
  int batch_size = 10;
  StepSchedule schedule{StepSchedule::Kind::InvSqrt, 0.5};
  std::uint64_t seed = 0;

  void validate() const;
};

struct InnerResult {
  Vector delta;
  double value = 0.0;        ///< loss(x + delta) - lambda ||delta||_M^2
  bool curvature_warning = false;
};

/// Projected gradient ascent on Delta -> loss(x + Delta) - lambda ||Delta||_M^2 over the
/// M-ball of radius epsilon, keeping the best iterate (never worse than Delta = 0).
///
/// start is the initial Delta (projected); pass an empty vector to start from zero.
InnerResult inner_maximize(const Mlp& net, const Vector& x, Index label, const WeightMatrix& w,
                           const TrainConfig& cfg, const Vector& start = Vector());

struct EpochRecord {
  int epoch = 0;             ///< 0 is the untrained network
  double robust_loss = 0.0;  ///< mean inner value over the training set
  double clean_loss = 0.0;
  double max_perturbation = 0.0;
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;
  /// ||Delta||_M of every perturbation used in an update, in step order.
  std::vector<double> perturbation_norms;
  /// Mean minibatch loss at each parameter update.
  std::vector<double> step_losses;
  int curvature_warnings = 0;
};

struct TrainResult {
  Mlp net;
  TrainTrace trace;
};

/// Mean robust and clean loss of net over the data (targets are +/-1).
EpochRecord evaluate_robust(const Mlp& net, const Dataset& data, const WeightMatrix& w,
                            const TrainConfig& cfg);

/// Minibatch SGD on the perturbed-martingale adversarial objective. Each epoch reshuffles
/// with a stream derived from (seed, epoch); random starts use (seed, epoch, sample index),
/// so results do not depend on the worker count.
TrainResult train(const Mlp& init, const Dataset& data, const WeightMatrix& w,
                  const TrainConfig& cfg);

}  // namespace marti
