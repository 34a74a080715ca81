#include "instances.hpp"

#include <doctest.h>

#include "marti/advtrain.hpp"
#include "marti/dataio.hpp"

#include <cstdlib>
#include <random>

using namespace marti;

TEST_CASE("inner maximization respects the ball and the monotone safeguard") {
  std::mt19937_64 rng(91);
  const Mlp net({2, 4, 3, 2, 2}, 3);
  const WeightMatrix w = WeightMatrix::diagonal((Vector(2) << 0.5, 2.0).finished());
  TrainConfig cfg;
  for (int k = 0; k < 200; ++k) {
    const Vector x = 1.5 * testing::gaussian(rng, 2);
    const Index label = k % 2;
    cfg.epsilon = testing::uniform(rng, 0.05, 2.0);
    const InnerResult r = inner_maximize(net, x, label, w, cfg);
    CHECK(m_norm(w, r.delta) <= cfg.epsilon);
    CHECK(r.value >= net.loss(x, label));
    const double dn = m_norm(w, r.delta);
    CHECK(r.value == doctest::Approx(net.loss(x + r.delta, label) - cfg.lambda * dn * dn));
  }
}

TEST_CASE("inner maximization limits") {
  const Mlp net({2, 4, 3, 2, 2}, 4);
  const WeightMatrix w = WeightMatrix::identity(2);
  const Vector x = (Vector(2) << 0.3, -0.8).finished();
  TrainConfig cfg;
  cfg.epsilon = 1e-8;
  const InnerResult tiny = inner_maximize(net, x, 1, w, cfg);
  CHECK(tiny.delta.norm() <= 1e-8);
  CHECK(tiny.value == doctest::Approx(net.loss(x, 1)).epsilon(1e-7));

  // The logistic head has curvature at most 1/2 in the logits, so 1e5 is far above
  // any curvature bound for this network at moderate inputs.
  cfg.epsilon = 1.0;
  cfg.lambda = 1e5;
  CHECK(m_norm(w, inner_maximize(net, x, 0, w, cfg).delta) <= 1e-3);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.epsilon = 1.0;
  cfg.lambda = -1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.lambda = 2.0;
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("near-zero epsilon reproduces plain SGD") {
  const Dataset data = gen_two_ring(300, 1.6, 5);
  const WeightMatrix w = WeightMatrix::identity(2);
  const Mlp init({2, 4, 3, 2, 2}, 9);
  TrainConfig adv;
  adv.epsilon = 1e-12;
  adv.epochs = 5;
  TrainConfig plain = adv;
  plain.inner_steps = 0;
  const TrainResult a = train(init, data, w, adv);
  const TrainResult b = train(init, data, w, plain);
  REQUIRE(a.trace.step_losses.size() == b.trace.step_losses.size());
  for (std::size_t i = 0; i < a.trace.step_losses.size(); ++i) {
    CHECK(std::abs(a.trace.step_losses[i] - b.trace.step_losses[i]) <= 1e-6);
  }
  CHECK((a.net.flatten() - b.net.flatten()).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("two-ring training keeps perturbations in the ball and lowers the robust loss") {
  const Dataset data = gen_two_ring(500, 1.6, 6);
  const WeightMatrix w = WeightMatrix::identity(2);
  TrainConfig cfg;
  cfg.seed = 6;
  const TrainResult r = train(Mlp({2, 4, 3, 2, 2}, 6), data, w, cfg);
  REQUIRE(r.trace.epochs.size() == 51);
  CHECK(r.trace.perturbation_norms.size() == static_cast<std::size_t>(50 * data.rows()));
  for (double n : r.trace.perturbation_norms) CHECK(n <= cfg.epsilon + 1e-9);
  CHECK(r.trace.epochs.back().robust_loss < r.trace.epochs[1].robust_loss);
  for (const auto& e : r.trace.epochs) CHECK(e.robust_loss >= e.clean_loss - 1e-12);
}

TEST_CASE("training is reproducible across worker counts") {
  const Dataset data = gen_two_ring(300, 1.6, 7);
  const WeightMatrix w = WeightMatrix::identity(2);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.random_start = true;
  cfg.seed = 42;
  const Mlp init({2, 4, 3, 2, 2}, 1);
  setenv("MARTI_DRO_THREADS", "1", 1);
  const TrainResult one = train(init, data, w, cfg);
  setenv("MARTI_DRO_THREADS", "4", 1);
  const TrainResult four = train(init, data, w, cfg);
  unsetenv("MARTI_DRO_THREADS");
  CHECK(one.net == four.net);
  CHECK(one.trace.perturbation_norms == four.trace.perturbation_norms);
  const TrainResult again = train(init, data, w, cfg);
  CHECK(again.net == one.net);
}
