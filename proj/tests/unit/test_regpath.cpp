#include "instances.hpp"

#include <doctest.h>

#include "marti/objectives.hpp"
#include "marti/regpath.hpp"

#include <algorithm>
#include <random>

using namespace marti;

namespace {

double s_objective(const Vector& y, double a, double b, const Vector& s) {
  return a * s.lpNorm<1>() + b * (y - s).norm();
}

Vector soft(const Vector& y, double tau) {
  return y.unaryExpr([tau](double v) { return v > tau ? v - tau : (v < -tau ? v + tau : 0.0); });
}

// The minimizer is a soft-threshold of y, so a dense scan over tau is an exact oracle
// up to grid resolution.
double tau_grid_min(const Vector& y, double a, double b, double step) {
  double best = s_objective(y, a, b, Vector::Zero(y.size()));
  const double top = y.cwiseAbs().maxCoeff();
  for (double tau = 0.0; tau <= top; tau += step) best = std::min(best, s_objective(y, a, b, soft(y, tau)));
  return best;
}

}  // namespace

TEST_CASE("s-subproblem corner examples") {
  const Vector y = (Vector(2) << 3, 1).finished();

  const SSolution full = solve_s_subproblem(y, 1.0, 2.0);
  CHECK(full.regime == Regime::Full);
  CHECK(full.s_star == y);
  CHECK(full.value == doctest::Approx(4.0));
  CHECK(full.tau == 0.0);

  const SSolution zero = solve_s_subproblem(y, 1.0, 1.0);
  CHECK(zero.regime == Regime::AllZero);
  CHECK(zero.s_star.isZero(0.0));
  CHECK(zero.value == doctest::Approx(std::sqrt(10.0)));
  CHECK(std::isinf(zero.tau));

  const SSolution mid = solve_s_subproblem(y, 1.0, 1.2);
  CHECK(mid.regime == Regime::Middle);
  CHECK(std::abs(mid.value - tau_grid_min(y, 1.0, 1.2, 1e-5)) <= 1e-6);

  const SSolution none = solve_s_subproblem(Vector::Zero(3), 0.3, 0.4);
  CHECK(none.value == 0.0);
  CHECK(none.s_star.isZero(0.0));
  CHECK_THROWS_AS(solve_s_subproblem(y, 0.0, 0.0), Error);
}

TEST_CASE("s-subproblem value is never beaten by random candidates") {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 200; ++k) {
    const auto n = static_cast<Index>(1 + rng() % 6);
    const Vector y = 2.0 * testing::gaussian(rng, n);
    const double a = testing::uniform(rng, 0.01, 2.0);
    const double b = testing::uniform(rng, 0.01, 2.0);
    const SSolution sol = solve_s_subproblem(y, a, b);
    CHECK(std::abs(sol.value - s_objective(y, a, b, sol.s_star)) <= 1e-12 * (1 + sol.value));
    double best_random = kInfinity;
    for (int r = 0; r < 10000; ++r) {
      const Vector s = y + testing::gaussian(rng, n) * testing::uniform(rng, 0.0, 2.0);
      best_random = std::min(best_random, s_objective(y, a, b, s));
    }
    CHECK_MESSAGE(sol.value <= best_random + 1e-12, "instance ", k);
  }
}

TEST_CASE("middle regime has the zeroed-prefix, shrunk-suffix form") {
  std::mt19937_64 rng(32);
  int middles = 0;
  for (int k = 0; k < 500; ++k) {
    const Index n = 6;
    const Vector y = testing::gaussian(rng, n);
    const double a = 1.0;
    const double lo = y.norm() / y.cwiseAbs().maxCoeff();
    const double b = testing::uniform(rng, lo, std::sqrt(6.0));
    const SSolution sol = solve_s_subproblem(y, a, b);
    if (sol.regime != Regime::Middle) continue;
    ++middles;
    for (Index i = 0; i < n; ++i) {
      if (std::abs(y(i)) <= sol.tau) {
        CHECK(sol.s_star(i) == 0.0);
      } else {
        CHECK(std::abs(std::abs(y(i)) - std::abs(sol.s_star(i)) - sol.tau) <= 1e-12 * (1 + std::abs(y(i))));
        CHECK(sol.s_star(i) * y(i) > 0.0);
      }
    }
    CHECK(b * sol.tau == doctest::Approx(a * (y - sol.s_star).norm()).epsilon(1e-10));
  }
  CHECK(middles > 100);
}

TEST_CASE("s-subproblem is positively homogeneous in y") {
  std::mt19937_64 rng(33);
  for (int k = 0; k < 200; ++k) {
    const Vector y = testing::gaussian(rng, 5);
    const double a = testing::uniform(rng, 0.1, 1.0);
    const double b = testing::uniform(rng, 0.1, 1.0);
    const double c = testing::uniform(rng, 0.1, 10.0);
    CHECK(std::abs(solve_s_subproblem(c * y, a, b).value - c * solve_s_subproblem(y, a, b).value) <=
          1e-12 * (1 + c * y.norm()));
  }
}

TEST_CASE("regularizer endpoints") {
  std::mt19937_64 rng(34);
  for (int k = 0; k < 50; ++k) {
    const auto inst = testing::random_instance(rng, 6, 3);
    const double n = 6.0;
    const double dn = m_dual_norm(inst.w, inst.beta.beta);
    const Vector g = gradient_vector(inst.beta, inst.data, LossSpec::quadratic(2.0));
    RobustnessConfig cfg;
    cfg.rho = testing::uniform(rng, 0.05, 1.0);

    cfg.epsilon = 0.0;
    CHECK(regularizer_R(inst.beta, inst.data, inst.w, cfg).value == 0.0);
    CHECK(subgrad_R(inst.beta, inst.data, inst.w, cfg).isZero(0.0));

    cfg.epsilon = std::sqrt(cfg.rho) * testing::uniform(rng, 0.01, 1.0);
    const double jac = cfg.epsilon / n * g.lpNorm<1>() * dn;
    CHECK(testing::rel_err(regularizer_R(inst.beta, inst.data, inst.w, cfg).value, jac) <= 1e-12);

    cfg.epsilon = std::sqrt(n * cfg.rho) * testing::uniform(rng, 1.0, 3.0);
    const double sq = std::sqrt(cfg.rho / n) * g.norm() * dn;
    CHECK(testing::rel_err(regularizer_R(inst.beta, inst.data, inst.w, cfg).value, sq) <= 1e-12);
  }
}

TEST_CASE("regularizer is nondecreasing in epsilon") {
  std::mt19937_64 rng(35);
  for (int k = 0; k < 100; ++k) {
    const auto inst = testing::random_instance(rng, 5, 2);
    RobustnessConfig lo, hi;
    lo.rho = hi.rho = testing::uniform(rng, 0.05, 1.0);
    lo.epsilon = testing::uniform(rng, 0.0, 3.0);
    hi.epsilon = lo.epsilon + testing::uniform(rng, 0.0, 3.0);
    CHECK(regularizer_R(inst.beta, inst.data, inst.w, lo).value <=
          regularizer_R(inst.beta, inst.data, inst.w, hi).value + 1e-12);
  }
}

TEST_CASE("regularizer rejects logistic loss and zero beta") {
  std::mt19937_64 rng(36);
  auto inst = testing::random_instance(rng, 4, 2);
  RobustnessConfig cfg;
  cfg.rho = 0.5;
  cfg.epsilon = 0.3;
  cfg.loss = LossSpec::logistic();
  CHECK_THROWS_AS(regularizer_R(inst.beta, inst.data, inst.w, cfg), Error);
  cfg.loss = LossSpec::quadratic(2.0);
  CHECK_THROWS_AS(subgrad_R(ModelParams{Vector::Zero(2)}, inst.data, inst.w, cfg), Error);
}

TEST_CASE("subgradient of R matches finite differences in each regime") {
  std::mt19937_64 rng(37);
  int seen[3] = {0, 0, 0};
  for (int k = 0; k < 150; ++k) {
    const auto inst = testing::random_instance(rng, 5, 3, k % 2 == 0);
    RobustnessConfig cfg;
    cfg.rho = testing::uniform(rng, 0.05, 1.0);
    const double scale = std::sqrt(5.0 * cfg.rho);
    cfg.epsilon = scale * (k % 3 == 0 ? testing::uniform(rng, 0.01, 0.4)
                                      : (k % 3 == 1 ? testing::uniform(rng, 0.4, 1.0)
                                                    : testing::uniform(rng, 1.0, 2.0)));
    const SSolution sol = regularizer_R(inst.beta, inst.data, inst.w, cfg).sol;
    ++seen[static_cast<int>(sol.regime)];
    auto f = [&](const Vector& b) { return regularizer_R(ModelParams{b}, inst.data, inst.w, cfg).value; };
    const Vector fd = testing::central_diff(f, inst.beta.beta, 1e-6);
    const Vector g = subgrad_R(inst.beta, inst.data, inst.w, cfg);
    // Pinned coordinates carry the response weight; the subgradient covers them too.
    CHECK_MESSAGE(testing::fd_rel_err(g, fd) <= 1e-5, "regime ", to_string(sol.regime), " k=", k);
  }
  CHECK(seen[0] > 0);
  CHECK(seen[1] > 0);
  CHECK(seen[2] > 0);
}
