#include "instances.hpp"

#include <doctest.h>

#include "marti/mnorm.hpp"

#include <random>

using namespace marti;

TEST_CASE("m_norm basic values") {
  const WeightMatrix id = WeightMatrix::identity(2);
  CHECK(m_norm(id, Vector::Zero(2)) == 0.0);
  CHECK(m_norm(id, (Vector(2) << 3, 4).finished()) == doctest::Approx(5.0));
  CHECK(m_dual_norm(id, (Vector(2) << 3, 4).finished()) == doctest::Approx(5.0));

  const WeightMatrix fixed = WeightMatrix::response_fixed(Matrix::Identity(2, 2));
  CHECK(std::isinf(m_norm(fixed, (Vector(3) << 0.5, 1, 1).finished())));
  CHECK(m_norm(fixed, (Vector(3) << 0, 3, 4).finished()) == doctest::Approx(5.0));
  CHECK_THROWS_AS(m_norm(id, Vector::Zero(3)), Error);
}

TEST_CASE("dual norm ignores fixed coordinates") {
  const WeightMatrix w = WeightMatrix::response_fixed(Matrix::Constant(1, 1, 4.0));
  CHECK(m_dual_norm(w, (Vector(2) << 7.0, 2.0).finished()) == doctest::Approx(1.0));
  const Vector b = (Vector(2) << 0.5, -1.5).finished();
  const WeightMatrix w2 = WeightMatrix::response_fixed(Matrix::Identity(2, 2));
  CHECK(m_dual_norm(w2, ModelParams::from_coefficients(b).beta) == doctest::Approx(b.norm()));
}

TEST_CASE("weight matrix validation") {
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(WeightMatrix(2, {}, asym), Error);
  Matrix singular = Matrix::Zero(2, 2);
  singular(0, 0) = 1.0;
  CHECK_THROWS_AS(WeightMatrix(2, {}, singular), Error);
  CHECK_THROWS_AS(WeightMatrix(3, {0}, Matrix::Identity(3, 3)), Error);
  CHECK_THROWS_AS(WeightMatrix(2, {5}, Matrix::Identity(1, 1)), Error);
}

TEST_CASE("Cauchy-Schwarz between the norm and its dual") {
  std::mt19937_64 rng(21);
  const Matrix q = testing::random_spd(rng, 3);
  const WeightMatrix w(4, {0}, q);
  for (int k = 0; k < 1000; ++k) {
    Vector beta = testing::gaussian(rng, 4);
    Vector delta = testing::gaussian(rng, 4);
    delta(0) = 0.0;
    CHECK(std::abs(beta.dot(delta)) <= m_dual_norm(w, beta) * m_norm(w, delta) * (1 + 1e-12) + 1e-14);
  }
}

TEST_CASE("norm duality through the metric") {
  std::mt19937_64 rng(22);
  const Matrix q = testing::random_spd(rng, 3);
  const WeightMatrix w(4, {2}, q);
  for (int k = 0; k < 100; ++k) {
    Vector v = testing::gaussian(rng, 4);
    v(2) = 0.0;
    CHECK(testing::rel_err(m_dual_norm(w, w.apply(v)), m_norm(w, v)) <= 1e-12);
  }
}

TEST_CASE("project_m_ball") {
  const WeightMatrix id = WeightMatrix::identity(2);
  const Vector x = (Vector(2) << 3, 4).finished();
  const Vector p = project_m_ball(id, x, 1.0);
  CHECK(p(0) == doctest::Approx(0.6));
  CHECK(p(1) == doctest::Approx(0.8));
  const Vector small = (Vector(2) << 1.2, 1.6).finished();
  CHECK(project_m_ball(id, small, 3.0) == small);
  CHECK_THROWS_AS(project_m_ball(id, x, -1.0), Error);

  std::mt19937_64 rng(23);
  const WeightMatrix w(3, {1}, testing::random_spd(rng, 2));
  for (int k = 0; k < 500; ++k) {
    const Vector y = 5.0 * testing::gaussian(rng, 3);
    const double eps = testing::uniform(rng, 1e-6, 3.0);
    const Vector once = project_m_ball(w, y, eps);
    CHECK(once(1) == 0.0);
    CHECK(m_norm(w, once) <= eps);
    CHECK(project_m_ball(w, once, eps) == once);
  }
}
