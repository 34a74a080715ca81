#pragma once

#include "marti/core.hpp"
#include "marti/mnorm.hpp"

#include <cmath>
#include <random>

namespace marti::testing {

struct Instance {
  Dataset data;
  WeightMatrix w;
  ModelParams beta;
};

inline Vector gaussian(std::mt19937_64& rng, Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Random SPD matrix with eigenvalues in [0.5, 2].
inline Matrix random_spd(std::mt19937_64& rng, Index d) {
  Matrix a(d, d);
  for (Index j = 0; j < d; ++j) a.col(j) = gaussian(rng, d);
  Eigen::HouseholderQR<Matrix> qr(a);
  const Matrix q = qr.householderQ();
  Vector eig(d);
  for (Index j = 0; j < d; ++j) eig(j) = uniform(rng, 0.5, 2.0);
  Matrix m = q * eig.asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());
}

/// Gaussian features, random SPD weight (optionally with coordinate 0 fixed), random beta.
inline Instance random_instance(std::mt19937_64& rng, Index n, Index d, bool fix_first = false) {
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i) x.row(i) = gaussian(rng, d).transpose();
  Vector b = gaussian(rng, d);
  if (fix_first) {
    b(0) = 1.0;
    return {Dataset(x), WeightMatrix::response_fixed(random_spd(rng, d - 1)), ModelParams{b}};
  }
  return {Dataset(x), WeightMatrix(d, {}, random_spd(rng, d)), ModelParams{b}};
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1e-300, std::max(std::abs(got), std::abs(want)));
}

/// Relative error used for finite-difference comparisons; a small absolute floor keeps
/// near-zero components from dominating.
inline double fd_rel_err(const Vector& got, const Vector& want) {
  return (got - want).norm() / std::max(1e-8, want.norm());
}

template <class F>
Vector central_diff(F&& f, const Vector& x, double h) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector p = x;
    Vector m = x;
    p(i) += h;
    m(i) -= h;
    g(i) = (f(p) - f(m)) / (2.0 * h);
  }
  return g;
}

}  // namespace marti::testing
