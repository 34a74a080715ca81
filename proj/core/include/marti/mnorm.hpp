#pragma once

#include "marti/core.hpp"

#include <vector>

namespace marti {

/// Mahalanobis weight M = diag(+inf on fixed coordinates, Q on the rest).
///
/// Fixed coordinates cannot be transported: any perturbation touching them has
/// infinite cost, and the dual norm ignores them (the matching rows of M^{-1}
/// vanish). Q is factorized once at construction and must be symmetric with
/// smallest eigenvalue above 1e-10.
class WeightMatrix {
 public:
  WeightMatrix(Index dim, std::vector<Index> fixed_coords, Matrix q);

  static WeightMatrix identity(Index dim);
  static WeightMatrix diagonal(const Vector& diag);
  /// Response-first regression layout: coordinate 0 is fixed, Q acts on the rest.
  static WeightMatrix response_fixed(const Matrix& q);

  Index dim() const noexcept { return dim_; }
  const std::vector<Index>& fixed_coords() const noexcept { return fixed_; }
  const std::vector<Index>& transportable_coords() const noexcept { return free_; }
  bool is_fixed(Index i) const;

  const Matrix& q() const noexcept { return q_; }
  const Matrix& q_inverse() const noexcept { return q_inv_; }
  double min_eigenvalue() const noexcept { return min_eig_; }

  /// Transportable block of x.
  Vector restrict(const Vector& x) const;
  /// Inverse of restrict, zero on fixed coordinates.
  Vector embed(const Vector& xt) const;

  /// M x on the transportable block, zero on fixed coordinates.
  Vector apply(const Vector& x) const;
  /// M^{-1} x, zero on fixed coordinates.
  Vector apply_inverse(const Vector& x) const;

 private:
  Index dim_;
  std::vector<Index> fixed_;
  std::vector<Index> free_;
  std::vector<bool> fixed_mask_;
  Matrix q_;
  Matrix q_inv_;
  double min_eig_ = 0.0;
};

/// sqrt(x^T M x); kInfinity when a fixed coordinate is nonzero beyond 1e-14.
double m_norm(const WeightMatrix& w, const Vector& x);

/// sqrt(x^T M^{-1} x) over the transportable block.
double m_dual_norm(const WeightMatrix& w, const Vector& x);

/// Radial projection onto {||x||_M <= eps}; fixed coordinates are zeroed first.
Vector project_m_ball(const WeightMatrix& w, const Vector& x, double eps);

}  // namespace marti
