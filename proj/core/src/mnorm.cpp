#include "marti/mnorm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace marti {

namespace {
constexpr double kEigenFloor = 1e-10;
constexpr double kSymmetryTol = 1e-12;
constexpr double kFixedTol = 1e-14;
}  // namespace

WeightMatrix::WeightMatrix(Index dim, std::vector<Index> fixed_coords, Matrix q)
    : dim_(dim), fixed_(std::move(fixed_coords)), q_(std::move(q)) {
  if (dim_ < 1) throw Error(ErrorCode::InvalidArgument, "weight matrix dimension must be >= 1");
  std::sort(fixed_.begin(), fixed_.end());
  fixed_.erase(std::unique(fixed_.begin(), fixed_.end()), fixed_.end());
  fixed_mask_.assign(static_cast<std::size_t>(dim_), false);
  for (Index i : fixed_) {
    if (i < 0 || i >= dim_) throw Error(ErrorCode::InvalidArgument, "fixed coordinate out of range");
    fixed_mask_[static_cast<std::size_t>(i)] = true;
  }
  for (Index i = 0; i < dim_; ++i) {
    if (!fixed_mask_[static_cast<std::size_t>(i)]) free_.push_back(i);
  }
  const auto nfree = static_cast<Index>(free_.size());
  if (nfree == 0) throw Error(ErrorCode::InvalidArgument, "no transportable coordinates");
  require_same_dim(nfree, q_.rows(), "weight block rows");
  require_same_dim(nfree, q_.cols(), "weight block cols");
  if (!q_.allFinite()) throw Error(ErrorCode::InvalidArgument, "weight block has non-finite entries");

  const double scale = std::max(1.0, q_.cwiseAbs().maxCoeff());
  if ((q_ - q_.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    throw Error(ErrorCode::InvalidArgument, "weight block is not symmetric");
  }
  q_ = 0.5 * (q_ + q_.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> eig(q_);
  min_eig_ = eig.eigenvalues().minCoeff();
  if (!(min_eig_ > kEigenFloor)) {
    std::ostringstream os;
    os << "weight block is not positive definite (min eigenvalue " << min_eig_ << ")";
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
  Eigen::LLT<Matrix> llt(q_);
  q_inv_ = llt.solve(Matrix::Identity(nfree, nfree));
  q_inv_ = 0.5 * (q_inv_ + q_inv_.transpose());
}

WeightMatrix WeightMatrix::identity(Index dim) {
  return WeightMatrix(dim, {}, Matrix::Identity(dim, dim));
}

WeightMatrix WeightMatrix::diagonal(const Vector& diag) {
  return WeightMatrix(diag.size(), {}, diag.asDiagonal().toDenseMatrix());
}

WeightMatrix WeightMatrix::response_fixed(const Matrix& q) {
  return WeightMatrix(q.rows() + 1, {0}, q);
}

bool WeightMatrix::is_fixed(Index i) const {
  if (i < 0 || i >= dim_) throw Error(ErrorCode::InvalidArgument, "coordinate out of range");
  return fixed_mask_[static_cast<std::size_t>(i)];
}

Vector WeightMatrix::restrict(const Vector& x) const {
  require_same_dim(dim_, x.size(), "restrict");
  Vector out(static_cast<Index>(free_.size()));
  for (std::size_t k = 0; k < free_.size(); ++k) out(static_cast<Index>(k)) = x(free_[k]);
  return out;
}

Vector WeightMatrix::embed(const Vector& xt) const {
  require_same_dim(static_cast<Index>(free_.size()), xt.size(), "embed");
  Vector out = Vector::Zero(dim_);
  for (std::size_t k = 0; k < free_.size(); ++k) out(free_[k]) = xt(static_cast<Index>(k));
  return out;
}

Vector WeightMatrix::apply(const Vector& x) const { return embed(q_ * restrict(x)); }

Vector WeightMatrix::apply_inverse(const Vector& x) const { return embed(q_inv_ * restrict(x)); }

double m_norm(const WeightMatrix& w, const Vector& x) {
  require_same_dim(w.dim(), x.size(), "m_norm");
  for (Index i : w.fixed_coords()) {
    if (std::abs(x(i)) > kFixedTol) return kInfinity;
  }
  const Vector xt = w.restrict(x);
  return std::sqrt(std::max(0.0, xt.dot(w.q() * xt)));
}

double m_dual_norm(const WeightMatrix& w, const Vector& x) {
  require_same_dim(w.dim(), x.size(), "m_dual_norm");
  const Vector xt = w.restrict(x);
  return std::sqrt(std::max(0.0, xt.dot(w.q_inverse() * xt)));
}

Vector project_m_ball(const WeightMatrix& w, const Vector& x, double eps) {
  require_same_dim(w.dim(), x.size(), "project_m_ball");
  if (!(eps >= 0.0)) throw Error(ErrorCode::NonpositiveRadius, "projection radius must be >= 0");
  Vector y = x;
  for (Index i : w.fixed_coords()) y(i) = 0.0;
  const double n = m_norm(w, y);
  if (n <= eps) return y;
  y *= eps / n;
  // rounding can leave the scaled vector a hair outside the ball
  while (m_norm(w, y) > eps) y *= (1.0 - 4.0 * std::numeric_limits<double>::epsilon());
  return y;
}

}  // namespace marti
