#include "marti/core.hpp"

#include <cmath>
#include <sstream>

namespace marti {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::UnsupportedLoss: return "UnsupportedLoss";
    case ErrorCode::ZeroBeta: return "ZeroBeta";
    case ErrorCode::NonpositiveRho: return "NonpositiveRho";
    case ErrorCode::NonpositiveRadius: return "NonpositiveRadius";
    case ErrorCode::InvalidConstants: return "InvalidConstants";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

namespace {
std::string format_parse(std::size_t line, std::size_t column, const std::string& reason) {
  std::ostringstream os;
  os << "line " << line << ", column " << column << ": " << reason;
  return os.str();
}
}  // namespace

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& reason)
    : Error(ErrorCode::ParseError, format_parse(line, column, reason)),
      line_(line),
      column_(column),
      reason_(reason) {}

void require_same_dim(Index expected, Index got, const char* what) {
  if (expected != got) {
    std::ostringstream os;
    os << what << ": expected dimension " << expected << ", got " << got;
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
}

Dataset::Dataset(Matrix features, std::optional<Vector> targets, std::vector<std::string> names)
    : features_(std::move(features)), targets_(std::move(targets)), names_(std::move(names)) {
  if (features_.rows() < 1 || features_.cols() < 1) {
    throw Error(ErrorCode::InvalidArgument, "dataset needs at least one row and one column");
  }
  if (!features_.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "dataset features contain non-finite entries");
  }
  if (targets_) {
    require_same_dim(features_.rows(), targets_->size(), "dataset targets");
    if (!targets_->allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "dataset targets contain non-finite entries");
    }
  }
}

const Vector& Dataset::targets() const {
  if (!targets_) throw Error(ErrorCode::InvalidArgument, "dataset has no targets");
  return *targets_;
}

Dataset Dataset::subset(const std::vector<Index>& indices) const {
  Matrix f(static_cast<Index>(indices.size()), dim());
  std::optional<Vector> t;
  if (targets_) t = Vector(static_cast<Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const Index i = indices[k];
    if (i < 0 || i >= rows()) throw Error(ErrorCode::InvalidArgument, "subset index out of range");
    f.row(static_cast<Index>(k)) = features_.row(i);
    if (t) (*t)(static_cast<Index>(k)) = (*targets_)(i);
  }
  return Dataset(std::move(f), std::move(t), names_);
}

bool operator==(const Dataset& a, const Dataset& b) {
  if (a.features_.rows() != b.features_.rows() || a.features_.cols() != b.features_.cols()) {
    return false;
  }
  if (a.features_ != b.features_) return false;
  if (a.targets_.has_value() != b.targets_.has_value()) return false;
  if (a.targets_ && *a.targets_ != *b.targets_) return false;
  return true;
}

LossSpec LossSpec::quadratic(double gamma, double shift) {
  if (!(gamma > 0.0) || !std::isfinite(gamma) || !std::isfinite(shift)) {
    throw Error(ErrorCode::InvalidArgument, "quadratic loss needs finite gamma > 0");
  }
  return LossSpec(Kind::Quadratic, gamma, shift);
}

LossSpec LossSpec::logistic() { return LossSpec(Kind::Logistic, 0.0, 0.0); }

double LossSpec::eval(double t) const noexcept {
  if (kind_ == Kind::Quadratic) {
    const double r = t - shift_;
    return 0.5 * gamma_ * r * r;
  }
  // log(1 + e^{-t}) without overflow for either sign of t
  if (t >= 0.0) return std::log1p(std::exp(-t));
  return -t + std::log1p(std::exp(t));
}

double LossSpec::grad(double t) const noexcept {
  if (kind_ == Kind::Quadratic) return gamma_ * (t - shift_);
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return -e / (1.0 + e);
  }
  return -1.0 / (1.0 + std::exp(t));
}

double LossSpec::hess(double t) const noexcept {
  if (kind_ == Kind::Quadratic) return gamma_;
  const double e = std::exp(-std::abs(t));
  return e / ((1.0 + e) * (1.0 + e));
}

double LossSpec::smoothness() const noexcept {
  return kind_ == Kind::Quadratic ? gamma_ : 0.25;
}

void RobustnessConfig::validate() const {
  if (!(rho >= 0.0) || !std::isfinite(rho)) {
    throw Error(ErrorCode::NonpositiveRho, "rho must be finite and nonnegative");
  }
  if (!(epsilon >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "epsilon must be nonnegative or infinity");
  }
}

ModelParams ModelParams::from_coefficients(const Vector& b) {
  ModelParams p;
  p.beta.resize(b.size() + 1);
  p.beta(0) = 1.0;
  p.beta.tail(b.size()) = -b;
  return p;
}

Vector ModelParams::coefficients() const {
  if (beta.size() < 1) throw Error(ErrorCode::DimensionMismatch, "empty parameter vector");
  return -beta.tail(beta.size() - 1);
}

}  // namespace marti
