#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace marti {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class ErrorCode {
  DimensionMismatch,
  InvalidArgument,
  DegenerateInput,
  UnsupportedLoss,
  ZeroBeta,
  NonpositiveRho,
  NonpositiveRadius,
  InvalidConstants,
  ParseError,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Malformed input text; line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& reason);
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string reason_;
};

void require_same_dim(Index expected, Index got, const char* what);

/// Samples X_1..X_N stored row-wise, with optional per-row targets.
///
/// Immutable after construction. Rejects empty shapes and non-finite entries.
class Dataset {
 public:
  explicit Dataset(Matrix features, std::optional<Vector> targets = std::nullopt,
                   std::vector<std::string> names = {});

  Index rows() const noexcept { return features_.rows(); }
  Index dim() const noexcept { return features_.cols(); }
  const Matrix& features() const noexcept { return features_; }
  bool has_targets() const noexcept { return targets_.has_value(); }
  const Vector& targets() const;
  const std::vector<std::string>& names() const noexcept { return names_; }

  Vector row(Index i) const { return features_.row(i).transpose(); }

  Dataset subset(const std::vector<Index>& indices) const;

  friend bool operator==(const Dataset& a, const Dataset& b);

 private:
  Matrix features_;
  std::optional<Vector> targets_;
  std::vector<std::string> names_;
};

/// Either a quadratic (gamma/2)(t - shift)^2 or the logistic log(1 + exp(-t)).
class LossSpec {
 public:
  enum class Kind { Quadratic, Logistic };

  static LossSpec quadratic(double gamma, double shift = 0.0);
  static LossSpec logistic();

  Kind kind() const noexcept { return kind_; }
  bool is_quadratic() const noexcept { return kind_ == Kind::Quadratic; }
  double gamma() const noexcept { return gamma_; }
  double shift() const noexcept { return shift_; }

  double eval(double t) const noexcept;
  double grad(double t) const noexcept;
  double hess(double t) const noexcept;
  /// Global upper bound on the second derivative (gamma, or 1/4 for logistic).
  double smoothness() const noexcept;

 private:
  LossSpec(Kind kind, double gamma, double shift) : kind_(kind), gamma_(gamma), shift_(shift) {}

  Kind kind_;
  double gamma_;
  double shift_;
};

inline double loss_eval(const LossSpec& loss, double t) noexcept { return loss.eval(t); }
inline double loss_grad(const LossSpec& loss, double t) noexcept { return loss.grad(t); }

/// Transport budget rho, martingale violation epsilon (may be kInfinity) and loss.
struct RobustnessConfig {
  double rho = 0.0;
  double epsilon = 0.0;
  LossSpec loss = LossSpec::quadratic(2.0);

  void validate() const;
};

struct ModelParams {
  Vector beta;

  /// beta = (1, -b) for the response-first regression encoding.
  static ModelParams from_coefficients(const Vector& b);
  /// Inverse of from_coefficients; drops the leading response weight.
  Vector coefficients() const;
};

}  // namespace marti
