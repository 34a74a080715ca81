#pragma once

#include "marti/core.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>

namespace marti {

/// Reads `label idx:val idx:val ...` lines (1-based strictly increasing indices,
/// `#` starts a comment, blank lines skipped). d is the largest index seen, or
/// min_dim if larger. Throws ParseError on anything it cannot consume.
Dataset parse_libsvm(std::istream& in, Index min_dim = 0);
Dataset read_libsvm(const std::string& path, Index min_dim = 0);

/// Writes nonzero features plus the last coordinate, so the dimension survives
/// a round trip. Values use shortest round-trip formatting.
void write_libsvm(std::ostream& out, const Dataset& data);
void write_libsvm(const std::string& path, const Dataset& data);

/// Shortest decimal text that parses back to exactly v.
std::string format_double(double v);

/// Header `y,x1,...,xd` (or `x1,...` without targets) and one row per sample.
void write_csv(std::ostream& out, const Dataset& data);

/// Z_j ~ N(0, I_2), j < n_raw, keeping ||Z_j|| outside (sqrt(2)/eta, eta sqrt(2));
/// targets sign(||Z|| - sqrt(2)).
Dataset gen_two_ring(Index n_raw, double eta, std::uint64_t seed);

/// P(||Z|| outside the annulus) for Z ~ N(0, I_2).
double two_ring_retention(double eta);

/// Housing-style synthetic regression: correlated Gaussian features with a few
/// skewed columns, a sparse-ish linear signal plus a mild nonlinearity, and
/// heteroscedastic noise. Targets hold the response.
Dataset gen_linear_regression(Index n, Index d, std::uint64_t seed, double noise = 1.5);

struct SplitSpec {
  double train_fraction = 0.6;
  std::uint64_t seed = 0;
};

/// Seeded shuffle, then the first round(fraction * N) rows (clamped to [1, N-1]) train.
std::pair<Dataset, Dataset> split(const Dataset& data, const SplitSpec& spec);

/// Per-column standardization fitted on one set and applied to others.
/// Constant columns keep unit scale. Targets are standardized too when present.
class Standardizer {
 public:
  static Standardizer fit(const Dataset& data);
  Dataset transform(const Dataset& data) const;

  const Vector& mean() const noexcept { return mean_; }
  const Vector& scale() const noexcept { return scale_; }

 private:
  Vector mean_, scale_;
  double y_mean_ = 0.0, y_scale_ = 1.0;
  bool has_targets_ = false;
};

/// X = (Y, Z): response in column 0 followed by the features.
Dataset encode_regression(const Dataset& data);

}  // namespace marti
