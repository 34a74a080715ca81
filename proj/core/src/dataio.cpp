#include "marti/dataio.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <vector>

namespace marti {

namespace {

struct Row {
  double label;
  std::vector<std::pair<Index, double>> entries;
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

double parse_number(const std::string& line, std::size_t lineno, std::size_t begin,
                    std::size_t end, const char* what) {
  double v = 0.0;
  const char* first = line.data() + begin;
  const char* last = line.data() + end;
  // from_chars rejects a leading '+', which LIBSVM files sometimes carry.
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || first == last) {
    throw ParseError(lineno, begin + 1, std::string("malformed ") + what);
  }
  if (!std::isfinite(v)) throw ParseError(lineno, begin + 1, std::string("non-finite ") + what);
  return v;
}

Row parse_line(const std::string& line, std::size_t lineno, bool& empty) {
  std::size_t end = line.find('#');
  if (end == std::string::npos) end = line.size();
  std::size_t pos = 0;
  auto skip = [&] {
    while (pos < end && is_space(line[pos])) ++pos;
  };
  auto token_end = [&] {
    std::size_t e = pos;
    while (e < end && !is_space(line[e])) ++e;
    return e;
  };
  skip();
  empty = pos == end;
  Row row{0.0, {}};
  if (empty) return row;

  std::size_t te = token_end();
  row.label = parse_number(line, lineno, pos, te, "label");
  pos = te;
  Index prev = 0;
  for (skip(); pos < end; skip()) {
    te = token_end();
    const std::size_t colon = line.find(':', pos);
    if (colon == std::string::npos || colon >= te) throw ParseError(lineno, pos + 1, "expected idx:val");
    long long idx = 0;
    const auto res = std::from_chars(line.data() + pos, line.data() + colon, idx);
    if (res.ec != std::errc() || res.ptr != line.data() + colon || colon == pos) {
      throw ParseError(lineno, pos + 1, "malformed index");
    }
    if (idx < 1) throw ParseError(lineno, pos + 1, "index must be >= 1");
    if (idx <= prev) throw ParseError(lineno, pos + 1, "indices must be strictly increasing");
    const double v = parse_number(line, lineno, colon + 1, te, "value");
    row.entries.emplace_back(static_cast<Index>(idx), v);
    prev = static_cast<Index>(idx);
    pos = te;
  }
  return row;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Dataset parse_libsvm(std::istream& in, Index min_dim) {
  std::vector<Row> rows;
  Index d = std::max<Index>(min_dim, 0);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    bool empty = false;
    Row row = parse_line(line, lineno, empty);
    if (empty) continue;
    if (!row.entries.empty()) d = std::max(d, row.entries.back().first);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(lineno + 1, 1, "no samples");
  if (d == 0) d = 1;
  Matrix x = Matrix::Zero(static_cast<Index>(rows.size()), d);
  Vector y(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Index>(i);
    y(r) = rows[i].label;
    for (const auto& [idx, v] : rows[i].entries) x(r, idx - 1) = v;
  }
  return Dataset(std::move(x), std::move(y));
}

Dataset read_libsvm(const std::string& path, Index min_dim) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  return parse_libsvm(in, min_dim);
}

void write_libsvm(std::ostream& out, const Dataset& data) {
  for (Index i = 0; i < data.rows(); ++i) {
    out << format_double(data.has_targets() ? data.targets()(i) : 0.0);
    for (Index j = 0; j < data.dim(); ++j) {
      const double v = data.features()(i, j);
      if (v != 0.0 || j + 1 == data.dim()) out << ' ' << (j + 1) << ':' << format_double(v);
    }
    out << '\n';
  }
}

void write_libsvm(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  write_libsvm(out, data);
}

void write_csv(std::ostream& out, const Dataset& data) {
  bool first = true;
  if (data.has_targets()) {
    out << 'y';
    first = false;
  }
  for (Index j = 0; j < data.dim(); ++j) {
    if (!first) out << ',';
    out << 'x' << (j + 1);
    first = false;
  }
  out << '\n';
  for (Index i = 0; i < data.rows(); ++i) {
    first = true;
    if (data.has_targets()) {
      out << format_double(data.targets()(i));
      first = false;
    }
    for (Index j = 0; j < data.dim(); ++j) {
      if (!first) out << ',';
      out << format_double(data.features()(i, j));
      first = false;
    }
    out << '\n';
  }
}

Dataset gen_two_ring(Index n_raw, double eta, std::uint64_t seed) {
  if (!(eta > 1.0)) throw Error(ErrorCode::InvalidArgument, "two-ring eta must exceed 1");
  if (n_raw < 1) throw Error(ErrorCode::InvalidArgument, "two-ring needs n_raw >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double inner = std::sqrt(2.0) / eta;
  const double outer = eta * std::sqrt(2.0);
  std::vector<std::array<double, 2>> kept;
  for (Index j = 0; j < n_raw; ++j) {
    const double a = normal(rng);
    const double b = normal(rng);
    const double r = std::hypot(a, b);
    if (r > inner && r < outer) continue;
    kept.push_back({a, b});
  }
  if (kept.empty()) throw Error(ErrorCode::DegenerateInput, "two-ring generator kept no points");
  Matrix x(static_cast<Index>(kept.size()), 2);
  Vector y(static_cast<Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto r = static_cast<Index>(i);
    x(r, 0) = kept[i][0];
    x(r, 1) = kept[i][1];
    y(r) = std::hypot(kept[i][0], kept[i][1]) > std::sqrt(2.0) ? 1.0 : -1.0;
  }
  return Dataset(std::move(x), std::move(y));
}

double two_ring_retention(double eta) {
  // ||Z||^2 ~ chi-square(2), so P(||Z|| <= r) = 1 - exp(-r^2 / 2).
  return 1.0 - std::exp(-1.0 / (eta * eta)) + std::exp(-eta * eta);
}

Dataset gen_linear_regression(Index n, Index d, std::uint64_t seed, double noise) {
  if (n < 2 || d < 1) throw Error(ErrorCode::InvalidArgument, "regression generator shape");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  // Features share a common factor, giving the collinearity typical of tabular data.
  Matrix z(n, d);
  for (Index i = 0; i < n; ++i) {
    const double common = normal(rng);
    for (Index j = 0; j < d; ++j) {
      double v = 0.6 * common + 0.8 * normal(rng);
      if (j % 4 == 3) v = std::exp(0.5 * v) - 1.0;
      z(i, j) = v;
    }
  }
  Vector coef(d);
  for (Index j = 0; j < d; ++j) {
    coef(j) = (j % 3 == 0 ? 2.0 : (j % 3 == 1 ? -1.0 : 0.3)) * normal(rng) * 0.5 +
              (j % 2 == 0 ? 1.0 : -0.5);
  }
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    const double signal = z.row(i).dot(coef) + 0.3 * std::tanh(z(i, 0) * z(i, std::min<Index>(1, d - 1)));
    y(i) = signal + noise * (1.0 + 0.5 * std::fabs(z(i, 0))) * normal(rng);
  }
  return Dataset(std::move(z), std::move(y));
}

std::pair<Dataset, Dataset> split(const Dataset& data, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "train_fraction must lie in (0, 1)");
  }
  const Index n = data.rows();
  if (n < 2) throw Error(ErrorCode::DegenerateInput, "split needs N >= 2");
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::mt19937_64 rng(spec.seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  auto n_train = static_cast<Index>(std::llround(spec.train_fraction * static_cast<double>(n)));
  n_train = std::clamp<Index>(n_train, 1, n - 1);
  std::vector<Index> tr(idx.begin(), idx.begin() + n_train);
  std::vector<Index> te(idx.begin() + n_train, idx.end());
  return {data.subset(tr), data.subset(te)};
}

Standardizer Standardizer::fit(const Dataset& data) {
  Standardizer s;
  const Matrix& x = data.features();
  const auto n = static_cast<double>(x.rows());
  s.mean_ = x.colwise().mean().transpose();
  s.scale_.resize(x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean_(j)).square().sum() / n;
    s.scale_(j) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  if (data.has_targets()) {
    const Vector& y = data.targets();
    s.has_targets_ = true;
    s.y_mean_ = y.mean();
    const double var = (y.array() - s.y_mean_).square().sum() / n;
    s.y_scale_ = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Dataset Standardizer::transform(const Dataset& data) const {
  require_same_dim(mean_.size(), data.dim(), "standardizer");
  Matrix x = (data.features().rowwise() - mean_.transpose()).array().rowwise() /
             scale_.transpose().array();
  std::optional<Vector> y;
  if (data.has_targets()) {
    y = has_targets_ ? Vector((data.targets().array() - y_mean_) / y_scale_) : data.targets();
  }
  return Dataset(std::move(x), std::move(y), data.names());
}

Dataset encode_regression(const Dataset& data) {
  if (!data.has_targets()) throw Error(ErrorCode::InvalidArgument, "regression needs targets");
  Matrix x(data.rows(), data.dim() + 1);
  x.col(0) = data.targets();
  x.rightCols(data.dim()) = data.features();
  return Dataset(std::move(x));
}

}  // namespace marti
