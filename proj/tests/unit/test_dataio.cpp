#include "instances.hpp"

#include <doctest.h>

#include "marti/dataio.hpp"

#include <set>
#include <sstream>

using namespace marti;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_libsvm(in);
}

void expect_parse_error(const std::string& text, std::size_t line, std::size_t column) {
  try {
    parse(text);
    FAIL("expected a parse error for: " << text);
  } catch (const ParseError& e) {
    CHECK(e.line() == line);
    CHECK(e.column() == column);
  }
}

}  // namespace

TEST_CASE("LIBSVM format examples") {
  const Dataset d = parse("1.5 1:2 3:-1\n");
  CHECK(d.rows() == 1);
  CHECK(d.dim() == 3);
  CHECK(d.targets()(0) == 1.5);
  CHECK(d.row(0) == (Vector(3) << 2, 0, -1).finished());

  const Dataset e = parse("# header\n0.0\n\n2 2:1 # trailing\n");
  CHECK(e.rows() == 2);
  CHECK(e.row(0).isZero(0.0));
  CHECK(e.row(1)(1) == 1.0);
  CHECK(parse("+1 1:+3\n").targets()(0) == 1.0);
}

TEST_CASE("LIBSVM parse errors carry line and column") {
  expect_parse_error("1 1:2\n1 2:1 1:3\n", 2, 7);
  expect_parse_error("1 1:2\nx 1:1\n", 2, 1);
  expect_parse_error("1 0:2\n", 1, 3);
  expect_parse_error("1 1:nan\n", 1, 5);
  expect_parse_error("1 1:inf\n", 1, 5);
  expect_parse_error("1 1:2.5abc\n", 1, 5);
  expect_parse_error("1 12\n", 1, 3);
  expect_parse_error("1 a:2\n", 1, 3);
  expect_parse_error("1 1:2 2:2 2:3\n", 1, 11);
  expect_parse_error("", 1, 1);
}

TEST_CASE("LIBSVM round trip") {
  std::mt19937_64 rng(111);
  Matrix x = Matrix::Zero(20, 6);
  for (Index i = 0; i < 20; ++i) {
    for (Index j = 0; j < 6; ++j) {
      if (rng() % 3 == 0) x(i, j) = testing::gaussian(rng, 1)(0) * 1e3;
    }
  }
  x.col(5).setZero();
  const Dataset d(x, testing::gaussian(rng, 20));
  std::stringstream ss;
  write_libsvm(ss, d);
  const Dataset back = parse(ss.str());
  CHECK(back == d);
  std::stringstream again;
  write_libsvm(again, back);
  CHECK(again.str() == ss.str());
}

TEST_CASE("CSV emission") {
  const Dataset d((Matrix(2, 2) << 1, 2, 3, 4).finished(), Vector::Ones(2));
  std::stringstream ss;
  write_csv(ss, d);
  CHECK(ss.str() == "y,x1,x2\n1,1,2\n1,3,4\n");
}

TEST_CASE("two-ring generator") {
  const double eta = 1.6;
  const Dataset d = gen_two_ring(4000, eta, 3);
  for (Index i = 0; i < d.rows(); ++i) {
    const double r = d.row(i).norm();
    CHECK((r <= std::sqrt(2.0) / eta || r >= eta * std::sqrt(2.0)));
    CHECK(d.targets()(i) == (r > std::sqrt(2.0) ? 1.0 : -1.0));
  }
  const double p = two_ring_retention(eta);
  const double se = std::sqrt(p * (1 - p) / 4000.0);
  CHECK(std::abs(static_cast<double>(d.rows()) / 4000.0 - p) <= 3.0 * se);
  CHECK(gen_two_ring(100, eta, 3) == gen_two_ring(100, eta, 3));
  CHECK_THROWS_AS(gen_two_ring(100, 1.0, 3), Error);
}

TEST_CASE("split") {
  const Dataset d(Matrix::Identity(10, 10), Vector::LinSpaced(10, 0, 9));
  const auto [tr, te] = split(d, {0.6, 4});
  CHECK(tr.rows() == 6);
  CHECK(te.rows() == 4);
  std::set<double> seen;
  for (Index i = 0; i < tr.rows(); ++i) seen.insert(tr.targets()(i));
  for (Index i = 0; i < te.rows(); ++i) seen.insert(te.targets()(i));
  CHECK(seen.size() == 10);
  const auto [tr2, te2] = split(d, {0.6, 4});
  CHECK(tr2 == tr);
  CHECK(te2 == te);
  CHECK_THROWS_AS(split(d, {1.0, 0}), Error);
  CHECK_THROWS_AS(split(Dataset(Matrix::Ones(1, 1)), {0.5, 0}), Error);
}

TEST_CASE("standardizer fits on train and applies to test") {
  const Dataset raw = gen_linear_regression(100, 3, 5);
  const auto [tr, te] = split(raw, {0.6, 1});
  const Standardizer s = Standardizer::fit(tr);
  const Dataset trs = s.transform(tr);
  CHECK(trs.features().colwise().mean().norm() <= 1e-12);
  for (Index j = 0; j < 3; ++j) {
    CHECK(std::sqrt(trs.features().col(j).squaredNorm() / 60.0) == doctest::Approx(1.0));
  }
  CHECK(s.transform(te).rows() == te.rows());
}

TEST_CASE("regression encoding puts the response first") {
  const Dataset raw((Matrix(2, 2) << 1, 2, 3, 4).finished(), (Vector(2) << 9, 8).finished());
  const Dataset enc = encode_regression(raw);
  CHECK(enc.dim() == 3);
  CHECK(enc.row(1) == (Vector(3) << 8, 3, 4).finished());
  CHECK_FALSE(enc.has_targets());
}

TEST_CASE("bundled data matches its generator") {
  const Dataset bundled = read_libsvm(std::string(MARTI_DATA_DIR) + "/housing_synth.libsvm");
  CHECK(bundled == gen_linear_regression(506, 13, 20240901));
}
