#include "marti/dual.hpp"
#include "marti/mlp.hpp"
#include "marti/objectives.hpp"
#include "marti/regpath.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace marti;

namespace {

Matrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  }
  return m;
}

void BM_SolveS(benchmark::State& state) {
  const Index n = state.range(0);
  const Vector y = gaussian_matrix(n, 1, 1).col(0);
  // b/a between ||y||_2/||y||_inf and sqrt(n) keeps every size in the sorted middle regime.
  const double lo = y.norm() / y.cwiseAbs().maxCoeff();
  const double a = 1.0;
  const double b = std::sqrt(lo * std::sqrt(static_cast<double>(n)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_s_subproblem(y, a, b).value);
  state.SetComplexityN(n);
}
BENCHMARK(BM_SolveS)->RangeMultiplier(4)->Range(16, 16384)->Complexity(benchmark::oNLogN);

void BM_PerturbedValue(benchmark::State& state) {
  const Index n = state.range(0);
  const Dataset data(gaussian_matrix(n, 14, 2));
  const WeightMatrix w = WeightMatrix::response_fixed(Matrix::Identity(13, 13));
  const ModelParams beta{gaussian_matrix(14, 1, 3).col(0)};
  RobustnessConfig cfg;
  cfg.rho = 0.08;
  cfg.epsilon = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(perturbed_value(beta, data, w, cfg).total);
  state.SetComplexityN(n);
}
BENCHMARK(BM_PerturbedValue)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

void BM_DualValue(benchmark::State& state) {
  const Index n = state.range(0);
  const Dataset data(gaussian_matrix(n, 3, 4));
  const WeightMatrix w = WeightMatrix::identity(3);
  const ModelParams beta{gaussian_matrix(3, 1, 5).col(0)};
  RobustnessConfig cfg;
  cfg.rho = 0.3;
  cfg.epsilon = 0.5;
  if (state.range(1) == 1) cfg.loss = LossSpec::logistic();
  for (auto _ : state) benchmark::DoNotOptimize(dual_value(beta, data, w, cfg).value);
}
BENCHMARK(BM_DualValue)->ArgsProduct({{5, 50}, {0, 1}})->ArgNames({"n", "logistic"});

void BM_MlpForwardBackward(benchmark::State& state) {
  const Mlp net({2, 4, 3, 2, 2}, 6);
  const Vector x = gaussian_matrix(2, 1, 7).col(0);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward_backward(x, 1).loss);
}
BENCHMARK(BM_MlpForwardBackward);

}  // namespace

BENCHMARK_MAIN();
