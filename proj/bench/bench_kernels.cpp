// Parallel kernels against their serial references, at the sizes of the
// simulated designs (n = 1000, grid 100) and of the energy design (n = 136,
// 24 curves of 144 points).

#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "mflm/kernels.hpp"

namespace {

using namespace mflm;

Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols) {
  std::srand(7);
  return Eigen::MatrixXd::Random(rows, cols);
}

void BM_TransposeApply(benchmark::State& state) {
  const auto X = matrix(state.range(0), state.range(1));
  const Eigen::VectorXd r = Eigen::VectorXd::Random(X.rows());
  Eigen::VectorXd out(X.cols());
  for (auto _ : state) {
    kernels::transpose_apply(X, r, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_TransposeApplyReference(benchmark::State& state) {
  const auto X = matrix(state.range(0), state.range(1));
  const Eigen::VectorXd r = Eigen::VectorXd::Random(X.rows());
  Eigen::VectorXd out(X.cols());
  for (auto _ : state) {
    kernels::reference::transpose_apply(X, r, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_ApplyAdd(benchmark::State& state) {
  const auto X = matrix(state.range(0), state.range(1));
  const Eigen::VectorXd c = Eigen::VectorXd::Random(X.cols());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  for (auto _ : state) {
    kernels::apply_add(X, c, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_ApplyAddReference(benchmark::State& state) {
  const auto X = matrix(state.range(0), state.range(1));
  const Eigen::VectorXd c = Eigen::VectorXd::Random(X.cols());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  for (auto _ : state) {
    kernels::reference::apply_add(X, c, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_WeightedGram(benchmark::State& state) {
  const auto X = matrix(state.range(0), state.range(1));
  const Eigen::VectorXd w = Eigen::VectorXd::Random(X.cols()).cwiseAbs();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::weighted_gram(X, w).data());
}

void BM_WeightedGramReference(benchmark::State& state) {
  const auto X = matrix(state.range(0), state.range(1));
  const Eigen::VectorXd w = Eigen::VectorXd::Random(X.cols()).cwiseAbs();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::weighted_gram(X, w).data());
}

void BM_CrossProduct(benchmark::State& state) {
  const auto X = matrix(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::cross_product(X, X).data());
}

void BM_CrossProductReference(benchmark::State& state) {
  const auto X = matrix(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::reference::cross_product(X, X).data());
}

}  // namespace

BENCHMARK(BM_TransposeApply)->Args({1000, 307})->Args({136, 3456});
BENCHMARK(BM_TransposeApplyReference)->Args({1000, 307})->Args({136, 3456});
BENCHMARK(BM_ApplyAdd)->Args({1000, 307})->Args({136, 3456});
BENCHMARK(BM_ApplyAddReference)->Args({1000, 307})->Args({136, 3456});
BENCHMARK(BM_WeightedGram)->Args({1000, 100})->Args({136, 144});
BENCHMARK(BM_WeightedGramReference)->Args({1000, 100})->Args({136, 144});
BENCHMARK(BM_CrossProduct)->Args({1000, 307})->Args({136, 144});
BENCHMARK(BM_CrossProductReference)->Args({1000, 307})->Args({136, 144});

BENCHMARK_MAIN();
