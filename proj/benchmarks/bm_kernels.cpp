#include <benchmark/benchmark.h>

#include <random>

#include "rnngraph/kernels.hpp"
#include "rnngraph/thread_pool.hpp"

using namespace rnngraph;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(rows, cols);
  for (auto& v : m.values()) v = u(rng);
  return m;
}

}  // namespace

// W (n x n) times a batch of n x cols activations, as in one dense connection.
static void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto cols = static_cast<std::size_t>(state.range(1));
  const auto threads = static_cast<std::size_t>(state.range(2));
  const Matrix a = random_matrix(n, n, 1);
  const Matrix b = random_matrix(n, cols, 2);
  Matrix c(n, cols);
  ThreadPool pool(threads);
  for (auto _ : state) {
    c.fill(0.0);
    gemm(a.view(), Transpose::kNo, b.view(), c.view(), threads > 1 ? &pool : nullptr);
    benchmark::DoNotOptimize(c.values().data());
  }
  state.counters["FLOPS"] = benchmark::Counter(2.0 * n * n * cols, benchmark::Counter::kIsIterationInvariantRate,
                                                benchmark::Counter::kIs1000);
}
BENCHMARK(BM_Gemm)
    ->ArgsProduct({{64, 256}, {1, 16, 256}, {1, 4}})
    ->Unit(benchmark::kMicrosecond);

// Gradient accumulation: c += a * b^T over a batch.
static void BM_GemmNT(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto cols = static_cast<std::size_t>(state.range(1));
  const Matrix a = random_matrix(n, cols, 3);
  const Matrix b = random_matrix(n, cols, 4);
  Matrix c(n, n);
  for (auto _ : state) {
    gemm_nt(a.view(), b.view(), c.view());
    benchmark::DoNotOptimize(c.values().data());
  }
}
BENCHMARK(BM_GemmNT)->ArgsProduct({{64, 256}, {16, 256}})->Unit(benchmark::kMicrosecond);

static void BM_Softmax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix s = random_matrix(n, 64, 5);
  Matrix y = s;
  for (auto _ : state) {
    copy(s.view(), y.view());
    apply_activation(Activation::kSoftmax, y.view());
    benchmark::DoNotOptimize(y.values().data());
  }
}
BENCHMARK(BM_Softmax)->Arg(128)->Arg(4096);

BENCHMARK_MAIN();
