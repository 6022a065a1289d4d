// Serial reference vs OpenMP kernels. Args are m, k, n.

#include <benchmark/benchmark.h>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "crossaug/kernels.h"
#include "crossaug/rng.h"

namespace {

namespace k = crossaug::kernels;
using Kernel = void (*)(std::size_t, std::size_t, std::size_t, const double*, const double*,
                        double*);

std::vector<double> filled(std::size_t n, std::uint64_t seed) {
  crossaug::Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

template <Kernel F>
void run(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto kk = static_cast<std::size_t>(state.range(1));
  const auto n = static_cast<std::size_t>(state.range(2));
  // sized for all three layouts (gemm_tn reads B as m x n and writes k x n)
  const std::size_t side = std::max(m, kk) * n;
  const auto a = filled(m * kk, 1), b = filled(side, 2);
  std::vector<double> c(side);
  for (auto _ : state) {
    F(m, kk, n, a.data(), b.data(), c.data());
    benchmark::DoNotOptimize(c.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m * kk * n));
  state.counters["threads"] = k::max_threads();
}

// batch x hidden shapes seen in training, then a large square one
void shapes(benchmark::internal::Benchmark* b) {
  b->Args({32, 64, 256})->Args({256, 64, 256})->Args({32, 128, 5000})->Args({512, 512, 512});
}

BENCHMARK(run<k::serial::gemm_nn>)->Name("gemm_nn/serial")->Apply(shapes);
BENCHMARK(run<k::parallel::gemm_nn>)->Name("gemm_nn/parallel")->Apply(shapes);
BENCHMARK(run<k::serial::gemm_nt>)->Name("gemm_nt/serial")->Apply(shapes);
BENCHMARK(run<k::parallel::gemm_nt>)->Name("gemm_nt/parallel")->Apply(shapes);
BENCHMARK(run<k::serial::gemm_tn>)->Name("gemm_tn/serial")->Apply(shapes);
BENCHMARK(run<k::parallel::gemm_tn>)->Name("gemm_tn/parallel")->Apply(shapes);

}  // namespace

BENCHMARK_MAIN();
