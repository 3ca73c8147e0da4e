// Serial reference kernels against the OpenMP versions.
#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>
#include <vector>

#include "ghrl/env/environment.hpp"
#include "ghrl/nn/kernels.hpp"
#include "ghrl/nn/mlp.hpp"
#include "ghrl/oracle/oracle.hpp"

using namespace ghrl;

namespace {

std::vector<double> random_vec(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

// args: m (batch), n = k (layer width)
template <bool Parallel>
void BM_gemm(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto a = random_vec(m * n, 1), b = random_vec(n * n, 2);
  std::vector<double> c(m * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      nn::kernels::gemm(m, n, n, a.data(), b.data(), c.data(), false);
    } else {
      nn::kernels::reference::gemm(m, n, n, a.data(), b.data(), c.data(), false);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["FLOP/s"] = benchmark::Counter(2.0 * m * n * n, benchmark::Counter::kIsIterationInvariantRate,
                                                 benchmark::Counter::kIs1000);
  state.counters["threads"] = Parallel ? omp_get_max_threads() : 1;
}

void BM_mlp_forward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  nn::Mlp net(nn::layer_sizes(env::kObsSize, 512, 4, env::kNumActions));
  std::mt19937_64 rng(3);
  nn::init_orthogonal(net, 1.4142135623730951, 0.01, rng);
  nn::Matrix x(batch, env::kObsSize);
  const auto v = random_vec(x.size(), 4);
  std::copy(v.begin(), v.end(), x.data());
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch));
}

template <bool Parallel>
void BM_table_build(benchmark::State& state) {
  const climate::ModelParams params;
  const oracle::GridSpec spec;
  for (auto _ : state) {
    auto t = Parallel ? oracle::build_optimal_table(params, spec) : oracle::reference::build_optimal_table(params, spec);
    benchmark::DoNotOptimize(t);
  }
}

}  // namespace

BENCHMARK(BM_gemm<false>)->Name("gemm/reference")->Args({256, 512})->Args({2048, 512})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_gemm<true>)->Name("gemm/openmp")->Args({256, 512})->Args({2048, 512})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mlp_forward)->Arg(1)->Arg(256)->Arg(2048)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_table_build<false>)->Name("optimal_table/reference")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_table_build<true>)->Name("optimal_table/openmp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
