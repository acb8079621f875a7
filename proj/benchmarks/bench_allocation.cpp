#include <benchmark/benchmark.h>

#include "hetbai/allocation.hpp"
#include "hetbai/instance.hpp"
#include "hetbai/policy.hpp"

namespace {

void BM_Solve(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const auto v = hetbai::gen_cyclic_instance(k, k, 3, 1);
  for (auto _ : state) benchmark::DoNotOptimize(hetbai::solve(v));
}
BENCHMARK(BM_Solve)->Arg(5)->Arg(20)->Arg(80);

void BM_ServerGlobalVector(benchmark::State& state) {
  const auto v = hetbai::gen_overlap_instance(static_cast<int>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(hetbai::server_global_vector(v));
}
BENCHMARK(BM_ServerGlobalVector)->DenseRange(1, 4);

void BM_ZStatistic(benchmark::State& state) {
  const auto v = hetbai::gen_overlap_instance(4, 3);
  std::vector<std::vector<std::int64_t>> counts(5, std::vector<std::int64_t>(5, 100));
  for (auto _ : state) benchmark::DoNotOptimize(hetbai::z_statistic(v, counts));
}
BENCHMARK(BM_ZStatistic);

void BM_FInverse(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(hetbai::f_inverse(1e-10, k));
}
BENCHMARK(BM_FInverse)->Arg(2)->Arg(25);

}  // namespace

BENCHMARK_MAIN();
