#include <benchmark/benchmark.h>

#include <cmath>

#include "hetbai/simulator.hpp"

namespace {

void BM_Episode(benchmark::State& state) {
  const auto v = hetbai::gen_overlap_instance(static_cast<int>(state.range(0)), 11);
  const auto policy = state.range(1) == 0 ? hetbai::Policy::kHetTs : hetbai::Policy::kUniform;
  std::uint64_t seed = 0;
  std::int64_t steps = 0;
  for (auto _ : state) {
    const auto r = hetbai::run_episode(v, policy, std::exp(-10.0), 0.01, seed++);
    steps += r.tau;
  }
  state.counters["steps"] = benchmark::Counter(static_cast<double>(steps), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Episode)->ArgsProduct({{1, 2, 4}, {0, 1}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
