#include <benchmark/benchmark.h>

#include "varbench/epc.h"

namespace vb = varbench;

namespace {

void BM_CountExceedancesRandom(benchmark::State& state) {
  const auto inst = vb::random_unit(static_cast<int>(state.range(0)), 1.0, 0.5,
                                    static_cast<std::size_t>(state.range(1)), 7);
  for (auto _ : state) benchmark::DoNotOptimize(vb::count_exceedances(inst).count);
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_CountExceedancesRandom)->Args({2, 1000})->Args({5, 1000})->Args({5, 10000});

void BM_GreedyAdversary(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(vb::greedy_adversary(static_cast<int>(state.range(0)), 1.0, 0.5,
                                                  static_cast<std::size_t>(state.range(1))));
  }
}
BENCHMARK(BM_GreedyAdversary)->Args({3, 1000})->Args({5, 1000});

void BM_DetTraceChain(benchmark::State& state) {
  const auto inst = vb::random_unit(4, 0.25, 0.1, 1000, 9);
  for (auto _ : state) benchmark::DoNotOptimize(vb::check_det_trace_chain(inst).ok);
}
BENCHMARK(BM_DetTraceChain);

}  // namespace
