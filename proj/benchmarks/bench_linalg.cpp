#include <benchmark/benchmark.h>

#include "varbench/clip_confidence.h"
#include "varbench/linalg.h"
#include "varbench/rng.h"

namespace vb = varbench;

namespace {

vb::SpdMatrix gram(int d, int n, vb::Rng& rng) {
  vb::SpdMatrix m = vb::SpdMatrix::identity(d);
  for (int i = 0; i < n; ++i) m = vb::rank_one_update(m, vb::sample_ball(d, 1.0, rng), 1.0);
  return m;
}

void BM_RankOneUpdate(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  vb::Rng rng(1);
  vb::SpdMatrix m = gram(d, 10, rng);
  const vb::FeatureVector x = vb::sample_ball(d, 1.0, rng);
  for (auto _ : state) {
    m = vb::rank_one_update(m, x, 0.5);
    benchmark::DoNotOptimize(m);
  }
}
BENCHMARK(BM_RankOneUpdate)->Arg(2)->Arg(5)->Arg(16);

void BM_InvWeightedNorm(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  vb::Rng rng(2);
  const vb::SpdMatrix m = gram(d, 50, rng);
  const vb::FeatureVector x = vb::sample_ball(d, 1.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(vb::inv_weighted_norm_sq(x, m));
}
BENCHMARK(BM_InvWeightedNorm)->Arg(2)->Arg(5)->Arg(16);

void BM_LogDet(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  vb::Rng rng(3);
  const vb::SpdMatrix m = gram(d, 50, rng);
  for (auto _ : state) benchmark::DoNotOptimize(vb::log_det(m));
}
BENCHMARK(BM_LogDet)->Arg(2)->Arg(5)->Arg(16);

}  // namespace
