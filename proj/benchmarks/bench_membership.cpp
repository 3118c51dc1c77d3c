#include <memory>
#include <vector>

#include <benchmark/benchmark.h>

#include "varbench/clip_confidence.h"
#include "varbench/rng.h"
#include "varbench/varlin2.h"
#include "varbench/voful2.h"

namespace vb = varbench;

namespace {

// History of n noisy pulls of random arms against theta.
vb::BanditHistory bandit_history(const vb::FeatureVector& theta, int n, double mu_xi, int levels) {
  const int d = theta.dim();
  auto net = std::make_shared<const vb::EpsNet>(vb::build_net(d, 2.0, mu_xi));
  vb::BanditHistory h(net, levels);
  vb::Rng rng(5);
  for (int i = 0; i < n; ++i) {
    const vb::FeatureVector x = vb::sample_ball(d, 1.0, rng);
    h.append(x, x.dot(theta) + 0.1 * rng.rademacher());
  }
  return h;
}

void BM_BanditMembership(benchmark::State& state) {
  const bool prune = state.range(0) != 0;
  const auto sched = vb::compute_schedule(2, 300, 0.1, 0.001);
  // The truth passes every constraint, so nothing short-circuits.
  const vb::FeatureVector theta{0.3, 0.1};
  const auto h = bandit_history(theta, 200, 0.1, sched.levels);
  for (auto _ : state) {
    benchmark::DoNotOptimize(vb::theta_in_confset(theta, h, sched, {prune}).member);
  }
  state.SetLabel(prune ? "pruned" : "exhaustive");
}
BENCHMARK(BM_BanditMembership)->Arg(1)->Arg(0);

void BM_HistoryAppend(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  auto net = std::make_shared<const vb::EpsNet>(vb::build_net(d, 2.0, d == 2 ? 0.1 : 0.3));
  vb::Rng rng(6);
  const vb::FeatureVector x = vb::sample_ball(d, 1.0, rng);
  for (auto _ : state) {
    state.PauseTiming();
    vb::BanditHistory h(net, 5);
    state.ResumeTiming();
    for (int i = 0; i < 32; ++i) h.append(x, 0.25);
    benchmark::DoNotOptimize(h.size());
  }
}
BENCHMARK(BM_HistoryAppend)->Arg(2)->Arg(3);

void BM_SelectArm(benchmark::State& state) {
  vb::VofulConfig cfg;
  cfg.iota_scale = 0.001;
  vb::VofulState s(2, 300, cfg);
  vb::Rng rng(8);
  vb::ArmSet arms;
  for (int a = 0; a < 16; ++a) arms.push_back(vb::sample_ball(2, 1.0, rng));
  for (auto _ : state) benchmark::DoNotOptimize(s.select_arm(arms).arm);
}
BENCHMARK(BM_SelectArm);

void BM_VarlinEpisodes(benchmark::State& state) {
  const auto mdp = vb::mdp_presets::stochastic();
  vb::VarlinConfig cfg;
  cfg.episodes = static_cast<int>(state.range(0));
  cfg.iota_scale = 0.003;
  for (auto _ : state) benchmark::DoNotOptimize(vb::run_varlin2(mdp, cfg, 1).final_regret());
}
BENCHMARK(BM_VarlinEpisodes)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace
