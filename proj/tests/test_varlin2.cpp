#include <cmath>
#include <limits>
#include <memory>

#include <gtest/gtest.h>

#include "varbench/error.h"
#include "varbench/varlin2.h"

namespace vb = varbench;

namespace {

std::vector<std::size_t> all_indices(const vb::SimplexNet& net) {
  std::vector<std::size_t> idx(net.size());
  for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
  return idx;
}

vb::MixtureMdp coin_mdp() {
  std::vector<double> half(8, 0.5);
  std::vector<double> stay{1, 0, 1, 0, 0, 1, 0, 1};
  return vb::MixtureMdp(2, 2, 1, {half, stay}, {1.0, 0.0}, {0, 0, 0, 0}, 0);
}

// History filled with synthetic bounded samples around theta_true.
vb::RlHistory synthetic_history(int d, std::uint64_t seed, const std::vector<double>& theta_true, int n,
                                double iota_scale) {
  const auto sched = vb::compute_rl_schedule(4, 50, d, 0.1, iota_scale);
  auto net = std::make_shared<const vb::EpsNet>(vb::build_net(d, 2.0, 0.5));
  vb::RlHistory h(net, sched);
  vb::Rng rng(seed);
  for (int t = 0; t < n; ++t) {
    vb::MomentSample s;
    s.episode = 1 + t / 4;
    s.step = 1 + t % 4;
    s.m = t % (sched.L0 + 1);
    s.x.resize(static_cast<std::size_t>(d));
    for (auto& e : s.x) e = rng.uniform();
    const double mean = vb::simplex_dot(theta_true, s.x);
    s.target = std::clamp(mean + 0.3 * rng.rademacher(), 0.0, 1.0);
    s.eta = std::ldexp(rng.uniform(0.5, 1.0), -static_cast<int>(rng.uniform(0.0, 6.0)));
    h.append(std::move(s));
  }
  return h;
}

bool brute_member(const std::vector<double>& theta, const vb::RlHistory& h, int m, int i, int level,
                  double* margin) {
  const double iota = h.schedule().iota;
  bool ok = true;
  *margin = INFINITY;
  for (const auto& mu : h.mu_net().points) {
    double s1 = 0.0, s2 = 0.0;
    bool any = false;
    for (const auto& s : h.samples()) {
      if (s.m != m || s.bucket != i) continue;
      double xm = 0.0;
      for (std::size_t a = 0; a < s.x.size(); ++a) xm += s.x[a] * mu[static_cast<int>(a)];
      const double c = vb::clip(xm, level);
      if (c != 0.0) any = true;
      s1 += c * (vb::simplex_dot(theta, s.x) - s.target);
      s2 += c * c * s.eta;
    }
    if (!any) continue;
    const double slack = 4.0 * std::sqrt(s2 * iota) + 4.0 * std::ldexp(1.0, -level) * iota - std::abs(s1);
    *margin = std::min(*margin, std::abs(slack));
    if (slack < 0) ok = false;
  }
  return ok;
}

}  // namespace

TEST(RlSchedule, FrozenValues) {
  const auto s = vb::compute_rl_schedule(6, 150, 3, 0.1);
  EXPECT_EQ(s.L0, 2);
  EXPECT_EQ(s.Lp, 10);
  // frozen from tests/oracles/oracles.py
  EXPECT_NEAR(s.iota, 184.49817683921026, 1e-9);
  EXPECT_EQ(vb::compute_rl_schedule(1, 1, 2, 0.1).L0, 0);
  EXPECT_EQ(vb::compute_rl_schedule(1, 1, 2, 0.1).Lp, 1);
  EXPECT_THROW(vb::compute_rl_schedule(6, 150, 3, 0.5), vb::ContractViolation);
}

TEST(SimplexNet, SizesAndNearest) {
  EXPECT_EQ(vb::build_simplex_net(3, 10).size(), 66u);
  EXPECT_EQ(vb::build_simplex_net(2, 4).size(), 5u);
  const auto net = vb::build_simplex_net(3, 10);
  for (const auto& p : net.points) {
    double sum = 0.0;
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  const auto j = net.nearest_index({0.5, 0.3, 0.2});
  EXPECT_NEAR(net.points[j][0], 0.5, 1e-12);
  EXPECT_NEAR(net.points[j][1], 0.3, 1e-12);
  EXPECT_THROW(vb::build_simplex_net(6, 100, 1000), vb::ResourceError);
}

TEST(MomentFeature, Examples) {
  const auto mdp = vb::mdp_presets::stochastic();
  const auto one = vb::moment_feature(mdp, std::vector<double>(4, 1.0), 2, 1, 2);
  for (double v : one) EXPECT_NEAR(v, 1.0, 1e-12);
  const auto zero = vb::moment_feature(mdp, std::vector<double>(4, 0.0), 1, 0, 1);
  for (double v : zero) EXPECT_EQ(v, 0.0);
  // debug instance, m = 1: P1 from (0, 1) goes to state 1; P2 is uniform.
  const auto dbg = vb::mdp_presets::debug_stochastic(3);
  const auto x1 = vb::moment_feature(dbg, {0.2, 0.6}, 0, 1, 1);
  EXPECT_NEAR(x1[0], 0.36, 1e-15);
  EXPECT_NEAR(x1[1], 0.5 * 0.04 + 0.5 * 0.36, 1e-15);
}

TEST(MomentFeature, HandInstanceOracle) {
  std::vector<double> p1{0.7, 0.3, 0.2, 0.8, 1.0, 0.0, 0.5, 0.5};
  std::vector<double> p2{0.1, 0.9, 0.6, 0.4, 0.3, 0.7, 0.0, 1.0};
  const vb::MixtureMdp mdp(2, 2, 2, {p1, p2}, {0.25, 0.75}, {0.1, 0.2, 0.3, 0.05}, 0);
  const auto v2 = vb::dp_optimal(mdp).V[1];
  // frozen from tests/oracles/oracles.py
  const auto x = vb::moment_feature(mdp, v2, 0, 0, 1);
  EXPECT_NEAR(x[0], 0.055, 1e-15);
  EXPECT_NEAR(x[1], 0.085, 1e-15);
  const auto y = vb::moment_feature(mdp, v2, 1, 1, 1);
  EXPECT_NEAR(y[0], 0.065, 1e-15);
  EXPECT_NEAR(y[1], 0.09, 1e-15);
}

TEST(VarianceBucket, Edges) {
  EXPECT_EQ(vb::variance_bucket(1.0, 5), 1);
  EXPECT_EQ(vb::variance_bucket(0.5, 5), 2);
  EXPECT_EQ(vb::variance_bucket(0.50001, 5), 1);
  EXPECT_EQ(vb::variance_bucket(1.0 / 32, 5), 0);
  EXPECT_EQ(vb::variance_bucket(0.0, 5), 0);
}

TEST(RlConfset, EmptyBucketAccepts) {
  const auto sched = vb::compute_rl_schedule(4, 10, 2, 0.1);
  auto net = std::make_shared<const vb::EpsNet>(vb::build_net(2, 2.0, 0.5));
  vb::RlHistory h(net, sched);
  EXPECT_TRUE(vb::rl_confset_member({1.0, 0.0}, h, 0, 1, 1));
  EXPECT_TRUE(vb::rl_confset_member_all({0.0, 1.0}, h, false));
}

TEST(RlConfset, ExactTargetsAlwaysAccept) {
  const auto mdp = vb::mdp_presets::debug_deterministic(4);
  vb::VarlinConfig cfg;
  cfg.episodes = 30;
  cfg.iota_scale = 1e-4;
  cfg.simplex_mesh = 4;
  const auto run = vb::run_varlin2(mdp, cfg, 2);
  for (const auto& e : run.episodes) EXPECT_TRUE(e.coverage) << e.k;
}

TEST(RlConfset, MatchesRawSampleOracleWithAndWithoutPruning) {
  int compared = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const int d = 2 + static_cast<int>(seed % 2);
    std::vector<double> truth(static_cast<std::size_t>(d), 1.0 / d);
    const auto h = synthetic_history(d, seed, truth, 300, 2e-3);
    const auto net = vb::build_simplex_net(d, 5);
    for (int m = 0; m <= h.schedule().L0; ++m) {
      for (int i = 1; i <= 6; ++i) {
        for (int level = 1; level <= 4; ++level) {
          for (const auto& theta : net.points) {
            double margin = 0.0;
            const bool expect = brute_member(theta, h, m, i, level, &margin);
            if (margin < 1e-9) continue;
            ++compared;
            ASSERT_EQ(vb::rl_confset_member(theta, h, m, i, level, false), expect);
            ASSERT_EQ(vb::rl_confset_member(theta, h, m, i, level, true), expect);
          }
        }
      }
    }
  }
  EXPECT_GT(compared, 1000);
}

TEST(RlHistory, CacheMatchesRecomputeAndPartition) {
  const auto h = synthetic_history(3, 9, {0.5, 0.3, 0.2}, 400, 1.0);
  std::size_t total = 0;
  for (int m = 0; m <= h.schedule().L0; ++m) {
    std::size_t level_total = h.underflow_size(m);
    for (int i = 1; i <= h.schedule().Lp; ++i) {
      level_total += h.bucket_size(m, i);
      if (!h.bucket_allocated(m, i)) {
        EXPECT_EQ(h.stats(m, i, 1, 0), nullptr);
        continue;
      }
      const auto fresh = h.recompute_bucket(m, i);
      const auto& cached = h.bucket_cache(m, i);
      ASSERT_EQ(fresh.size(), cached.size());
      for (std::size_t k = 0; k < fresh.size(); ++k) EXPECT_NEAR(fresh[k], cached[k], 1e-12);
    }
    EXPECT_EQ(level_total, h.level_size(m));
    total += level_total;
  }
  EXPECT_EQ(total, h.samples().size());
  EXPECT_TRUE(vb::check_bucket_partition(h));
}

TEST(PhiStatistic, EmptyBucketIsRegularizer) {
  const auto sched = vb::compute_rl_schedule(4, 10, 2, 0.1);
  auto net = std::make_shared<const vb::EpsNet>(vb::build_net(2, 2.0, 0.5));
  vb::RlHistory h(net, sched);
  EXPECT_DOUBLE_EQ(vb::phi_statistic(h, 0, 1, 3, {0.5, 0.5}), std::ldexp(1.0, -6));
}

TEST(VarianceEstimate, SingletonExamples) {
  const auto det = vb::mdp_presets::debug_deterministic(3);
  const vb::SimplexNet single{2, 0, {det.theta_star()}};
  const std::vector<double> v{0.3, 0.8};
  const auto e = vb::variance_estimate(single, {0}, vb::moment_feature(det, v, 0, 1, 0),
                                       vb::moment_feature(det, v, 0, 1, 1));
  EXPECT_NEAR(e.eta, 0.0, 1e-15);
  const auto coin = coin_mdp();
  const vb::SimplexNet c{2, 0, {coin.theta_star()}};
  const std::vector<double> w{0.0, 1.0};
  const auto f = vb::variance_estimate(c, {0}, vb::moment_feature(coin, w, 0, 0, 0),
                                       vb::moment_feature(coin, w, 0, 0, 1));
  EXPECT_NEAR(f.eta, 0.25, 1e-15);
  const auto g = vb::variance_estimate(c, {}, {0.5, 0.5}, {0.5, 0.5});
  EXPECT_TRUE(g.fallback);
  EXPECT_EQ(g.eta, 1.0);
}

TEST(VarianceEstimate, MatchesExhaustiveScanOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto mdp = vb::mdp_presets::random_dirichlet(4, 2, 3, {0.5, 0.3, 0.2}, 100 + seed, 0.6);
    const auto net = vb::build_simplex_net(3, 6);
    vb::Rng rng(seed);
    std::vector<double> v(4);
    for (auto& x : v) x = rng.uniform();
    std::vector<std::size_t> feas;
    for (std::size_t j = 0; j < net.size(); ++j) {
      if (rng.bernoulli(0.6)) feas.push_back(j);
    }
    if (feas.empty()) feas.push_back(0);
    const int s = static_cast<int>(seed % 4), a = static_cast<int>(seed % 2), m = static_cast<int>(seed % 3);
    const auto xm = vb::moment_feature(mdp, v, s, a, m);
    const auto xm1 = vb::moment_feature(mdp, v, s, a, m + 1);
    double best = -INFINITY;
    for (std::size_t j : feas) {
      double first = 0.0, second = 0.0;
      for (int i = 0; i < 3; ++i) {
        first += net.points[j][static_cast<std::size_t>(i)] * xm[static_cast<std::size_t>(i)];
        second += net.points[j][static_cast<std::size_t>(i)] * xm1[static_cast<std::size_t>(i)];
      }
      best = std::max(best, second - first * first);
    }
    const auto e = vb::variance_estimate(net, feas, xm, xm1);
    EXPECT_NEAR(e.eta, std::clamp(best, 0.0, 1.0), 1e-15);
    EXPECT_FALSE(e.fallback);
  }
}

TEST(OptimisticBackup, MatchesExhaustiveScanOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto mdp = vb::mdp_presets::random_dirichlet(4, 2, 4, {0.5, 0.3, 0.2}, 300 + seed, 0.5);
    const auto net = vb::build_simplex_net(3, 8);
    vb::Rng rng(seed);
    std::vector<double> v(4);
    for (auto& x : v) x = rng.uniform(0.0, 0.8);
    std::vector<std::size_t> feas;
    for (std::size_t j = 0; j < net.size(); ++j) {
      if (seed % 5 == 0 || rng.bernoulli(0.5)) feas.push_back(j);
    }
    if (feas.empty()) feas.push_back(net.size() - 1);
    const auto res = vb::optimistic_backup(mdp, net, feas, v);
    for (int s = 0; s < 4; ++s) {
      double vbest = -INFINITY;
      for (int a = 0; a < 2; ++a) {
        double best = -INFINITY;
        for (std::size_t j : feas) {
          double acc = 0.0;
          for (int i = 0; i < 3; ++i) {
            double e = 0.0;
            for (int s2 = 0; s2 < 4; ++s2) e += mdp.base(i, s, a, s2) * v[static_cast<std::size_t>(s2)];
            acc += net.points[j][static_cast<std::size_t>(i)] * e;
          }
          best = std::max(best, acc);
        }
        const double q = std::min(1.0, mdp.reward(s, a) + best);
        EXPECT_NEAR(res.Q[mdp.index(s, a)], q, 1e-14);
        vbest = std::max(vbest, q);
      }
      EXPECT_NEAR(res.V[static_cast<std::size_t>(s)], vbest, 1e-14);
    }
  }
}

TEST(OptimisticBackup, SingletonEqualsTrueKernelAndZeroRewardIsZero) {
  const auto mdp = vb::mdp_presets::stochastic();
  const vb::SimplexNet single{3, 0, {mdp.theta_star()}};
  const auto t = vb::dp_optimal(mdp);
  const auto res = vb::optimistic_backup(mdp, single, {0}, t.V[3]);
  for (int s = 0; s < 4; ++s)
    for (int a = 0; a < 2; ++a) EXPECT_DOUBLE_EQ(res.Q[mdp.index(s, a)], std::min(1.0, t.Q[2][mdp.index(s, a)]));
  const vb::MixtureMdp zero(4, 2, 6, mdp.base_kernels(), mdp.theta_star(), std::vector<double>(8, 0.0), 0);
  const auto net = vb::build_simplex_net(3, 10);
  const auto z = vb::optimistic_backup(zero, net, all_indices(net), std::vector<double>(4, 0.0));
  for (double q : z.Q) EXPECT_EQ(q, 0.0);
}

TEST(RunVarlin2, DeterministicAcrossRuns) {
  vb::VarlinConfig cfg;
  cfg.episodes = 25;
  cfg.iota_scale = 0.003;
  const auto a = vb::run_varlin2(vb::mdp_presets::stochastic(), cfg, 4);
  const auto b = vb::run_varlin2(vb::mdp_presets::stochastic(), cfg, 4);
  ASSERT_EQ(a.episodes.size(), b.episodes.size());
  for (std::size_t k = 0; k < a.episodes.size(); ++k) {
    EXPECT_EQ(a.episodes[k].cum_regret, b.episodes[k].cum_regret);
    EXPECT_EQ(a.episodes[k].V1_opt, b.episodes[k].V1_opt);
    EXPECT_EQ(a.episodes[k].feasible_count, b.episodes[k].feasible_count);
  }
  EXPECT_EQ(a.final_feasible, b.final_feasible);
}

TEST(RunVarlin2, PruningDoesNotChangeTheRun) {
  vb::VarlinConfig cfg;
  cfg.episodes = 20;
  cfg.iota_scale = 0.003;
  cfg.prune = true;
  const auto a = vb::run_varlin2(vb::mdp_presets::stochastic(), cfg, 6);
  cfg.prune = false;
  const auto b = vb::run_varlin2(vb::mdp_presets::stochastic(), cfg, 6);
  EXPECT_EQ(a.final_feasible, b.final_feasible);
  for (std::size_t k = 0; k < a.episodes.size(); ++k) EXPECT_EQ(a.episodes[k].V1_opt, b.episodes[k].V1_opt);
}

TEST(RunVarlin2, DeterministicMdpRegretStabilizes) {
  const auto mdp = vb::mdp_presets::debug_deterministic(4);
  vb::VarlinConfig cfg;
  // Large enough K that the optimistic variances land in real buckets
  // rather than the underflow bucket.
  cfg.episodes = 150;
  cfg.simplex_mesh = 4;
  cfg.iota_scale = 1e-3;
  const auto run = vb::run_varlin2(mdp, cfg, 8);
  EXPECT_EQ(run.final_feasible.size(), 1u);
  EXPECT_EQ(run.episodes[30].cum_regret, run.episodes.back().cum_regret);
  for (const auto& e : run.episodes) {
    EXPECT_TRUE(e.coverage);
    EXPECT_TRUE(e.optimistic);
  }
}

TEST(Decomposition, OracleOnDeterministicMdpIsZero) {
  const auto mdp = vb::mdp_presets::debug_deterministic(4);
  vb::VarlinConfig cfg;
  cfg.episodes = 10;
  cfg.oracle_singleton = true;
  const auto run = vb::run_varlin2(mdp, cfg, 1);
  const auto log = vb::decomposition_diagnostics(run);
  for (double r : log.R_m) EXPECT_NEAR(r, 0.0, 1e-15);
  for (double m : log.M_m) EXPECT_NEAR(m, 0.0, 1e-15);
  EXPECT_NEAR(log.regret, 0.0, 1e-15);
}

TEST(Decomposition, SingleStepMartingaleVanishes) {
  const auto base = vb::mdp_presets::stochastic();
  const vb::MixtureMdp one(4, 2, 1, base.base_kernels(), base.theta_star(), base.rewards(), 0);
  vb::VarlinConfig cfg;
  cfg.episodes = 15;
  cfg.iota_scale = 0.01;
  const auto log = vb::decomposition_diagnostics(vb::run_varlin2(one, cfg, 3));
  for (double m : log.M_m) EXPECT_EQ(m, 0.0);
}

TEST(Decomposition, IdentityDominanceAndOptimismOnShortRun) {
  vb::VarlinConfig cfg;
  cfg.episodes = 40;
  cfg.iota_scale = 0.003;
  const auto run = vb::run_varlin2(vb::mdp_presets::stochastic(), cfg, 12);
  const auto log = vb::decomposition_diagnostics(run);
  EXPECT_LT(log.identity_residual, 1e-9);
  EXPECT_TRUE(log.dominates);
  EXPECT_TRUE(log.r2_within_r0);
  EXPECT_EQ(log.eta_dominance_failures, 0u);
  EXPECT_TRUE(run.bucket_partition_ok);
  for (const auto& e : run.episodes) {
    if (e.coverage) EXPECT_TRUE(e.optimistic_all) << e.k;
  }
}
