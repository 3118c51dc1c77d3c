#include "varbench/varlin2.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "varbench/error.h"

namespace varbench {

RlSchedule compute_rl_schedule(int H, int K, int d, double delta, double iota_scale) {
  VARBENCH_REQUIRE(H >= 1 && K >= 1 && d >= 1, "RL schedule needs H, K, d >= 1");
  VARBENCH_REQUIRE(delta > 0.0 && delta <= std::exp(-1.0),
                   "delta must lie in (0, e^-1], got " + std::to_string(delta));
  VARBENCH_REQUIRE(iota_scale > 0.0, "iota_scale must be positive");
  RlSchedule s;
  s.H = H;
  s.K = K;
  s.d = d;
  s.delta = delta;
  s.iota_scale = iota_scale;
  const double hk = static_cast<double>(H) * static_cast<double>(K);
  s.L0 = static_cast<int>(std::floor(std::log2(static_cast<double>(H))));
  s.Lp = static_cast<int>(std::floor(std::log2(hk) + 1.0));
  s.iota = iota_scale * 2.0 * (2.0 * (d + 3) * std::log(2.0 * hk) - std::log(delta));
  return s;
}

std::size_t SimplexNet::nearest_index(const std::vector<double>& theta) const {
  VARBENCH_REQUIRE(theta.size() == static_cast<std::size_t>(dim), "nearest_index dimension mismatch");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < points.size(); ++j) {
    double dist = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double diff = points[j][i] - theta[i];
      dist += diff * diff;
    }
    if (dist < best_d) {
      best_d = dist;
      best = j;
    }
  }
  return best;
}

SimplexNet build_simplex_net(int d, int mesh, std::size_t cap) {
  VARBENCH_REQUIRE(d >= 1 && d <= kMaxDim, "simplex net dimension out of range");
  VARBENCH_REQUIRE(mesh >= 1, "simplex mesh must be >= 1");
  // C(mesh + d - 1, d - 1)
  double count = 1.0;
  for (int j = 1; j <= d - 1; ++j) count = count * (mesh + j) / j;
  if (count > static_cast<double>(cap)) {
    throw ResourceError("simplex net at mesh " + std::to_string(mesh) + " holds " +
                        std::to_string(count) + " points (cap " + std::to_string(cap) + ")");
  }
  SimplexNet net;
  net.dim = d;
  net.mesh = mesh;
  std::vector<int> n(static_cast<std::size_t>(d), 0);
  // Depth-first over compositions in lexicographic order.
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == d - 1) {
      n[static_cast<std::size_t>(pos)] = left;
      std::vector<double> p(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) p[static_cast<std::size_t>(i)] = static_cast<double>(n[static_cast<std::size_t>(i)]) / mesh;
      net.points.push_back(std::move(p));
      return;
    }
    for (int v = 0; v <= left; ++v) {
      n[static_cast<std::size_t>(pos)] = v;
      self(self, pos + 1, left - v);
    }
  };
  rec(rec, 0, mesh);
  return net;
}

std::vector<double> moment_feature(const MixtureMdp& mdp, const std::vector<double>& v, int s,
                                   int a, int m) {
  VARBENCH_REQUIRE(m >= 0 && m < 31, "moment level out of range");
  VARBENCH_REQUIRE(v.size() == static_cast<std::size_t>(mdp.S()), "value vector has the wrong size");
  if (m == 0) return base_expectations(mdp, v, s, a);
  std::vector<double> p = v;
  for (int j = 0; j < m; ++j) {
    for (double& e : p) e *= e;
  }
  return base_expectations(mdp, p, s, a);
}

double simplex_dot(const std::vector<double>& theta, const std::vector<double>& x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) acc += theta[i] * x[i];
  return acc;
}

int variance_bucket(double eta, int Lp) {
  for (int i = 1; i <= Lp; ++i) {
    if (eta > level_threshold(i)) return i;
  }
  return 0;
}

namespace {

double power_of_two_moment(double v, int m) {
  for (int j = 0; j < m; ++j) v *= v;
  return v;
}

}  // namespace

RlHistory::RlHistory(std::shared_ptr<const EpsNet> mu_net, const RlSchedule& schedule)
    : mu_net_(std::move(mu_net)), schedule_(schedule) {
  VARBENCH_REQUIRE(mu_net_ != nullptr, "RlHistory needs a mu-net");
  VARBENCH_REQUIRE(mu_net_->dim == schedule_.d, "mu-net dimension must equal d");
  const auto slots = static_cast<std::size_t>((schedule_.L0 + 1) * schedule_.Lp);
  cache_.resize(slots);
  sizes_.assign(slots, 0);
  underflow_.assign(static_cast<std::size_t>(schedule_.L0 + 1), 0);
}

std::size_t RlHistory::slot(int m, int i) const {
  VARBENCH_REQUIRE(m >= 0 && m <= schedule_.L0, "moment level out of range");
  VARBENCH_REQUIRE(i >= 1 && i <= schedule_.Lp, "variance bucket out of range");
  return static_cast<std::size_t>(m * schedule_.Lp + i - 1);
}

void RlHistory::accumulate(std::vector<double>& cache, const MomentSample& s) const {
  const auto d = static_cast<std::size_t>(schedule_.d);
  const std::size_t n_mu = mu_net_->size();
  const std::size_t st_len = stride();
  const Eigen::Map<const Eigen::VectorXd> x(s.x.data(), static_cast<Eigen::Index>(d));
  const Eigen::VectorXd proj = mu_net_->coords.transpose() * x;
  for (std::size_t j = 0; j < n_mu; ++j) {
    const double p = proj[static_cast<Eigen::Index>(j)];
    if (p == 0.0) continue;
    for (int level = 1; level <= schedule_.Lp; ++level) {
      const double c = clip(p, level);
      double* st = cache.data() + (static_cast<std::size_t>(level - 1) * n_mu + j) * st_len;
      st[kCount] += 1.0;
      st[kAbs] += std::abs(c);
      st[kCt] += c * s.target;
      st[kC2eta] += c * c * s.eta;
      for (std::size_t a = 0; a < d; ++a) st[kB + a] += c * s.x[a];
    }
  }
}

int RlHistory::append(MomentSample sample) {
  VARBENCH_REQUIRE(sample.m >= 0 && sample.m <= schedule_.L0, "sample moment level out of range");
  VARBENCH_REQUIRE(sample.x.size() == static_cast<std::size_t>(schedule_.d), "sample feature has the wrong size");
  for (double e : sample.x) {
    VARBENCH_REQUIRE(e >= 0.0 && e <= 1.0 + 1e-12, "moment features must lie in [0, 1]");
  }
  VARBENCH_REQUIRE(sample.target >= 0.0 && sample.target <= 1.0 + 1e-12, "sample target must lie in [0, 1]");
  VARBENCH_REQUIRE(sample.eta >= 0.0 && std::isfinite(sample.eta), "sample eta must be non-negative");
  sample.bucket = variance_bucket(sample.eta, schedule_.Lp);
  if (sample.bucket == 0) {
    ++underflow_[static_cast<std::size_t>(sample.m)];
  } else {
    const std::size_t k = slot(sample.m, sample.bucket);
    if (cache_[k].empty()) {
      cache_[k].assign(static_cast<std::size_t>(schedule_.Lp) * mu_net_->size() * stride(), 0.0);
    }
    accumulate(cache_[k], sample);
    ++sizes_[k];
  }
  const int bucket = sample.bucket;
  samples_.push_back(std::move(sample));
  return bucket;
}

std::size_t RlHistory::bucket_size(int m, int i) const { return sizes_[slot(m, i)]; }

std::size_t RlHistory::underflow_size(int m) const {
  VARBENCH_REQUIRE(m >= 0 && m <= schedule_.L0, "moment level out of range");
  return underflow_[static_cast<std::size_t>(m)];
}

std::size_t RlHistory::level_size(int m) const {
  return static_cast<std::size_t>(std::count_if(samples_.begin(), samples_.end(),
                                                [m](const MomentSample& s) { return s.m == m; }));
}

bool RlHistory::bucket_allocated(int m, int i) const { return !cache_[slot(m, i)].empty(); }

const double* RlHistory::stats(int m, int i, int level, std::size_t mu_index) const {
  VARBENCH_REQUIRE(level >= 1 && level <= schedule_.Lp, "clip level out of range");
  const auto& c = cache_[slot(m, i)];
  if (c.empty()) return nullptr;
  return c.data() + (static_cast<std::size_t>(level - 1) * mu_net_->size() + mu_index) * stride();
}

std::vector<double> RlHistory::recompute_bucket(int m, int i) const {
  std::vector<double> fresh(static_cast<std::size_t>(schedule_.Lp) * mu_net_->size() * stride(), 0.0);
  for (const auto& s : samples_) {
    if (s.m == m && s.bucket == i) accumulate(fresh, s);
  }
  return fresh;
}

const std::vector<double>& RlHistory::bucket_cache(int m, int i) const { return cache_[slot(m, i)]; }

bool rl_confset_member(const std::vector<double>& theta, const RlHistory& history, int m, int i,
                       int level, bool prune) {
  VARBENCH_REQUIRE(theta.size() == static_cast<std::size_t>(history.dim()), "theta dimension mismatch");
  if (!history.bucket_allocated(m, i)) return true;
  const RlSchedule& sch = history.schedule();
  const double iota = sch.iota;
  const double floor_term = 4.0 * level_threshold(level) * iota;
  // sum |c| <= 2^-level |T^{m,i}| for every mu.
  if (prune && level_threshold(level) * static_cast<double>(history.bucket_size(m, i)) <= floor_term) {
    return true;
  }
  const auto d = static_cast<std::size_t>(history.dim());
  const std::size_t n_mu = history.mu_net().size();
  const std::size_t stride = history.stride();
  const double* base = history.stats(m, i, level, 0);
  for (std::size_t j = 0; j < n_mu; ++j) {
    const double* st = base + j * stride;
    if (st[RlHistory::kCount] == 0.0) continue;
    if (prune && st[RlHistory::kAbs] <= floor_term) continue;
    const double rhs = 4.0 * std::sqrt(st[RlHistory::kC2eta] * iota) + floor_term;
    const double* b = st + RlHistory::kB;
    const double ct = st[RlHistory::kCt];
    if (prune) {
      const auto [lo, hi] = std::minmax_element(b, b + d);
      if (std::max(std::abs(*hi - ct), std::abs(*lo - ct)) <= rhs) continue;
    }
    double s1 = -ct;
    for (std::size_t a = 0; a < d; ++a) s1 += theta[a] * b[a];
    if (std::abs(s1) > rhs) return false;
  }
  return true;
}

bool rl_confset_member_all(const std::vector<double>& theta, const RlHistory& history, bool prune) {
  const RlSchedule& sch = history.schedule();
  for (int m = 0; m <= sch.L0; ++m) {
    for (int i = 1; i <= sch.Lp; ++i) {
      for (int level = 1; level <= sch.Lp; ++level) {
        if (!rl_confset_member(theta, history, m, i, level, prune)) return false;
      }
    }
  }
  return true;
}

double phi_statistic(const RlHistory& history, int m, int i, int level,
                     const std::vector<double>& mu) {
  VARBENCH_REQUIRE(mu.size() == static_cast<std::size_t>(history.dim()), "mu dimension mismatch");
  double acc = level_threshold(2 * level);
  for (const auto& s : history.samples()) {
    if (s.m != m || s.bucket != i) continue;
    const double p = simplex_dot(mu, s.x);
    acc += clip(p, level) * p;
  }
  return acc;
}

VarianceEstimate variance_estimate(const SimplexNet& net, const std::vector<std::size_t>& feasible,
                                   const std::vector<double>& x_m,
                                   const std::vector<double>& x_m1) {
  VarianceEstimate out;
  if (feasible.empty()) {
    out.eta = 1.0;
    out.fallback = true;
    return out;
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j : feasible) {
    const auto& th = net.points[j];
    const double first = simplex_dot(th, x_m);
    const double v = simplex_dot(th, x_m1) - first * first;
    if (v > best) {
      best = v;
      out.theta_index = j;
    }
  }
  out.eta = std::clamp(best, 0.0, 1.0);
  return out;
}

std::size_t argmax_linear(const SimplexNet& net, const std::vector<std::size_t>& feasible,
                          const std::vector<double>& x) {
  VARBENCH_REQUIRE(!feasible.empty(), "argmax over an empty set");
  std::size_t arg = feasible.front();
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j : feasible) {
    const double v = simplex_dot(net.points[j], x);
    if (v > best) {
      best = v;
      arg = j;
    }
  }
  return arg;
}

BackupResult optimistic_backup(const MixtureMdp& mdp, const SimplexNet& net,
                               const std::vector<std::size_t>& feasible,
                               const std::vector<double>& v_next) {
  VARBENCH_REQUIRE(!feasible.empty(), "optimistic backup over an empty set");
  const int S = mdp.S(), A = mdp.A();
  BackupResult out;
  out.Q.assign(static_cast<std::size_t>(S * A), 0.0);
  out.V.assign(static_cast<std::size_t>(S), 0.0);
  out.theta_index.assign(static_cast<std::size_t>(S * A), 0);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const std::vector<double> x0 = base_expectations(mdp, v_next, s, a);
      const std::size_t j = argmax_linear(net, feasible, x0);
      const double q = std::min(1.0, mdp.reward(s, a) + simplex_dot(net.points[j], x0));
      out.Q[mdp.index(s, a)] = q;
      out.theta_index[mdp.index(s, a)] = j;
    }
    double best = out.Q[mdp.index(s, 0)];
    for (int a = 1; a < A; ++a) best = std::max(best, out.Q[mdp.index(s, a)]);
    out.V[static_cast<std::size_t>(s)] = best;
  }
  return out;
}

VarlinState::VarlinState(const MixtureMdp& mdp, const VarlinConfig& config)
    : config_(config),
      schedule_(compute_rl_schedule(mdp.H(), config.episodes, mdp.d(), config.delta, config.iota_scale)),
      theta_net_(config.oracle_singleton ? SimplexNet{mdp.d(), 0, {mdp.theta_star()}}
                                         : build_simplex_net(mdp.d(), config.simplex_mesh, config.net_cap)),
      mu_net_(std::make_shared<const EpsNet>(build_net(mdp.d(), 2.0, config.mu_xi, config.net_cap))),
      history_(mu_net_, schedule_) {
  mask_.assign(theta_net_.size(), 1);
  all_.resize(theta_net_.size());
  for (std::size_t j = 0; j < all_.size(); ++j) all_[j] = j;
  feasible_ = all_;
}

const std::vector<std::size_t>& VarlinState::search_set() const {
  return feasible_.empty() ? all_ : feasible_;
}

void VarlinState::absorb(std::vector<MomentSample> samples) {
  std::set<std::pair<int, int>> touched;
  for (auto& s : samples) {
    const int bucket = history_.append(std::move(s));
    if (bucket != 0) touched.emplace(history_.samples().back().m, bucket);
  }
  if (config_.oracle_singleton) return;
  // Constraint-major sweep: each (m, i, level, mu) record is screened once,
  // then tested against every point still feasible.
  const double iota = schedule_.iota;
  const auto d = static_cast<std::size_t>(schedule_.d);
  const std::size_t n_mu = history_.mu_net().size();
  const std::size_t stride = history_.stride();
  for (const auto& [m, i] : touched) {
    if (feasible_.empty()) break;
    const double n_bucket = static_cast<double>(history_.bucket_size(m, i));
    for (int level = 1; level <= schedule_.Lp && !feasible_.empty(); ++level) {
      const double t = level_threshold(level);
      const double floor_term = 4.0 * t * iota;
      if (config_.prune && t * n_bucket <= floor_term) continue;
      const double* base = history_.stats(m, i, level, 0);
      for (std::size_t j = 0; j < n_mu && !feasible_.empty(); ++j) {
        const double* st = base + j * stride;
        if (st[RlHistory::kCount] == 0.0) continue;
        if (config_.prune && st[RlHistory::kAbs] <= floor_term) continue;
        const double rhs = 4.0 * std::sqrt(st[RlHistory::kC2eta] * iota) + floor_term;
        const double* b = st + RlHistory::kB;
        const double ct = st[RlHistory::kCt];
        if (config_.prune) {
          const auto [lo, hi] = std::minmax_element(b, b + d);
          if (std::max(std::abs(*hi - ct), std::abs(*lo - ct)) <= rhs) continue;
        }
        std::size_t w = 0;
        for (std::size_t r = 0; r < feasible_.size(); ++r) {
          const std::size_t idx = feasible_[r];
          const auto& th = theta_net_.points[idx];
          double s1 = -ct;
          for (std::size_t a = 0; a < d; ++a) s1 += th[a] * b[a];
          if (std::abs(s1) > rhs) {
            mask_[idx] = 0;
          } else {
            feasible_[w++] = idx;
          }
        }
        feasible_.resize(w);
      }
    }
  }
}

VarlinRun run_varlin2(const MixtureMdp& mdp, const VarlinConfig& config, std::uint64_t seed) {
  VARBENCH_REQUIRE(config.episodes >= 1, "VARLin2 needs at least one episode");
  VarlinState state(mdp, config);
  const RlSchedule& sch = state.schedule();
  const SimplexNet& net = state.theta_net();
  const int S = mdp.S(), H = mdp.H();
  const int s1 = mdp.initial_state();
  const auto& theta_star = mdp.theta_star();

  const ValueTables opt = dp_optimal(mdp);
  const double v_star = opt.V[0][static_cast<std::size_t>(s1)];
  const std::size_t nearest = net.nearest_index(theta_star);
  const std::vector<double>& theta_near = net.points[nearest];
  const ValueTables bar = dp_optimal_clipped(mdp, theta_near);
  const double slack = std::max(0.0, v_star - bar.V[0][static_cast<std::size_t>(s1)]);

  VarlinRun run;
  run.schedule = sch;
  run.theta_net_size = net.size();
  run.mu_net_size = state.history().mu_net().size();
  double cum = 0.0;

  for (int k = 1; k <= config.episodes; ++k) {
    const std::vector<std::size_t>& search = state.search_set();
    const std::vector<std::size_t> feasible = state.feasible();
    const bool covered = state.mask()[nearest] != 0;

    ValueTables vk;
    vk.V.assign(static_cast<std::size_t>(H + 1), std::vector<double>(static_cast<std::size_t>(S), 0.0));
    vk.Q.resize(static_cast<std::size_t>(H));
    for (int h = H - 1; h >= 0; --h) {
      BackupResult b = optimistic_backup(mdp, net, search, vk.V[static_cast<std::size_t>(h + 1)]);
      vk.Q[static_cast<std::size_t>(h)] = std::move(b.Q);
      vk.V[static_cast<std::size_t>(h)] = std::move(b.V);
    }
    const Policy pi = greedy_policy(mdp, vk);
    Rng rng(seed, StreamTag::kTransitions, static_cast<std::uint64_t>(k));
    const EpisodeTrace trace = sample_episode(mdp, pi, rng);
    const double v_pi = dp_policy_value(mdp, pi)[0][static_cast<std::size_t>(s1)];

    MdpEpisodeRow row;
    row.k = k;
    row.V1_opt = vk.V[0][static_cast<std::size_t>(s1)];
    row.V1_star = v_star;
    row.V1_pi = v_pi;
    row.inst_regret = v_star - v_pi;
    cum += row.inst_regret;
    row.cum_regret = cum;
    row.slack = slack;
    row.coverage = covered;
    row.optimistic = row.V1_opt >= v_star - slack;
    row.optimistic_all = true;
    for (int h = 0; h <= H; ++h) {
      for (int s = 0; s < S; ++s) {
        if (vk.V[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)] <
            bar.V[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)]) {
          row.optimistic_all = false;
        }
      }
    }
    row.feasible_count = feasible.size();
    row.fallback = state.search_fallback();
    for (const auto& st : trace) row.reward_sum += st.r;
    run.episodes.push_back(row);

    std::vector<MomentSample> samples;
    samples.reserve(static_cast<std::size_t>(H * (sch.L0 + 1)));
    for (const auto& st : trace) {
      const auto& v_next = vk.V[static_cast<std::size_t>(st.h)];
      std::vector<std::vector<double>> xs;
      for (int m = 0; m <= sch.L0 + 1; ++m) xs.push_back(moment_feature(mdp, v_next, st.s, st.a, m));
      for (int m = 0; m <= sch.L0; ++m) {
        const auto& xm = xs[static_cast<std::size_t>(m)];
        const auto& xm1 = xs[static_cast<std::size_t>(m + 1)];
        const VarianceEstimate ve = variance_estimate(net, feasible, xm, xm1);
        const double target = power_of_two_moment(v_next[static_cast<std::size_t>(st.s_next)], m);
        const std::size_t jm = argmax_linear(net, search, xm);

        MdpStepRow sr;
        sr.k = k;
        sr.h = st.h;
        sr.m = m;
        const double true_first = simplex_dot(theta_star, xm);
        sr.x_mu = simplex_dot(net.points[jm], xm) - true_first;
        sr.mart = true_first - target;
        sr.eta = ve.eta;
        sr.true_var = std::max(0.0, simplex_dot(theta_star, xm1) - true_first * true_first);
        const double near_first = simplex_dot(theta_near, xm);
        sr.nearest_var = std::clamp(simplex_dot(theta_near, xm1) - near_first * near_first, 0.0, 1.0);
        if (m == 0) {
          sr.surplus = vk.V[static_cast<std::size_t>(st.h - 1)][static_cast<std::size_t>(st.s)] - st.r - true_first;
        }
        sr.covered = covered;

        MomentSample ms;
        ms.episode = k;
        ms.step = st.h;
        ms.m = m;
        ms.x = xm;
        ms.target = target;
        ms.eta = ve.eta;
        sr.bucket = variance_bucket(ve.eta, sch.Lp);
        samples.push_back(std::move(ms));
        run.steps.push_back(sr);
      }
    }
    state.absorb(std::move(samples));
  }
  run.final_feasible = state.feasible();
  run.bucket_partition_ok = check_bucket_partition(state.history());
  run.total_samples = state.history().samples().size();
  return run;
}

DecompositionLog decomposition_diagnostics(const VarlinRun& run) {
  DecompositionLog log;
  const auto levels = static_cast<std::size_t>(run.schedule.L0 + 1);
  log.R_m.assign(levels, 0.0);
  log.M_m.assign(levels, 0.0);
  log.M_m_covered.assign(levels, 0.0);
  log.eta_bar.assign(levels, 0.0);
  double opt_gap = 0.0;
  for (const auto& e : run.episodes) {
    const double r3 = e.reward_sum - e.V1_pi;
    log.regret += e.inst_regret;
    log.R3 += r3;
    opt_gap += e.V1_opt - e.V1_pi;
    if (e.coverage) {
      log.regret_covered += e.inst_regret;
      log.R3_covered += r3;
    } else {
      ++log.uncovered_episodes;
    }
  }
  for (const auto& s : run.steps) {
    const auto m = static_cast<std::size_t>(s.m);
    log.R_m[m] += s.x_mu;
    log.M_m[m] += s.mart;
    log.eta_bar[m] += s.eta;
    if (s.covered) {
      log.M_m_covered[m] += s.mart;
      if (s.eta < s.nearest_var) ++log.eta_dominance_failures;
    }
    if (s.m == 0) {
      log.R1 += s.mart;
      log.R2 += s.surplus;
      if (s.covered) {
        log.R1_covered += s.mart;
        log.R2_covered += s.surplus;
      }
    }
  }
  log.identity_residual = std::abs(log.R1 + log.R2 + log.R3 - opt_gap);
  const double total_c = log.R1_covered + log.R2_covered + log.R3_covered;
  log.dominates = total_c >= log.regret_covered - kSumTolerance * std::max(1.0, std::abs(log.regret_covered));
  log.r2_within_r0 = log.R2 <= log.R_m[0] + kSumTolerance * std::max(1.0, std::abs(log.R_m[0]));
  return log;
}

bool check_bucket_partition(const RlHistory& history) {
  const RlSchedule& sch = history.schedule();
  std::vector<std::size_t> seen(static_cast<std::size_t>((sch.L0 + 1) * (sch.Lp + 1)), 0);
  for (const auto& s : history.samples()) {
    if (s.bucket != variance_bucket(s.eta, sch.Lp)) return false;
    if (s.bucket != 0 &&
        !(s.eta > level_threshold(s.bucket) && s.eta <= level_threshold(s.bucket - 1))) {
      return false;
    }
    ++seen[static_cast<std::size_t>(s.m * (sch.Lp + 1) + s.bucket)];
  }
  for (int m = 0; m <= sch.L0; ++m) {
    std::size_t total = history.underflow_size(m);
    if (seen[static_cast<std::size_t>(m * (sch.Lp + 1))] != history.underflow_size(m)) return false;
    for (int i = 1; i <= sch.Lp; ++i) {
      if (seen[static_cast<std::size_t>(m * (sch.Lp + 1) + i)] != history.bucket_size(m, i)) return false;
      total += history.bucket_size(m, i);
    }
    if (total != history.level_size(m)) return false;
  }
  return true;
}

}  // namespace varbench
