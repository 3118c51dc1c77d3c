#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "varbench/clip_confidence.h"
#include "varbench/mixture_mdp.h"

namespace varbench {

struct RlSchedule {
  int H = 1;
  int K = 1;
  int d = 1;
  int L0 = 0;  // moment levels m = 0..L0
  int Lp = 1;  // variance buckets i and clip levels l range over 1..Lp
  double iota = 0.0;
  double delta = 0.0;
  double iota_scale = 1.0;
};

// L0 = floor(log2 H), Lp = floor(log2(HK) + 1),
// iota = iota_scale * 2 ln((2HK)^(2(d+3)) / delta).
RlSchedule compute_rl_schedule(int H, int K, int d, double delta, double iota_scale = 1.0);

// Uniform grid on the probability simplex: all theta = n / mesh with
// non-negative integer n summing to mesh, in lexicographic order of n.
struct SimplexNet {
  int dim = 0;
  int mesh = 0;
  std::vector<std::vector<double>> points;

  std::size_t size() const { return points.size(); }
  // Euclidean nearest point; ties go to the lowest index.
  std::size_t nearest_index(const std::vector<double>& theta) const;
};

SimplexNet build_simplex_net(int d, int mesh, std::size_t cap = kDefaultNetCap);

// [sum_s' P_i(s'|s,a) V(s')^(2^m)]_i.
std::vector<double> moment_feature(const MixtureMdp& mdp, const std::vector<double>& v, int s,
                                   int a, int m);

// Left-to-right dot product. Every max-over-theta in this module and the
// true-kernel expectations use it, so ties and equalities are bitwise.
double simplex_dot(const std::vector<double>& theta, const std::vector<double>& x);

// Bucket i in 1..Lp with eta in (2^-i, 2^(1-i)]; 0 = underflow (eta <= 2^-Lp).
int variance_bucket(double eta, int Lp);

struct MomentSample {
  int episode = 0;  // 1-based
  int step = 0;     // 1-based h
  int m = 0;
  std::vector<double> x;
  double target = 0.0;
  double eta = 0.0;
  int bucket = 0;
};

// Moment samples bucketed by (m, i), with per-(m, i, l, mu) sufficient
// statistics. With c = clip(x^T mu, l):
//   count = #{c != 0}, abs = sum |c|, ct = sum c target, c2eta = sum c^2 eta,
//   b = sum c x.
// Bucket storage is allocated on first use.
class RlHistory {
 public:
  RlHistory(std::shared_ptr<const EpsNet> mu_net, const RlSchedule& schedule);

  // Computes the bucket from eta and stores the sample; returns the bucket.
  int append(MomentSample sample);

  const std::vector<MomentSample>& samples() const { return samples_; }
  const RlSchedule& schedule() const { return schedule_; }
  const EpsNet& mu_net() const { return *mu_net_; }
  int dim() const { return schedule_.d; }

  static constexpr std::size_t kCount = 0, kAbs = 1, kCt = 2, kC2eta = 3, kB = 4;
  std::size_t stride() const { return kB + static_cast<std::size_t>(schedule_.d); }

  // |T^{m,i}| and the underflow count at level m.
  std::size_t bucket_size(int m, int i) const;
  std::size_t underflow_size(int m) const;
  std::size_t level_size(int m) const;
  bool bucket_allocated(int m, int i) const;
  // Null when the bucket has never received a sample.
  const double* stats(int m, int i, int level, std::size_t mu_index) const;

  // Statistics of one (m, i) bucket rebuilt from the raw samples, laid out
  // as [level - 1][mu][field].
  std::vector<double> recompute_bucket(int m, int i) const;
  const std::vector<double>& bucket_cache(int m, int i) const;

 private:
  std::size_t slot(int m, int i) const;
  void accumulate(std::vector<double>& cache, const MomentSample& s) const;

  std::shared_ptr<const EpsNet> mu_net_;
  RlSchedule schedule_;
  std::vector<MomentSample> samples_;
  std::vector<std::vector<double>> cache_;  // [m * Lp + i - 1]
  std::vector<std::size_t> sizes_;          // same indexing
  std::vector<std::size_t> underflow_;      // [m]
};

// For every mu on the history's net:
//   |theta^T b - ct| <= 4 sqrt(c2eta iota) + 4 2^-level iota.
// With prune set, a (level, mu) pair is skipped when sum|c| <= 4 2^-level iota
// (|eps| <= 1 for simplex theta), and when every simplex point satisfies the
// linear slab (checked at the extreme coordinates of b).
bool rl_confset_member(const std::vector<double>& theta, const RlHistory& history, int m, int i,
                       int level, bool prune = true);
// Intersection over all m in 0..L0, i and level in 1..Lp.
bool rl_confset_member_all(const std::vector<double>& theta, const RlHistory& history,
                           bool prune = true);

// Phi^{m,i,l}(mu) = sum_{T^{m,i}} clip(x^T mu, l) x^T mu + 2^-2l, from raw samples.
double phi_statistic(const RlHistory& history, int m, int i, int level,
                     const std::vector<double>& mu);

struct VarianceEstimate {
  double eta = 1.0;
  std::size_t theta_index = 0;
  bool fallback = false;  // empty feasible set
};

// max over feasible theta of theta^T x^(m+1) - (theta^T x^m)^2, clamped to [0, 1].
VarianceEstimate variance_estimate(const SimplexNet& net, const std::vector<std::size_t>& feasible,
                                   const std::vector<double>& x_m,
                                   const std::vector<double>& x_m1);

struct BackupResult {
  std::vector<double> Q;                   // [s * A + a]
  std::vector<double> V;                   // [s]
  std::vector<std::size_t> theta_index;    // argmax net index per (s, a)
};

// Q(s,a) = min(1, r(s,a) + max over feasible theta of theta^T x^0(s,a)),
// V(s) = max_a Q(s,a). Ties go to the lowest net index and lowest action.
BackupResult optimistic_backup(const MixtureMdp& mdp, const SimplexNet& net,
                               const std::vector<std::size_t>& feasible,
                               const std::vector<double>& v_next);

// argmax over feasible theta of theta^T x, lowest index on ties.
std::size_t argmax_linear(const SimplexNet& net, const std::vector<std::size_t>& feasible,
                          const std::vector<double>& x);

struct VarlinConfig {
  int episodes = 150;
  double delta = 0.1;
  double iota_scale = 1.0;
  int simplex_mesh = 10;
  double mu_xi = 0.3;  // mu-net over the radius-2 ball
  std::size_t net_cap = kDefaultNetCap;
  // Replace the confidence set by {theta*} for the whole run.
  bool oracle_singleton = false;
  bool prune = true;
};

// Net feasibility over the simplex grid; the mask is the running
// intersection and never regains points.
class VarlinState {
 public:
  VarlinState(const MixtureMdp& mdp, const VarlinConfig& config);

  const RlSchedule& schedule() const { return schedule_; }
  const SimplexNet& theta_net() const { return theta_net_; }
  const RlHistory& history() const { return history_; }
  const std::vector<std::size_t>& feasible() const { return feasible_; }
  const std::vector<char>& mask() const { return mask_; }

  // Searched set: the feasible points, or the whole net when none remain.
  const std::vector<std::size_t>& search_set() const;
  bool search_fallback() const { return feasible_.empty(); }

  // Append samples, then drop every feasible point violating a constraint of
  // a bucket the samples touched.
  void absorb(std::vector<MomentSample> samples);

 private:
  VarlinConfig config_;
  RlSchedule schedule_;
  SimplexNet theta_net_;
  std::shared_ptr<const EpsNet> mu_net_;
  RlHistory history_;
  std::vector<char> mask_;
  std::vector<std::size_t> feasible_;
  std::vector<std::size_t> all_;
};

struct MdpEpisodeRow {
  int k = 0;
  double inst_regret = 0.0;  // V*(s1) - V^{pi_k}(s1)
  double cum_regret = 0.0;
  double V1_opt = 0.0;       // V^k_1(s1)
  double V1_star = 0.0;
  double V1_pi = 0.0;
  double slack = 0.0;        // max(0, V*(s1) - Vbar(s1)) for the nearest net point
  bool coverage = false;     // nearest net point to theta* feasible this episode
  bool optimistic = false;   // V1_opt >= V1_star - slack
  bool optimistic_all = false;  // V^k_h(s) >= Vbar_h(s) for every h, s
  std::size_t feasible_count = 0;
  bool fallback = false;
  double reward_sum = 0.0;
};

// Per (k, h, m) quantities for the decomposition sums.
struct MdpStepRow {
  int k = 0;
  int h = 0;
  int m = 0;
  double x_mu = 0.0;        // x^m (theta^m - theta*)
  double mart = 0.0;        // P (V_{h+1})^(2^m) - V_{h+1}(s_{h+1})^(2^m)
  double eta = 0.0;
  double true_var = 0.0;    // variance of V_{h+1}^(2^m) under the true kernel
  double nearest_var = 0.0; // same quantity under the nearest net point, clamped to [0, 1]
  double surplus = 0.0;     // m = 0 only: V_h(s_h) - r_h - P V_{h+1}
  int bucket = 0;
  bool covered = false;
};

struct DecompositionLog {
  double regret = 0.0;
  double R1 = 0.0, R2 = 0.0, R3 = 0.0;
  // Sums over covered episodes only.
  double regret_covered = 0.0;
  double R1_covered = 0.0, R2_covered = 0.0, R3_covered = 0.0;
  std::vector<double> R_m;          // m = 0..L0
  std::vector<double> M_m;
  std::vector<double> M_m_covered;
  std::vector<double> eta_bar;
  // |R1 + R2 + R3 - sum_k (V1_opt - V1_pi)|
  double identity_residual = 0.0;
  bool dominates = false;      // R1+R2+R3 >= regret over covered episodes
  bool r2_within_r0 = false;   // R2 <= R_0
  std::size_t uncovered_episodes = 0;
  // eta below the nearest-net-point variance while covered (must be 0).
  std::size_t eta_dominance_failures = 0;
};

struct VarlinRun {
  RlSchedule schedule;
  std::vector<MdpEpisodeRow> episodes;
  std::vector<MdpStepRow> steps;
  std::size_t theta_net_size = 0;
  std::size_t mu_net_size = 0;
  std::vector<std::size_t> final_feasible;
  bool bucket_partition_ok = true;
  std::size_t total_samples = 0;

  double final_regret() const { return episodes.empty() ? 0.0 : episodes.back().cum_regret; }
};

VarlinRun run_varlin2(const MixtureMdp& mdp, const VarlinConfig& config, std::uint64_t seed);

// Tolerance for comparing sums that agree in exact arithmetic.
inline constexpr double kSumTolerance = 1e-9;

DecompositionLog decomposition_diagnostics(const VarlinRun& run);

// Every sample in exactly one bucket and each bucket consistent with eta.
bool check_bucket_partition(const RlHistory& history);

}  // namespace varbench
