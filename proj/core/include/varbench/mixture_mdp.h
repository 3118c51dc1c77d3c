#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "varbench/rng.h"

namespace varbench {

// Finite episodic MDP whose transition kernel is sum_i theta*_i P_i for known
// base kernels P_i. Kernels are flat [s][a][s'] tables; reward is [s][a].
class MixtureMdp {
 public:
  MixtureMdp(int S, int A, int H, std::vector<std::vector<double>> base_kernels,
             std::vector<double> theta_star, std::vector<double> reward, int initial_state);

  int S() const { return S_; }
  int A() const { return A_; }
  int H() const { return H_; }
  int d() const { return static_cast<int>(base_.size()); }
  int initial_state() const { return s1_; }
  const std::vector<double>& theta_star() const { return theta_star_; }
  const std::vector<std::vector<double>>& base_kernels() const { return base_; }
  const std::vector<double>& rewards() const { return reward_; }

  double base(int i, int s, int a, int s2) const {
    return base_[static_cast<std::size_t>(i)][index(s, a) * static_cast<std::size_t>(S_) + static_cast<std::size_t>(s2)];
  }
  double mixed(int s, int a, int s2) const {
    return mixed_[index(s, a) * static_cast<std::size_t>(S_) + static_cast<std::size_t>(s2)];
  }
  double reward(int s, int a) const { return reward_[index(s, a)]; }
  std::size_t index(int s, int a) const {
    return static_cast<std::size_t>(s) * static_cast<std::size_t>(A_) + static_cast<std::size_t>(a);
  }

 private:
  int S_, A_, H_;
  std::vector<std::vector<double>> base_;
  std::vector<double> theta_star_;
  std::vector<double> reward_;
  int s1_;
  std::vector<double> mixed_;
};

// P^i_{s,a} f for every base kernel i.
std::vector<double> base_expectations(const MixtureMdp& mdp, const std::vector<double>& f, int s,
                                      int a);

// sum_i theta_i P^i_{s,a} V. The optimal-value oracle and the optimistic
// backups both route through this function.
double mixture_expectation(const MixtureMdp& mdp, const std::vector<double>& theta,
                           const std::vector<double>& v, int s, int a);

// Values indexed [h][s] with h = 0..H (row H is the terminal zero row);
// Q indexed [h][s * A + a]. h = 0 is the first step of an episode.
struct ValueTables {
  std::vector<std::vector<double>> V;
  std::vector<std::vector<double>> Q;
};

// Deterministic policy: action[h][s].
using Policy = std::vector<std::vector<int>>;

ValueTables dp_optimal(const MixtureMdp& mdp);
// Optimal values under an arbitrary simplex weight theta with every Q
// clipped at 1. Used to quantify net-resolution slack.
ValueTables dp_optimal_clipped(const MixtureMdp& mdp, const std::vector<double>& theta);
Policy greedy_policy(const MixtureMdp& mdp, const ValueTables& values);
std::vector<std::vector<double>> dp_policy_value(const MixtureMdp& mdp, const Policy& policy);

struct EpisodeStep {
  int h = 0;  // 1-based step index
  int s = 0;
  int a = 0;
  double r = 0.0;
  int s_next = 0;
};
using EpisodeTrace = std::vector<EpisodeStep>;

EpisodeTrace sample_episode(const MixtureMdp& mdp, const Policy& policy, Rng& rng);

// Var_{s' ~ P(.|s,a)} V(s') under the true mixed kernel.
double true_variance(const MixtureMdp& mdp, const std::vector<double>& v, int s, int a);

namespace mdp_presets {
// Two states, two actions, one-hot kernels; d = 2 base models.
MixtureMdp debug_deterministic(int H = 4);
// Two states, two actions; one one-hot base model and one uniform.
MixtureMdp debug_stochastic(int H = 4);
// RiverSwim-style chain with d = 2 base models, rewards rescaled so the
// total reward of any policy is at most 1.
MixtureMdp riverswim(int S = 4, int H = 6);
// Dirichlet(alpha) base kernels drawn from `seed`, sparse rewards rescaled
// to a total-reward ceiling of 0.9.
MixtureMdp random_dirichlet(int S, int A, int H, std::vector<double> theta_star,
                            std::uint64_t seed, double alpha = 0.5);
// Shipped stochastic instance: S=4, A=2, H=6, d=3, theta* = (0.5, 0.3, 0.2).
MixtureMdp stochastic();

MixtureMdp by_name(const std::string& name);
std::vector<std::string> names();
}  // namespace mdp_presets

}  // namespace varbench
