#include "varbench/mixture_mdp.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "varbench/error.h"

namespace varbench {

namespace {

double dot_seq(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

ValueTables backward_induction(const MixtureMdp& mdp, const std::vector<double>& theta,
                               bool clip_at_one) {
  const int S = mdp.S(), A = mdp.A(), H = mdp.H();
  ValueTables t;
  t.V.assign(static_cast<std::size_t>(H + 1), std::vector<double>(static_cast<std::size_t>(S), 0.0));
  t.Q.assign(static_cast<std::size_t>(H), std::vector<double>(static_cast<std::size_t>(S * A), 0.0));
  for (int h = H - 1; h >= 0; --h) {
    const auto& next = t.V[static_cast<std::size_t>(h + 1)];
    for (int s = 0; s < S; ++s) {
      double best = -1.0;
      for (int a = 0; a < A; ++a) {
        double q = mdp.reward(s, a) + mixture_expectation(mdp, theta, next, s, a);
        if (clip_at_one) q = std::min(1.0, q);
        t.Q[static_cast<std::size_t>(h)][mdp.index(s, a)] = q;
        best = std::max(best, q);
      }
      t.V[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)] = best;
    }
  }
  return t;
}

void check_row_stochastic(const std::vector<double>& k, int S, int A, const std::string& what) {
  VARBENCH_REQUIRE(k.size() == static_cast<std::size_t>(S * A * S), what + " has the wrong size");
  for (int sa = 0; sa < S * A; ++sa) {
    double sum = 0.0;
    for (int s2 = 0; s2 < S; ++s2) {
      const double p = k[static_cast<std::size_t>(sa * S + s2)];
      VARBENCH_REQUIRE(p >= 0.0 && std::isfinite(p), what + " has a negative or non-finite entry");
      sum += p;
    }
    VARBENCH_REQUIRE(std::abs(sum - 1.0) <= 1e-10, what + " row does not sum to 1");
  }
}

}  // namespace

MixtureMdp::MixtureMdp(int S, int A, int H, std::vector<std::vector<double>> base_kernels,
                       std::vector<double> theta_star, std::vector<double> reward,
                       int initial_state)
    : S_(S),
      A_(A),
      H_(H),
      base_(std::move(base_kernels)),
      theta_star_(std::move(theta_star)),
      reward_(std::move(reward)),
      s1_(initial_state) {
  VARBENCH_REQUIRE(S >= 1 && A >= 1 && H >= 1, "MDP needs S, A, H >= 1");
  VARBENCH_REQUIRE(!base_.empty(), "MDP needs at least one base kernel");
  VARBENCH_REQUIRE(theta_star_.size() == base_.size(), "theta* length must equal the number of base kernels");
  VARBENCH_REQUIRE(initial_state >= 0 && initial_state < S, "initial state out of range");
  VARBENCH_REQUIRE(reward_.size() == static_cast<std::size_t>(S * A), "reward table has the wrong size");
  for (double r : reward_) VARBENCH_REQUIRE(r >= 0.0 && r <= 1.0, "rewards must lie in [0, 1]");
  for (std::size_t i = 0; i < base_.size(); ++i) {
    check_row_stochastic(base_[i], S, A, "base kernel " + std::to_string(i));
  }
  double tsum = 0.0;
  for (double t : theta_star_) {
    VARBENCH_REQUIRE(t >= 0.0, "theta* must be non-negative (simplex)");
    tsum += t;
  }
  VARBENCH_REQUIRE(std::abs(tsum - 1.0) <= 1e-10, "theta* must sum to 1 (simplex)");

  mixed_.assign(static_cast<std::size_t>(S * A * S), 0.0);
  for (std::size_t i = 0; i < base_.size(); ++i) {
    for (std::size_t j = 0; j < mixed_.size(); ++j) mixed_[j] += theta_star_[i] * base_[i][j];
  }
  check_row_stochastic(mixed_, S, A, "mixed kernel");

  // Total-reward constraint, exactly, from every start state.
  const ValueTables opt = backward_induction(*this, theta_star_, false);
  const double worst = *std::max_element(opt.V[0].begin(), opt.V[0].end());
  if (worst > 1.0 + 1e-12) {
    throw ContractViolation("total reward constraint violated: max_s V*_1(s) = " +
                            std::to_string(worst) + " > 1");
  }
}

std::vector<double> base_expectations(const MixtureMdp& mdp, const std::vector<double>& f, int s,
                                      int a) {
  std::vector<double> out(static_cast<std::size_t>(mdp.d()), 0.0);
  for (int i = 0; i < mdp.d(); ++i) {
    double acc = 0.0;
    for (int s2 = 0; s2 < mdp.S(); ++s2) acc += mdp.base(i, s, a, s2) * f[static_cast<std::size_t>(s2)];
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

double mixture_expectation(const MixtureMdp& mdp, const std::vector<double>& theta,
                           const std::vector<double>& v, int s, int a) {
  return dot_seq(theta, base_expectations(mdp, v, s, a));
}

ValueTables dp_optimal(const MixtureMdp& mdp) {
  return backward_induction(mdp, mdp.theta_star(), false);
}

ValueTables dp_optimal_clipped(const MixtureMdp& mdp, const std::vector<double>& theta) {
  VARBENCH_REQUIRE(theta.size() == static_cast<std::size_t>(mdp.d()), "theta has the wrong length");
  return backward_induction(mdp, theta, true);
}

Policy greedy_policy(const MixtureMdp& mdp, const ValueTables& values) {
  Policy pi(static_cast<std::size_t>(mdp.H()), std::vector<int>(static_cast<std::size_t>(mdp.S()), 0));
  for (int h = 0; h < mdp.H(); ++h) {
    for (int s = 0; s < mdp.S(); ++s) {
      int best = 0;
      for (int a = 1; a < mdp.A(); ++a) {
        if (values.Q[static_cast<std::size_t>(h)][mdp.index(s, a)] >
            values.Q[static_cast<std::size_t>(h)][mdp.index(s, best)]) {
          best = a;
        }
      }
      pi[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)] = best;
    }
  }
  return pi;
}

std::vector<std::vector<double>> dp_policy_value(const MixtureMdp& mdp, const Policy& policy) {
  VARBENCH_REQUIRE(policy.size() == static_cast<std::size_t>(mdp.H()), "policy has the wrong horizon");
  std::vector<std::vector<double>> v(static_cast<std::size_t>(mdp.H() + 1),
                                     std::vector<double>(static_cast<std::size_t>(mdp.S()), 0.0));
  for (int h = mdp.H() - 1; h >= 0; --h) {
    for (int s = 0; s < mdp.S(); ++s) {
      const int a = policy[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)];
      VARBENCH_REQUIRE(a >= 0 && a < mdp.A(), "policy action out of range");
      v[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)] =
          mdp.reward(s, a) + mixture_expectation(mdp, mdp.theta_star(), v[static_cast<std::size_t>(h + 1)], s, a);
    }
  }
  return v;
}

EpisodeTrace sample_episode(const MixtureMdp& mdp, const Policy& policy, Rng& rng) {
  EpisodeTrace trace;
  trace.reserve(static_cast<std::size_t>(mdp.H()));
  int s = mdp.initial_state();
  for (int h = 0; h < mdp.H(); ++h) {
    const int a = policy[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)];
    const double u = rng.uniform();
    double acc = 0.0;
    int next = mdp.S() - 1;
    for (int s2 = 0; s2 < mdp.S(); ++s2) {
      acc += mdp.mixed(s, a, s2);
      if (u < acc) {
        next = s2;
        break;
      }
    }
    // Never land on a zero-probability tail state through rounding.
    while (next > 0 && mdp.mixed(s, a, next) == 0.0) --next;
    trace.push_back({h + 1, s, a, mdp.reward(s, a), next});
    s = next;
  }
  return trace;
}

double true_variance(const MixtureMdp& mdp, const std::vector<double>& v, int s, int a) {
  double m1 = 0.0, m2 = 0.0;
  for (int s2 = 0; s2 < mdp.S(); ++s2) {
    const double p = mdp.mixed(s, a, s2);
    m1 += p * v[static_cast<std::size_t>(s2)];
    m2 += p * v[static_cast<std::size_t>(s2)] * v[static_cast<std::size_t>(s2)];
  }
  return std::max(0.0, m2 - m1 * m1);
}

namespace mdp_presets {

namespace {

std::vector<double> one_hot_kernel(int S, int A, const std::vector<int>& next) {
  std::vector<double> k(static_cast<std::size_t>(S * A * S), 0.0);
  for (int sa = 0; sa < S * A; ++sa) k[static_cast<std::size_t>(sa * S + next[static_cast<std::size_t>(sa)])] = 1.0;
  return k;
}

// Scales rewards so that max_s V*_1(s) equals `ceiling` (or leaves them
// alone when already below it).
std::vector<double> rescale_rewards(int S, int A, int H, const std::vector<std::vector<double>>& base,
                                    const std::vector<double>& theta, std::vector<double> reward,
                                    double ceiling) {
  double hi = 0.0;
  for (double r : reward) hi = std::max(hi, r);
  if (hi > 1.0) {
    for (double& r : reward) r /= hi;
  }
  // Solve with rewards capped to [0,1]; the unconstrained DP is linear in r.
  std::vector<std::vector<double>> v(static_cast<std::size_t>(H + 1), std::vector<double>(static_cast<std::size_t>(S), 0.0));
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      double best = 0.0;
      for (int a = 0; a < A; ++a) {
        double q = reward[static_cast<std::size_t>(s * A + a)];
        for (std::size_t i = 0; i < base.size(); ++i) {
          double acc = 0.0;
          for (int s2 = 0; s2 < S; ++s2) acc += base[i][static_cast<std::size_t>((s * A + a) * S + s2)] * v[static_cast<std::size_t>(h + 1)][static_cast<std::size_t>(s2)];
          q += theta[i] * acc;
        }
        best = std::max(best, q);
      }
      v[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)] = best;
    }
  }
  const double top = *std::max_element(v[0].begin(), v[0].end());
  if (top > ceiling) {
    for (double& r : reward) r *= ceiling / top;
  }
  return reward;
}

}  // namespace

MixtureMdp debug_deterministic(int H) {
  const int S = 2, A = 2;
  // P1: action a moves to state a. P2: action a moves to state 1 - a.
  std::vector<std::vector<double>> base{one_hot_kernel(S, A, {0, 1, 0, 1}),
                                        one_hot_kernel(S, A, {1, 0, 1, 0})};
  std::vector<double> reward{0.0, 0.0, 0.5 / H, 0.5 / H};
  return MixtureMdp(S, A, H, std::move(base), {1.0, 0.0}, std::move(reward), 0);
}

MixtureMdp debug_stochastic(int H) {
  const int S = 2, A = 2;
  std::vector<double> uniform(static_cast<std::size_t>(S * A * S), 0.5);
  std::vector<std::vector<double>> base{one_hot_kernel(S, A, {0, 1, 0, 1}), uniform};
  std::vector<double> reward{0.0, 0.0, 0.5 / H, 0.5 / H};
  return MixtureMdp(S, A, H, std::move(base), {0.5, 0.5}, std::move(reward), 0);
}

MixtureMdp riverswim(int S, int H) {
  VARBENCH_REQUIRE(S >= 2, "riverswim needs S >= 2");
  const int A = 2;
  auto build = [&](double p_right, double p_stay) {
    std::vector<double> k(static_cast<std::size_t>(S * A * S), 0.0);
    for (int s = 0; s < S; ++s) {
      const int left = std::max(0, s - 1);
      const int right = std::min(S - 1, s + 1);
      k[static_cast<std::size_t>((s * A + 0) * S + left)] += 1.0;
      const double p_left = 1.0 - p_right - p_stay;
      k[static_cast<std::size_t>((s * A + 1) * S + right)] += p_right;
      k[static_cast<std::size_t>((s * A + 1) * S + s)] += p_stay;
      k[static_cast<std::size_t>((s * A + 1) * S + left)] += p_left;
    }
    return k;
  };
  std::vector<std::vector<double>> base{build(0.6, 0.35), build(0.2, 0.6)};
  std::vector<double> theta{0.5, 0.5};
  std::vector<double> reward(static_cast<std::size_t>(S * A), 0.0);
  reward[0] = 0.005;
  reward[static_cast<std::size_t>((S - 1) * A + 1)] = 1.0;
  reward = rescale_rewards(S, A, H, base, theta, std::move(reward), 0.9);
  return MixtureMdp(S, A, H, std::move(base), std::move(theta), std::move(reward), 0);
}

MixtureMdp random_dirichlet(int S, int A, int H, std::vector<double> theta_star,
                            std::uint64_t seed, double alpha) {
  VARBENCH_REQUIRE(alpha > 0.0, "Dirichlet alpha must be positive");
  Rng rng(seed, StreamTag::kTransitions, 0);
  std::vector<std::vector<double>> base;
  for (std::size_t i = 0; i < theta_star.size(); ++i) {
    std::vector<double> k(static_cast<std::size_t>(S * A * S), 0.0);
    for (int sa = 0; sa < S * A; ++sa) {
      double sum = 0.0;
      for (int s2 = 0; s2 < S; ++s2) {
        const double g = rng.gamma(alpha);
        k[static_cast<std::size_t>(sa * S + s2)] = g;
        sum += g;
      }
      if (sum == 0.0) {
        k[static_cast<std::size_t>(sa * S)] = 1.0;
        sum = 1.0;
      }
      for (int s2 = 0; s2 < S; ++s2) k[static_cast<std::size_t>(sa * S + s2)] /= sum;
    }
    base.push_back(std::move(k));
  }
  std::vector<double> reward(static_cast<std::size_t>(S * A), 0.0);
  bool any = false;
  for (auto& r : reward) {
    if (rng.bernoulli(0.3)) {
      r = rng.uniform(0.2, 1.0);
      any = true;
    }
  }
  if (!any) reward.back() = 1.0;
  reward = rescale_rewards(S, A, H, base, theta_star, std::move(reward), 0.9);
  return MixtureMdp(S, A, H, std::move(base), std::move(theta_star), std::move(reward), 0);
}

MixtureMdp stochastic() { return random_dirichlet(4, 2, 6, {0.5, 0.3, 0.2}, 18, 0.5); }

MixtureMdp by_name(const std::string& name) {
  if (name == "debug-deterministic") return debug_deterministic();
  if (name == "debug-stochastic") return debug_stochastic();
  if (name == "riverswim") return riverswim();
  if (name == "stochastic") return stochastic();
  throw ContractViolation("unknown MDP preset '" + name + "'");
}

std::vector<std::string> names() {
  return {"debug-deterministic", "debug-stochastic", "riverswim", "stochastic"};
}

}  // namespace mdp_presets

}  // namespace varbench
