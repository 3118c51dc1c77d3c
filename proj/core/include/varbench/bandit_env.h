#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "varbench/linalg.h"

namespace varbench {

using ArmSet = std::vector<FeatureVector>;

class ArmGenerator {
 public:
  enum class Kind { kFixed, kFreshSphere };

  static ArmGenerator fixed_set(ArmSet arms);
  // n fresh uniform draws from the unit sphere every round.
  static ArmGenerator fresh_sphere(int d, int n);
  // n unit vectors equally spaced on the circle (d = 2), first at angle 0.
  static ArmGenerator circle(int n);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  int count() const { return n_; }
  const ArmSet& fixed_arms() const { return fixed_; }

  ArmSet generate(std::uint64_t round_seed) const;
  // Upper bound on max_x |x^T theta| over every arm set this generator can emit.
  double worst_case_mean(const FeatureVector& theta) const;

 private:
  Kind kind_ = Kind::kFixed;
  int dim_ = 0;
  int n_ = 0;
  ArmSet fixed_;
};

// Per-round noise standard deviations sigma_1..sigma_K in [0, 1].
namespace sigma_schedule {
std::vector<double> constant(int K, double sigma);
// sigma_hi for rounds 1..switch_round, sigma_lo afterwards.
std::vector<double> two_phase(int K, double sigma_hi, double sigma_lo, int switch_round);
// Independent uniform draws in [lo, hi], fixed once from `seed`.
std::vector<double> uniform_draw(int K, double lo, double hi, std::uint64_t seed);
}  // namespace sigma_schedule

// Stochastic linear bandit with reward x^T theta* + sigma_k * rho, rho a
// Rademacher sign. Construction rejects any configuration where a reward
// could leave [-1, 1].
class LinearBanditEnv {
 public:
  LinearBanditEnv(FeatureVector theta_star, ArmGenerator arms, std::vector<double> sigma);

  int K() const { return static_cast<int>(sigma_.size()); }
  int dim() const { return theta_star_.dim(); }
  const FeatureVector& theta_star() const { return theta_star_; }
  const ArmGenerator& arm_generator() const { return arms_; }
  double sigma(int k) const { return sigma_[static_cast<std::size_t>(k - 1)]; }

  // Rounds are 1-based. Output depends only on (seed, k).
  ArmSet observe_arms(int k, std::uint64_t seed) const;
  double pull(int k, const ArmSet& arms, const FeatureVector& x, std::uint64_t seed) const;
  // Noise term eps_k alone, so callers can recover eps_k(theta*).
  double noise(int k, std::uint64_t seed) const;
  double instantaneous_regret(const ArmSet& arms, const FeatureVector& x) const;

 private:
  FeatureVector theta_star_;
  ArmGenerator arms_;
  std::vector<double> sigma_;
};

}  // namespace varbench
