#include "varbench/bandit_env.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "varbench/error.h"
#include "varbench/rng.h"

namespace varbench {

ArmGenerator ArmGenerator::fixed_set(ArmSet arms) {
  VARBENCH_REQUIRE(!arms.empty(), "fixed arm set must be non-empty");
  ArmGenerator g;
  g.kind_ = Kind::kFixed;
  g.dim_ = arms.front().dim();
  for (const auto& a : arms) {
    VARBENCH_REQUIRE(a.dim() == g.dim_, "arms must share a dimension");
    VARBENCH_REQUIRE(a.norm() <= 1.0 + 1e-12, "arms must lie in the unit ball");
  }
  g.n_ = static_cast<int>(arms.size());
  g.fixed_ = std::move(arms);
  return g;
}

ArmGenerator ArmGenerator::fresh_sphere(int d, int n) {
  VARBENCH_REQUIRE(d >= 1 && n >= 1, "fresh_sphere needs d >= 1 and n >= 1");
  ArmGenerator g;
  g.kind_ = Kind::kFreshSphere;
  g.dim_ = d;
  g.n_ = n;
  return g;
}

ArmGenerator ArmGenerator::circle(int n) {
  VARBENCH_REQUIRE(n >= 1, "circle needs n >= 1");
  ArmSet arms;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    arms.push_back(FeatureVector{std::cos(a), std::sin(a)});
  }
  return fixed_set(std::move(arms));
}

ArmSet ArmGenerator::generate(std::uint64_t round_seed) const {
  if (kind_ == Kind::kFixed) return fixed_;
  Rng rng(round_seed);
  ArmSet out;
  out.reserve(static_cast<std::size_t>(n_));
  for (int i = 0; i < n_; ++i) {
    Eigen::VectorXd v(dim_);
    double norm = 0.0;
    do {
      for (int j = 0; j < dim_; ++j) v[j] = rng.normal();
      norm = v.norm();
    } while (norm == 0.0);
    v /= norm;
    // Guard the last ulp so the ball invariant holds exactly.
    if (v.norm() > 1.0) v /= v.norm() * (1.0 + 1e-16);
    out.emplace_back(std::move(v));
  }
  return out;
}

double ArmGenerator::worst_case_mean(const FeatureVector& theta) const {
  if (kind_ == Kind::kFreshSphere) return theta.norm();
  double worst = 0.0;
  for (const auto& a : fixed_) worst = std::max(worst, std::abs(a.dot(theta)));
  return worst;
}

namespace sigma_schedule {

std::vector<double> constant(int K, double sigma) {
  VARBENCH_REQUIRE(K >= 1 && sigma >= 0.0 && sigma <= 1.0, "constant sigma out of range");
  return std::vector<double>(static_cast<std::size_t>(K), sigma);
}

std::vector<double> two_phase(int K, double sigma_hi, double sigma_lo, int switch_round) {
  VARBENCH_REQUIRE(K >= 1, "two_phase needs K >= 1");
  VARBENCH_REQUIRE(sigma_hi >= 0.0 && sigma_hi <= 1.0 && sigma_lo >= 0.0 && sigma_lo <= 1.0,
                   "two_phase sigma out of range");
  std::vector<double> out(static_cast<std::size_t>(K));
  for (int k = 1; k <= K; ++k) out[static_cast<std::size_t>(k - 1)] = k <= switch_round ? sigma_hi : sigma_lo;
  return out;
}

std::vector<double> uniform_draw(int K, double lo, double hi, std::uint64_t seed) {
  VARBENCH_REQUIRE(K >= 1 && 0.0 <= lo && lo <= hi && hi <= 1.0, "uniform_draw range invalid");
  Rng rng(seed, StreamTag::kSigma, 0);
  std::vector<double> out(static_cast<std::size_t>(K));
  for (auto& s : out) s = rng.uniform(lo, hi);
  return out;
}

}  // namespace sigma_schedule

LinearBanditEnv::LinearBanditEnv(FeatureVector theta_star, ArmGenerator arms,
                                 std::vector<double> sigma)
    : theta_star_(std::move(theta_star)), arms_(std::move(arms)), sigma_(std::move(sigma)) {
  VARBENCH_REQUIRE(!sigma_.empty(), "bandit horizon must be >= 1");
  VARBENCH_REQUIRE(arms_.dim() == theta_star_.dim(), "theta* and arm dimensions differ");
  VARBENCH_REQUIRE(theta_star_.norm() <= 1.0 + 1e-12, "theta* must lie in the unit ball");
  double sigma_max = 0.0;
  for (double s : sigma_) {
    VARBENCH_REQUIRE(s >= 0.0 && s <= 1.0, "sigma_k must lie in [0, 1]");
    sigma_max = std::max(sigma_max, s);
  }
  const double worst = arms_.worst_case_mean(theta_star_) + sigma_max;
  if (worst > 1.0 + 1e-12) {
    throw ContractViolation("reward bound violated: max |x^T theta*| + max sigma = " +
                            std::to_string(worst) + " > 1; shrink theta* or sigma");
  }
}

ArmSet LinearBanditEnv::observe_arms(int k, std::uint64_t seed) const {
  VARBENCH_REQUIRE(k >= 1 && k <= K(), "round index out of range");
  return arms_.generate(stream_seed(seed, StreamTag::kArms, static_cast<std::uint64_t>(k)));
}

double LinearBanditEnv::noise(int k, std::uint64_t seed) const {
  VARBENCH_REQUIRE(k >= 1 && k <= K(), "round index out of range");
  Rng rng(seed, StreamTag::kNoise, static_cast<std::uint64_t>(k));
  return sigma(k) * rng.rademacher();
}

double LinearBanditEnv::pull(int k, const ArmSet& arms, const FeatureVector& x,
                             std::uint64_t seed) const {
  VARBENCH_REQUIRE(std::find(arms.begin(), arms.end(), x) != arms.end(),
                   "pulled arm is not in the round's arm set");
  const double r = x.dot(theta_star_) + noise(k, seed);
  return std::clamp(r, -1.0, 1.0);
}

double LinearBanditEnv::instantaneous_regret(const ArmSet& arms, const FeatureVector& x) const {
  VARBENCH_REQUIRE(!arms.empty(), "empty arm set");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& a : arms) best = std::max(best, a.dot(theta_star_));
  return std::max(0.0, best - x.dot(theta_star_));
}

}  // namespace varbench
