#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "varbench/linalg.h"
#include "varbench/rng.h"

namespace varbench {

// sign(z) * min(|z|, 2^-level), with clip(0, level) = 0.
double clip(double z, int level);

inline double level_threshold(int level) { return std::ldexp(1.0, -level); }

struct BanditSchedule {
  int d = 1;
  int K = 1;
  int levels = 1;  // L
  double iota = 0.0;
  double delta = 0.0;
  double iota_scale = 1.0;
  double lambda = 1.0;
};

// L = max(1, floor(log2(1 + K/d))),
// iota = iota_scale * 128 * ln((12 K 2^L)^(d+2) / delta).
BanditSchedule compute_schedule(int d, int K, double delta, double iota_scale = 1.0);

inline constexpr std::size_t kDefaultNetCap = 2'000'000;

// Finite subset of the radius-R ball whose covering radius is at most xi.
// Built from an axis grid of spacing 2 xi / sqrt(d); grid points that fall in
// the shell R < |p| <= R + xi are projected onto the sphere of radius R
// (projection onto a convex set never increases distances).
struct EpsNet {
  int dim = 0;
  double radius = 0.0;
  double covering_radius = 0.0;
  std::vector<FeatureVector> points;
  Eigen::MatrixXd coords;  // dim x size, column j == points[j]

  std::size_t size() const { return points.size(); }
  std::size_t nearest_index(const FeatureVector& p) const;
};

EpsNet build_net(int d, double radius, double xi, std::size_t cap = kDefaultNetCap);

// Largest distance from `samples` uniform draws in the ball to the net.
double covering_probe(const EpsNet& net, int samples, std::uint64_t seed);

// Uniform draw from the d-ball of the given radius.
FeatureVector sample_ball(int d, double radius, Rng& rng);

// y - x^T theta.
double residual(const FeatureVector& theta, const FeatureVector& x, double y);

struct BanditStep {
  FeatureVector x;
  double y = 0.0;
};

// Append-only (x, y) history with per-level, per-mu sufficient statistics
// for the confidence-set test. With c = clip(x^T mu, level):
//   count   = #{s : c_s != 0}
//   abs     = sum |c_s|
//   cy      = sum c y          b = sum c x
//   c2y2    = sum c^2 y^2      g = sum c^2 y x      Q = sum c^2 x x^T
// so that for any theta
//   sum c eps(theta)   = cy - b^T theta
//   sum c^2 eps^2      = c2y2 - 2 g^T theta + theta^T Q theta.
class BanditHistory {
 public:
  BanditHistory(std::shared_ptr<const EpsNet> mu_net, int levels);

  void append(const FeatureVector& x, double y);

  std::size_t size() const { return steps_.size(); }
  const BanditStep& step(std::size_t s) const { return steps_[s]; }
  const std::vector<BanditStep>& steps() const { return steps_; }
  int levels() const { return levels_; }
  int dim() const { return dim_; }
  const EpsNet& mu_net() const { return *mu_net_; }

  // Layout of one (level, mu) record inside the flat cache.
  std::size_t stride() const { return stride_; }
  static constexpr std::size_t kCount = 0, kAbs = 1, kCy = 2, kC2y2 = 3, kB = 4;
  std::size_t g_offset() const { return kB + dim_; }
  std::size_t q_offset() const { return kB + 2 * dim_; }

  const double* stats(int level, std::size_t mu_index) const;

  // Rebuild the statistics of one level from the raw steps.
  std::vector<double> recompute_level(int level) const;
  const std::vector<double>& level_cache(int level) const { return cache_[level - 1]; }

 private:
  void accumulate(std::vector<double>& cache, int level, const FeatureVector& x, double y) const;

  std::shared_ptr<const EpsNet> mu_net_;
  int levels_;
  int dim_;
  std::size_t stride_;
  std::vector<BanditStep> steps_;
  std::vector<std::vector<double>> cache_;  // [level - 1][mu * stride + field]
};

// W_{level,prefix}(mu) = 2^-level lambda I + sum_{s < prefix} min(1, 2^-level / |x_s^T mu|) x_s x_s^T.
// A step with x_s^T mu = 0 carries weight 1.
SpdMatrix w_matrix(const BanditHistory& history, std::size_t prefix, int level,
                   const FeatureVector& mu, double lambda);

struct MembershipOptions {
  // Skip (level, mu) pairs that provably cannot be violated: when at most
  // iota steps have a nonzero clip (Cauchy-Schwarz), or when
  // 2 sum|c| <= 2^-level iota (|eps| <= 2).
  bool prune = true;
};

struct ConfsetResult {
  bool member = true;
  int level = 0;              // violating level when !member
  std::size_t mu_index = 0;   // violating net point when !member
  double lhs = 0.0;
  double rhs = 0.0;
  // The universal quantifier over the radius-2 ball is evaluated on the
  // history's finite mu-net only.
  bool net_relaxed = true;
};

// For every level in [L] and every mu on the history's net:
//   |sum_s clip(x_s^T mu) eps_s(theta)| <= sqrt(sum_s clip(..)^2 eps_s^2 iota) + 2^-level iota.
ConfsetResult theta_in_confset(const FeatureVector& theta, const BanditHistory& history,
                               const BanditSchedule& schedule, MembershipOptions opts = {});

}  // namespace varbench
