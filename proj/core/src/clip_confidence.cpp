#include "varbench/clip_confidence.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "varbench/error.h"

namespace varbench {

double clip(double z, int level) {
  const double t = level_threshold(level);
  if (z > t) return t;
  if (z < -t) return -t;
  return z;
}

BanditSchedule compute_schedule(int d, int K, double delta, double iota_scale) {
  VARBENCH_REQUIRE(d >= 1 && K >= 1, "compute_schedule needs d >= 1 and K >= 1");
  VARBENCH_REQUIRE(delta > 0.0 && delta <= std::exp(-1.0),
                   "delta must lie in (0, e^-1], got " + std::to_string(delta));
  VARBENCH_REQUIRE(iota_scale > 0.0, "iota_scale must be positive");
  BanditSchedule s;
  s.d = d;
  s.K = K;
  s.delta = delta;
  s.iota_scale = iota_scale;
  s.levels = std::max(1, static_cast<int>(std::floor(std::log2(1.0 + static_cast<double>(K) / d))));
  // ln((12 K 2^L)^(d+2) / delta) expanded to avoid overflow.
  const double log_base = std::log(12.0 * K) + s.levels * std::log(2.0);
  s.iota = iota_scale * 128.0 * ((d + 2) * log_base - std::log(delta));
  return s;
}

std::size_t EpsNet::nearest_index(const FeatureVector& p) const {
  VARBENCH_REQUIRE(p.dim() == dim, "nearest_index dimension mismatch");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < size(); ++j) {
    const double dist = (coords.col(static_cast<Eigen::Index>(j)) - p.vec()).squaredNorm();
    if (dist < best_d) {
      best_d = dist;
      best = j;
    }
  }
  return best;
}

EpsNet build_net(int d, double radius, double xi, std::size_t cap) {
  VARBENCH_REQUIRE(d >= 1 && d <= kMaxDim, "net dimension out of range");
  VARBENCH_REQUIRE(radius > 0.0 && xi > 0.0, "net radius and xi must be positive");
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  const double bound = std::pow(std::ceil(radius * sqrt_d / xi) + 1.0, d);
  if (bound > static_cast<double>(cap)) {
    throw ResourceError("eps-net of radius " + std::to_string(radius) + " at xi=" +
                        std::to_string(xi) + " may hold up to " + std::to_string(bound) +
                        " points (cap " + std::to_string(cap) + "); use a coarser xi");
  }
  const double h = 2.0 * xi / sqrt_d;
  const long span = static_cast<long>(std::floor((radius + xi) / h + 1e-12));
  const double outer_sq = (radius + xi) * (radius + xi);

  EpsNet net;
  net.dim = d;
  net.radius = radius;
  net.covering_radius = xi;

  std::vector<long> idx(static_cast<std::size_t>(d), -span);
  std::map<std::vector<double>, bool> seen;
  Eigen::VectorXd p(d);
  while (true) {
    for (int i = 0; i < d; ++i) p[i] = static_cast<double>(idx[static_cast<std::size_t>(i)]) * h;
    const double nsq = p.squaredNorm();
    if (nsq <= outer_sq * (1.0 + 1e-12)) {
      Eigen::VectorXd q = p;
      if (nsq > radius * radius) q *= radius / std::sqrt(nsq);
      std::vector<double> key(q.data(), q.data() + d);
      if (seen.emplace(std::move(key), true).second) {
        net.points.emplace_back(q);
        if (net.points.size() > cap) {
          throw ResourceError("eps-net exceeded cap of " + std::to_string(cap) + " points");
        }
      }
    }
    int axis = d - 1;
    while (axis >= 0 && idx[static_cast<std::size_t>(axis)] == span) {
      idx[static_cast<std::size_t>(axis)] = -span;
      --axis;
    }
    if (axis < 0) break;
    ++idx[static_cast<std::size_t>(axis)];
  }
  net.coords.resize(d, static_cast<Eigen::Index>(net.points.size()));
  for (std::size_t j = 0; j < net.points.size(); ++j) {
    net.coords.col(static_cast<Eigen::Index>(j)) = net.points[j].vec();
  }
  return net;
}

FeatureVector sample_ball(int d, double radius, Rng& rng) {
  Eigen::VectorXd v(d);
  double n = 0.0;
  do {
    for (int i = 0; i < d; ++i) v[i] = rng.normal();
    n = v.norm();
  } while (n == 0.0);
  const double r = radius * std::pow(rng.uniform(), 1.0 / d);
  return FeatureVector(v * (r / n));
}

double covering_probe(const EpsNet& net, int samples, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < samples; ++t) {
    const FeatureVector p = sample_ball(net.dim, net.radius, rng);
    const std::size_t j = net.nearest_index(p);
    worst = std::max(worst, (net.coords.col(static_cast<Eigen::Index>(j)) - p.vec()).norm());
  }
  return worst;
}

double residual(const FeatureVector& theta, const FeatureVector& x, double y) {
  return y - x.dot(theta);
}

BanditHistory::BanditHistory(std::shared_ptr<const EpsNet> mu_net, int levels)
    : mu_net_(std::move(mu_net)), levels_(levels) {
  VARBENCH_REQUIRE(mu_net_ != nullptr, "BanditHistory needs a mu-net");
  VARBENCH_REQUIRE(levels_ >= 1, "BanditHistory needs at least one level");
  dim_ = mu_net_->dim;
  const auto d = static_cast<std::size_t>(dim_);
  stride_ = kB + 2 * d + d * (d + 1) / 2;
  cache_.assign(static_cast<std::size_t>(levels_),
                std::vector<double>(mu_net_->size() * stride_, 0.0));
}

void BanditHistory::accumulate(std::vector<double>& cache, int level, const FeatureVector& x,
                               double y) const {
  const std::size_t d = static_cast<std::size_t>(dim_);
  const Eigen::VectorXd proj = mu_net_->coords.transpose() * x.vec();
  const double* xv = x.vec().data();
  for (std::size_t j = 0; j < mu_net_->size(); ++j) {
    const double c = clip(proj[static_cast<Eigen::Index>(j)], level);
    if (c == 0.0) continue;
    double* st = cache.data() + j * stride_;
    const double c2 = c * c;
    st[kCount] += 1.0;
    st[kAbs] += std::abs(c);
    st[kCy] += c * y;
    st[kC2y2] += c2 * y * y;
    double* b = st + kB;
    double* g = st + kB + d;
    double* q = st + kB + 2 * d;
    std::size_t t = 0;
    for (std::size_t a = 0; a < d; ++a) {
      b[a] += c * xv[a];
      g[a] += c2 * y * xv[a];
      for (std::size_t e = a; e < d; ++e) q[t++] += c2 * xv[a] * xv[e];
    }
  }
}

void BanditHistory::append(const FeatureVector& x, double y) {
  VARBENCH_REQUIRE(x.dim() == dim_, "history step dimension mismatch");
  VARBENCH_REQUIRE(std::abs(y) <= 1.0, "bandit observations must satisfy |y| <= 1");
  VARBENCH_REQUIRE(x.norm() <= 1.0 + 1e-12, "bandit arms must lie in the unit ball");
  for (int level = 1; level <= levels_; ++level) {
    accumulate(cache_[static_cast<std::size_t>(level - 1)], level, x, y);
  }
  steps_.push_back({x, y});
}

const double* BanditHistory::stats(int level, std::size_t mu_index) const {
  return cache_[static_cast<std::size_t>(level - 1)].data() + mu_index * stride_;
}

std::vector<double> BanditHistory::recompute_level(int level) const {
  std::vector<double> fresh(mu_net_->size() * stride_, 0.0);
  for (const auto& st : steps_) accumulate(fresh, level, st.x, st.y);
  return fresh;
}

SpdMatrix w_matrix(const BanditHistory& history, std::size_t prefix, int level,
                   const FeatureVector& mu, double lambda) {
  VARBENCH_REQUIRE(prefix <= history.size(), "w_matrix prefix beyond history");
  VARBENCH_REQUIRE(lambda > 0.0, "w_matrix lambda must be positive");
  VARBENCH_REQUIRE(mu.dim() == history.dim(), "w_matrix mu dimension mismatch");
  const double t = level_threshold(level);
  const int d = history.dim();
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(d, d) * (t * lambda);
  for (std::size_t s = 0; s < prefix; ++s) {
    const auto& x = history.step(s).x.vec();
    const double a = std::abs(x.dot(mu.vec()));
    const double weight = a <= t ? 1.0 : t / a;
    w.noalias() += weight * x * x.transpose();
  }
  return spd_from_trusted(std::move(w));
}

ConfsetResult theta_in_confset(const FeatureVector& theta, const BanditHistory& history,
                               const BanditSchedule& schedule, MembershipOptions opts) {
  VARBENCH_REQUIRE(theta.dim() == history.dim(), "theta dimension mismatch");
  VARBENCH_REQUIRE(schedule.levels == history.levels(), "schedule/history level mismatch");
  VARBENCH_REQUIRE(theta.norm() <= 1.0 + 1e-9, "theta must lie in the unit ball");
  ConfsetResult result;
  const double iota = schedule.iota;
  const std::size_t d = static_cast<std::size_t>(history.dim());
  const double* th = theta.vec().data();
  const std::size_t n_mu = history.mu_net().size();
  const std::size_t stride = history.stride();
  for (int level = 1; level <= schedule.levels; ++level) {
    const double floor_term = level_threshold(level) * iota;
    const double* base = history.stats(level, 0);
    for (std::size_t j = 0; j < n_mu; ++j) {
      const double* st = base + j * stride;
      if (opts.prune && (st[BanditHistory::kCount] <= iota ||
                         2.0 * st[BanditHistory::kAbs] <= floor_term)) {
        continue;
      }
      const double* b = st + BanditHistory::kB;
      const double* g = b + d;
      const double* q = b + 2 * d;
      double s1 = st[BanditHistory::kCy];
      double s2 = st[BanditHistory::kC2y2];
      std::size_t t = 0;
      for (std::size_t a = 0; a < d; ++a) {
        s1 -= b[a] * th[a];
        s2 -= 2.0 * g[a] * th[a];
        s2 += q[t++] * th[a] * th[a];
        for (std::size_t e = a + 1; e < d; ++e) s2 += 2.0 * q[t++] * th[a] * th[e];
      }
      s2 = std::max(0.0, s2);
      const double lhs = std::abs(s1);
      const double rhs = std::sqrt(s2 * iota) + floor_term;
      if (lhs > rhs) {
        result.member = false;
        result.level = level;
        result.mu_index = j;
        result.lhs = lhs;
        result.rhs = rhs;
        return result;
      }
    }
  }
  return result;
}

}  // namespace varbench
