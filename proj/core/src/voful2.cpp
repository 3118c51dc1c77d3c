#include "varbench/voful2.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "varbench/error.h"

namespace varbench {

double default_theta_xi(int d) { return d <= 2 ? 0.05 : 0.15; }

VofulState::VofulState(int d, int K, const VofulConfig& config)
    : config_(config),
      schedule_(compute_schedule(d, K, config.delta, config.iota_scale)),
      theta_net_(std::make_shared<const EpsNet>(build_net(d, 1.0, config.theta_xi, config.net_cap))),
      mu_net_(std::make_shared<const EpsNet>(build_net(d, 2.0, config.mu_xi, config.net_cap))),
      history_(mu_net_, schedule_.levels),
      mask_(theta_net_->size(), 1) {
  feasible_.resize(theta_net_->size());
  for (std::size_t j = 0; j < feasible_.size(); ++j) feasible_[j] = j;
}

ArmSelection VofulState::select_arm(const ArmSet& arms) const {
  VARBENCH_REQUIRE(!arms.empty(), "select_arm needs a non-empty arm set");
  ArmSelection best;
  best.value = -std::numeric_limits<double>::infinity();
  best.used_fallback = feasible_.empty();
  const auto& coords = theta_net_->coords;
  auto scan = [&](std::size_t a, std::size_t j) {
    const double v = arms[a].vec().dot(coords.col(static_cast<Eigen::Index>(j)));
    if (v > best.value) {
      best.value = v;
      best.arm = a;
      best.theta_index = j;
    }
  };
  for (std::size_t a = 0; a < arms.size(); ++a) {
    if (best.used_fallback) {
      for (std::size_t j = 0; j < theta_net_->size(); ++j) scan(a, j);
    } else {
      for (std::size_t j : feasible_) scan(a, j);
    }
  }
  best.theta = theta_net_->points[best.theta_index];
  return best;
}

void VofulState::update(const FeatureVector& x, double y) {
  history_.append(x, y);
  std::vector<std::size_t> kept;
  kept.reserve(feasible_.size());
  for (std::size_t j : feasible_) {
    if (theta_in_confset(theta_net_->points[j], history_, schedule_, config_.membership).member) {
      kept.push_back(j);
    } else {
      mask_[j] = 0;
    }
  }
  feasible_ = std::move(kept);
}

int peel_level(double v, int levels) {
  if (v > 2.0) return 1;  // |x^T mu| <= 2 for theta in the unit ball; OFUL can exceed it
  for (int l = 1; l <= levels; ++l) {
    const double lo = 2.0 * level_threshold(l);
    if (v > lo && v <= 2.0 * lo) return l;
  }
  return 0;
}

namespace {

double best_mean(const ArmSet& arms, const FeatureVector& theta) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& a : arms) best = std::max(best, a.dot(theta));
  return best;
}

}  // namespace

RegretRecord run_voful2(const LinearBanditEnv& env, const VofulConfig& config,
                        std::uint64_t seed) {
  VofulState state(env.dim(), env.K(), config);
  const std::size_t nearest = state.theta_net().nearest_index(env.theta_star());
  const FeatureVector& theta_near = state.theta_net().points[nearest];

  RegretRecord rec;
  rec.algo = "voful2";
  rec.d = env.dim();
  rec.K = env.K();
  rec.rows.reserve(static_cast<std::size_t>(env.K()));
  double cum = 0.0;
  double a_k = 0.0;
  for (int k = 1; k <= env.K(); ++k) {
    const ArmSet arms = env.observe_arms(k, seed);
    RegretRow row;
    row.k = k;
    row.coverage = state.feasible_mask()[nearest] != 0;
    row.feasible_count = state.feasible_count();
    const ArmSelection sel = state.select_arm(arms);
    const FeatureVector& x = arms[sel.arm];
    const double y = env.pull(k, arms, x, seed);
    row.arm_idx = sel.arm;
    row.inst_regret = env.instantaneous_regret(arms, x);
    cum += row.inst_regret;
    row.cum_regret = cum;
    row.sigma_sq = env.sigma(k) * env.sigma(k);
    a_k += row.sigma_sq;
    row.A_k = a_k;
    row.optimistic_value = sel.value;
    row.x_mu = x.dot(sel.theta - env.theta_star());
    row.ell_bucket = peel_level(row.x_mu, state.schedule().levels);
    row.eps_star = y - x.dot(env.theta_star());
    row.covered_value = best_mean(arms, theta_near);
    row.fallback = sel.used_fallback;
    row.x = x;
    row.theta_k = sel.theta;
    if (sel.used_fallback) ++rec.fallback_rounds;
    rec.rows.push_back(std::move(row));
    state.update(x, y);
  }
  return rec;
}

RegretRecord run_oful_baseline(const LinearBanditEnv& env, const OfulConfig& config,
                               std::uint64_t seed) {
  VARBENCH_REQUIRE(config.delta > 0.0 && config.delta < 1.0, "OFUL delta must lie in (0, 1)");
  VARBENCH_REQUIRE(config.lambda > 0.0, "OFUL lambda must be positive");
  const int d = env.dim();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(d, d) * config.lambda;
  Eigen::VectorXd xy = Eigen::VectorXd::Zero(d);

  RegretRecord rec;
  rec.algo = "oful";
  rec.d = d;
  rec.K = env.K();
  const int levels = std::max(1, static_cast<int>(std::floor(std::log2(1.0 + static_cast<double>(env.K()) / d))));
  double cum = 0.0;
  double a_k = 0.0;
  for (int k = 1; k <= env.K(); ++k) {
    const double n = k - 1;
    const double beta = std::sqrt(config.lambda) +
                        std::sqrt(2.0 * std::log(1.0 / config.delta) +
                                  d * std::log(1.0 + n / (config.lambda * d)));
    Eigen::LLT<Eigen::MatrixXd> llt(v);
    if (llt.info() != Eigen::Success) throw SingularMatrixError("OFUL Gram matrix not PD");
    const Eigen::VectorXd theta_hat = llt.solve(xy);

    const ArmSet arms = env.observe_arms(k, seed);
    std::size_t best = 0;
    double best_ucb = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_dir = Eigen::VectorXd::Zero(d);
    for (std::size_t a = 0; a < arms.size(); ++a) {
      const Eigen::VectorXd vinv_x = llt.solve(arms[a].vec());
      const double width = std::sqrt(std::max(0.0, arms[a].vec().dot(vinv_x)));
      const double ucb = arms[a].vec().dot(theta_hat) + beta * width;
      if (ucb > best_ucb) {
        best_ucb = ucb;
        best = a;
        best_dir = width > 0.0 ? Eigen::VectorXd(vinv_x / width) : Eigen::VectorXd::Zero(d);
      }
    }
    const FeatureVector& x = arms[best];
    const double y = env.pull(k, arms, x, seed);
    const Eigen::VectorXd err = theta_hat - env.theta_star().vec();

    RegretRow row;
    row.k = k;
    row.coverage = std::sqrt(std::max(0.0, err.dot(v * err))) <= beta;
    row.arm_idx = best;
    row.inst_regret = env.instantaneous_regret(arms, x);
    cum += row.inst_regret;
    row.cum_regret = cum;
    row.sigma_sq = env.sigma(k) * env.sigma(k);
    a_k += row.sigma_sq;
    row.A_k = a_k;
    row.optimistic_value = best_ucb;
    row.theta_k = FeatureVector(Eigen::VectorXd(theta_hat + beta * best_dir));
    row.x_mu = best_ucb - x.dot(env.theta_star());
    row.ell_bucket = peel_level(row.x_mu, levels);
    row.eps_star = y - x.dot(env.theta_star());
    row.covered_value = best_mean(arms, env.theta_star());
    row.x = x;
    rec.rows.push_back(std::move(row));

    v.noalias() += x.vec() * x.vec().transpose();
    xy += y * x.vec();
  }
  return rec;
}

std::size_t PeelingHistogram::total() const {
  std::size_t t = overflow;
  for (auto c : counts) t += c;
  return t;
}

PeelingHistogram peeling_histogram(const RegretRecord& record, const BanditSchedule& schedule) {
  PeelingHistogram h;
  h.counts.assign(static_cast<std::size_t>(schedule.levels), 0);
  for (const auto& row : record.rows) {
    const int l = peel_level(row.x_mu, schedule.levels);
    if (l == 0) {
      ++h.overflow;
    } else {
      ++h.counts[static_cast<std::size_t>(l - 1)];
    }
  }
  return h;
}

bool check_event_e2(const RegretRecord& record, const LinearBanditEnv& env, double delta) {
  VARBENCH_REQUIRE(delta > 0.0 && delta < 1.0, "E2 delta must lie in (0, 1)");
  const double K = env.K();
  const double tail = 4.0 * std::log(4.0 * K * (std::log2(K) + 2.0) / delta);
  double lhs = 0.0;
  for (const auto& row : record.rows) {
    lhs += row.eps_star * row.eps_star;
    if (lhs > 8.0 * row.A_k + tail) return false;
  }
  return true;
}

std::vector<WidthDiagnostic> width_diagnostics(const RegretRecord& record,
                                               const FeatureVector& theta_star,
                                               const BanditSchedule& schedule) {
  std::vector<WidthDiagnostic> out;
  const int d = record.d;
  for (std::size_t k = 0; k < record.rows.size(); ++k) {
    const auto& row = record.rows[k];
    const int l = peel_level(row.x_mu, schedule.levels);
    if (l == 0) continue;
    const Eigen::VectorXd mu = row.theta_k.vec() - theta_star.vec();
    const double t = level_threshold(l);
    Eigen::MatrixXd w = Eigen::MatrixXd::Identity(d, d) * (t * schedule.lambda);
    for (std::size_t s = 0; s < k; ++s) {
      const auto& xs = record.rows[s].x.vec();
      const double a = std::abs(xs.dot(mu));
      w.noalias() += (a <= t ? 1.0 : t / a) * xs * xs.transpose();
    }
    const double a_prev = k == 0 ? 0.0 : record.rows[k - 1].A_k;
    const double width = std::sqrt(a_prev * schedule.iota) + schedule.iota;
    const SpdMatrix wm = spd_from_trusted(std::move(w));
    WidthDiagnostic diag;
    diag.k = row.k;
    diag.level = l;
    diag.mu_ratio = mu.dot(wm.mat() * mu) / (t * width);
    diag.arm_ratio = row.x_mu / (inv_weighted_norm_sq(row.x, wm) * width);
    out.push_back(diag);
  }
  return out;
}

}  // namespace varbench
