#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "varbench/bandit_env.h"
#include "varbench/clip_confidence.h"

namespace varbench {

struct VofulConfig {
  double delta = 0.1;
  double iota_scale = 1.0;
  double theta_xi = 0.05;  // theta-net over the unit ball
  double mu_xi = 0.1;      // mu-net over the radius-2 ball
  std::size_t net_cap = kDefaultNetCap;
  MembershipOptions membership;
};

// Desk-scale theta-net resolution: 0.05 for d <= 2, 0.15 for d = 3 and up.
double default_theta_xi(int d);

struct ArmSelection {
  std::size_t arm = 0;
  std::size_t theta_index = 0;
  FeatureVector theta;
  double value = 0.0;
  bool used_fallback = false;  // feasible set was empty; searched the full net
};

// Optimistic search over the running intersection of clipped confidence
// sets, realized on a finite theta-net. The mask only ever loses points.
class VofulState {
 public:
  VofulState(int d, int K, const VofulConfig& config);

  // argmax over arms x feasible net points of x^T theta; ties go to the
  // lowest arm index, then the lowest net index.
  ArmSelection select_arm(const ArmSet& arms) const;

  // Append (x, y) and drop every feasible point that falls outside the new
  // confidence set Theta_k.
  void update(const FeatureVector& x, double y);

  const BanditSchedule& schedule() const { return schedule_; }
  const EpsNet& theta_net() const { return *theta_net_; }
  const EpsNet& mu_net() const { return *mu_net_; }
  const BanditHistory& history() const { return history_; }
  const std::vector<char>& feasible_mask() const { return mask_; }
  const std::vector<std::size_t>& feasible_indices() const { return feasible_; }
  std::size_t feasible_count() const { return feasible_.size(); }
  const VofulConfig& config() const { return config_; }

 private:
  VofulConfig config_;
  BanditSchedule schedule_;
  std::shared_ptr<const EpsNet> theta_net_;
  std::shared_ptr<const EpsNet> mu_net_;
  BanditHistory history_;
  std::vector<char> mask_;
  std::vector<std::size_t> feasible_;
};

struct RegretRow {
  int k = 0;
  std::size_t arm_idx = 0;
  double inst_regret = 0.0;
  double cum_regret = 0.0;
  double sigma_sq = 0.0;
  double A_k = 0.0;
  bool coverage = false;  // theta*'s nearest net point (or theta* itself) inside the set
  int ell_bucket = 0;     // peeling level of x_k^T mu_k; 0 = overflow bucket
  double optimistic_value = 0.0;
  double x_mu = 0.0;            // x_k^T (theta_k - theta*)
  double eps_star = 0.0;        // y_k - x_k^T theta*
  double covered_value = 0.0;   // max_x x^T theta~ for theta~ the nearest net point
  std::size_t feasible_count = 0;
  bool fallback = false;
  FeatureVector x;
  FeatureVector theta_k;
};

struct RegretRecord {
  std::string algo;
  int d = 0;
  int K = 0;
  std::vector<RegretRow> rows;
  std::size_t fallback_rounds = 0;

  double final_regret() const { return rows.empty() ? 0.0 : rows.back().cum_regret; }
};

// Level l with v in (2 * 2^-l, 2 * 2^(1-l)] for l in [L]; 0 when v <= 2 * 2^-L.
int peel_level(double v, int levels);

RegretRecord run_voful2(const LinearBanditEnv& env, const VofulConfig& config, std::uint64_t seed);

struct OfulConfig {
  double delta = 0.1;
  double lambda = 1.0;
};

// Ridge-ellipsoid optimism: argmax_x x^T theta_hat + beta ||x||_{V^-1} with
// beta = sqrt(lambda) + sqrt(2 ln(1/delta) + d ln(1 + n/(lambda d))) after
// n observations.
RegretRecord run_oful_baseline(const LinearBanditEnv& env, const OfulConfig& config,
                               std::uint64_t seed);

struct PeelingHistogram {
  std::vector<std::size_t> counts;  // counts[l - 1] for l in [L]
  std::size_t overflow = 0;
  std::size_t total() const;
};

PeelingHistogram peeling_histogram(const RegretRecord& record, const BanditSchedule& schedule);

// Event E2: for all k, sum_{s<=k} eps_s(theta*)^2 <= 8 A_k + 4 ln(4 K (log2 K + 2) / delta).
bool check_event_e2(const RegretRecord& record, const LinearBanditEnv& env, double delta);

// Width ratios for rows whose peeling level lies in [L]:
//   mu_ratio  = ||mu_k||^2_{W_{l,k-1}} / (2^-l (sqrt(A_{k-1} iota) + iota))
//   arm_ratio = x_k^T mu_k / (||x_k||^2_{W^-1_{l,k-1}} (sqrt(A_{k-1} iota) + iota))
// The underlying inequalities hold up to unspecified absolute constants, so
// these are reported, not asserted.
struct WidthDiagnostic {
  int k = 0;
  int level = 0;
  double mu_ratio = 0.0;
  double arm_ratio = 0.0;
};
std::vector<WidthDiagnostic> width_diagnostics(const RegretRecord& record,
                                               const FeatureVector& theta_star,
                                               const BanditSchedule& schedule);

}  // namespace varbench
