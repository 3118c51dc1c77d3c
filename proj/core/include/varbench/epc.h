#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "varbench/linalg.h"

namespace varbench {

// A sequence x_1..x_n in the unit ball with regularizer tau and threshold q.
struct EpcInstance {
  std::vector<FeatureVector> xs;
  double tau = 1.0;
  double q = 1.0;

  int dim() const { return xs.empty() ? 0 : xs.front().dim(); }
  void validate() const;
};

struct ExceedanceResult {
  std::size_t count = 0;
  std::vector<std::size_t> indices;  // 1-based s with ||x_s||^2_{V_{s-1}^-1} >= q
  std::vector<double> values;        // ||x_s||^2_{V_{s-1}^-1} for every s
};

// Walks V_{s-1} = tau I + sum_{t<s} x_t x_t^T with a rank-one Cholesky update.
ExceedanceResult count_exceedances(const EpcInstance& inst);

// 2 d / ln(1+q) * ln(1 + (2/e) / (ln(1+q) tau)).
double epc_bound(int d, double tau, double q);

// Same expression with leading constant d / ln(1+q). Not a proven bound in
// this form; tracked only to see whether it is ever exceeded.
double epc_bound_halved(int d, double tau, double q);

// Sequence generators.
EpcInstance repeated_direction(int d, double tau, double q, std::size_t n);
EpcInstance random_unit(int d, double tau, double q, std::size_t n, std::uint64_t seed);
// x_s = unit eigenvector for the smallest eigenvalue of V_{s-1}. Within a
// tied eigenspace the first coordinate axis with a nonzero projection is
// used; sign is fixed so the first nonzero coordinate is positive.
EpcInstance greedy_adversary(int d, double tau, double q, std::size_t n);

// d ln((d tau + |J|)/d) >= d ln(tr W / d) >= ln|W| >= d ln tau + |J| ln(1+q)
// for W = tau I + sum_{s in J} x_s x_s^T, each step with 1e-8 relative slack.
struct DetTraceCheck {
  bool ok = true;
  std::size_t j_size = 0;
  double log_count_bound = 0.0;
  double log_trace_bound = 0.0;
  double log_det = 0.0;
  double log_lower = 0.0;
};
DetTraceCheck check_det_trace_chain(const EpcInstance& inst);

enum class EpcFamily { kRepeated, kRandomUnit, kGreedy };
std::string to_string(EpcFamily f);
EpcFamily epc_family_from_string(const std::string& s);

struct EpcGrid {
  std::vector<int> dims{1, 2, 3, 4, 5};
  std::vector<double> taus{0.25, 1.0, 4.0};
  std::vector<double> qs{0.1, 0.5, 1.0, 2.0};
  std::vector<std::size_t> ns{100, 1000, 10000};
};

struct EpcReportEntry {
  EpcFamily family = EpcFamily::kRepeated;
  std::uint64_t seed = 0;
  int d = 0;
  double tau = 0.0;
  double q = 0.0;
  std::size_t n = 0;
  std::size_t count = 0;
  double bound = 0.0;
  double ratio = 0.0;
  bool pass = true;
  bool chain_ok = true;
  bool halved_pass = true;
};

struct EpcFailure {
  EpcReportEntry entry;
  EpcInstance instance;
};

struct EpcReport {
  std::vector<EpcReportEntry> entries;
  std::vector<EpcFailure> failures;
  std::size_t violations = 0;
  std::size_t chain_failures = 0;
  std::size_t halved_violations = 0;
  double max_ratio = 0.0;
  bool pass() const { return violations == 0 && chain_failures == 0; }
};

// Every family at every grid point; the random family is drawn for
// `random_seeds` seeds derived from `master_seed`.
EpcReport verify_epc(const std::vector<EpcFamily>& families, const EpcGrid& grid,
                     int random_seeds = 100, std::uint64_t master_seed = 0);

}  // namespace varbench
