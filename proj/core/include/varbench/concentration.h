#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "varbench/rng.h"

namespace varbench {

// Adapted bounded sequences with E[X_i | past] = 0 and a known conditional
// second moment. All laws are two-point or symmetric.
enum class StreamPreset {
  kRademacher,        // +-1
  kScaledRademacher,  // +-0.5
  kAsymmetric,        // +0.8 w.p. 0.2, -0.2 w.p. 0.8
  kAdaptiveSigma,     // sigma_i * (+-1) with sigma_i = 0.5 if S_{i-1} >= 0, else 0.1
};

std::string to_string(StreamPreset p);
StreamPreset stream_preset_from_string(const std::string& name);
std::vector<StreamPreset> all_stream_presets();

struct MartingaleStream {
  std::vector<double> x;
  std::vector<double> cond_second_moment;
  double bound = 1.0;  // |x_i| <= bound samplewise
};

MartingaleStream generate_stream(StreamPreset preset, int n, Rng& rng);

struct BoundSides {
  double lhs = 0.0;
  double rhs = 0.0;
};

// |sum X| against 8 sqrt(sum X^2 ln(1/delta)) + 16 b ln(1/delta); needs delta <= e^-1.
BoundSides bernstein_bound(const std::vector<double>& xs, double b, double delta);
// sum X^2 against sum 8 E[X^2 | F] + 4 ln(4/delta); a violation is lhs >= rhs.
BoundSides variance_sum_bound(const std::vector<double>& xs,
                              const std::vector<double>& cond_second_moments, double delta);
// |M_n| against 2 sqrt(sum E[dM^2 | F] ln(1/delta)) + 2 sqrt(eps ln(1/delta)) + 2 b ln(1/delta).
BoundSides freedman_eps_bound(const std::vector<double>& increments,
                              const std::vector<double>& cond_variances, double b, double eps,
                              double delta);

double bernstein_budget(int n, double delta);                    // 6 delta log2 n
double variance_sum_budget(int n, double delta);                 // (ceil(log2 n) + 1) delta
double freedman_budget(int n, double b, double eps, double delta);  // 2 (log2(b^2 n / eps) + 1) delta

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};
WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z = 2.0);

enum class ConcentrationCheck {
  kBernstein,
  kVarianceSum,
  kFreedman,
  kEmpiricalVariance,  // for all k: sum eps^2 <= 8 sum sigma^2 + 4 ln(4K(log2 K + 2)/delta)
};
std::string to_string(ConcentrationCheck c);

struct McParams {
  int n = 1000;
  double delta = 0.05;
  double eps = 0.0625;  // Freedman only
  std::size_t replicates = 10000;
  std::uint64_t seed = 0;
};

struct McResult {
  ConcentrationCheck check = ConcentrationCheck::kBernstein;
  StreamPreset preset = StreamPreset::kRademacher;
  McParams params;
  std::size_t violations = 0;
  double rate = 0.0;
  double raw_budget = 0.0;
  double budget = 0.0;  // min(1, raw_budget)
  bool vacuous = false; // raw budget >= 1
  WilsonInterval interval;
  bool pass = false;    // Wilson lower end at z = 2 does not exceed the budget
};

McResult run_concentration_check(ConcentrationCheck check, StreamPreset preset, const McParams& params);

// Default Monte Carlo battery: every check on every preset, at the
// reference parameters and at a small delta where the budgets are informative.
std::vector<McResult> run_concentration_battery(std::size_t replicates, std::uint64_t seed);

// Closed forms.
double solve_recursion_implicit(double l1, double l2, double l3, double l4);   // 22 l2^2 + 6 l4 + 4 l2 sqrt(2 l3)
double solve_recursion_bootstrap(double l1, double l2, double l3, double l4);
// max{(l2 + sqrt(l2^2 + l4))^2, l2 sqrt(8 l3) + l4}

struct WorstCaseSequence {
  int kappa = 1;
  std::vector<double> a;  // a[0] = a_1, ..., a[kappa] = a_{kappa+1} = l1
  double bound = 0.0;
  bool recursion_holds = true;  // every a_i checked against its inequality to 1e-9
  double max_residual = 0.0;
};

// Backward greedy maximization with kappa = max(ceil(log2 l1), 1):
//   implicit: a_i = min(l1, largest a with a <= l2 sqrt(a + a_{i+1} + 2^(i+1) l3) + l4),
//           found by fixed-point iteration to 1e-10.
//   bootstrap: a_i = min(l1, l2 sqrt(a_{i+1} + 2^(i+1) l3) + l4).
WorstCaseSequence worst_case_implicit(double l1, double l2, double l3, double l4);
WorstCaseSequence worst_case_bootstrap(double l1, double l2, double l3, double l4);

struct RecursionGridPoint {
  double l1 = 0.0, l2 = 0.0, l3 = 0.0, l4 = 0.0;
  double implicit_a1 = 0.0, implicit_bound = 0.0;
  double bootstrap_a1 = 0.0, bootstrap_bound = 0.0;
  bool pass = true;  // both sequences satisfy their recursions and stay under their bounds
};

struct RecursionGridReport {
  std::vector<RecursionGridPoint> points;
  std::size_t failures = 0;
  double max_ratio_implicit = 0.0;
  double max_ratio_bootstrap = 0.0;
  bool pass() const { return failures == 0; }
};

// 5 x 4 x 5 grid over (l2, l3, l4), each at l1 in {1e2, 1e6, 1e12}.
RecursionGridReport verify_recursion_grid();

struct MmConstants {
  double outer = 1.0;
  double log_term = 1.0;  // multiplies d log^5(d H K)
  double tail = 1.0;      // multiplies log(1/delta)
};

// outer * sqrt(M_next + log_term d log^5(d H K_total) + 2^(m+1) (K + R0) log(1/delta))
//   + tail log(1/delta)
double mm_recursion_rhs(double M_next, double K, double R0, int m, int d, int H, int K_total,
                        double delta, const MmConstants& c = {});

}  // namespace varbench
