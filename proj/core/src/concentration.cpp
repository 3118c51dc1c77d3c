#include "varbench/concentration.h"

#include <algorithm>
#include <cmath>

#include "varbench/error.h"

namespace varbench {

std::string to_string(StreamPreset p) {
  switch (p) {
    case StreamPreset::kRademacher: return "rademacher";
    case StreamPreset::kScaledRademacher: return "scaled-rademacher";
    case StreamPreset::kAsymmetric: return "asymmetric";
    case StreamPreset::kAdaptiveSigma: return "adaptive-sigma";
  }
  return "unknown";
}

StreamPreset stream_preset_from_string(const std::string& name) {
  for (auto p : all_stream_presets()) {
    if (to_string(p) == name) return p;
  }
  throw ContractViolation("unknown stream preset '" + name + "'");
}

std::vector<StreamPreset> all_stream_presets() {
  return {StreamPreset::kRademacher, StreamPreset::kScaledRademacher, StreamPreset::kAsymmetric,
          StreamPreset::kAdaptiveSigma};
}

MartingaleStream generate_stream(StreamPreset preset, int n, Rng& rng) {
  VARBENCH_REQUIRE(n >= 1, "stream length must be >= 1");
  MartingaleStream st;
  st.x.resize(static_cast<std::size_t>(n));
  st.cond_second_moment.resize(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (std::size_t i = 0; i < st.x.size(); ++i) {
    double x = 0.0, v = 0.0;
    switch (preset) {
      case StreamPreset::kRademacher:
        x = rng.rademacher();
        v = 1.0;
        st.bound = 1.0;
        break;
      case StreamPreset::kScaledRademacher:
        x = 0.5 * rng.rademacher();
        v = 0.25;
        st.bound = 0.5;
        break;
      case StreamPreset::kAsymmetric:
        x = rng.bernoulli(0.2) ? 0.8 : -0.2;
        v = 0.2 * 0.64 + 0.8 * 0.04;
        st.bound = 0.8;
        break;
      case StreamPreset::kAdaptiveSigma: {
        const double s = sum >= 0.0 ? 0.5 : 0.1;
        x = s * rng.rademacher();
        v = s * s;
        st.bound = 0.5;
        break;
      }
    }
    sum += x;
    st.x[i] = x;
    st.cond_second_moment[i] = v;
  }
  return st;
}

BoundSides bernstein_bound(const std::vector<double>& xs, double b, double delta) {
  VARBENCH_REQUIRE(delta > 0.0 && delta <= std::exp(-1.0), "bernstein bound needs delta in (0, e^-1]");
  VARBENCH_REQUIRE(b > 0.0, "bernstein bound needs b > 0");
  double s = 0.0, s2 = 0.0;
  for (double x : xs) {
    s += x;
    s2 += x * x;
  }
  const double l = std::log(1.0 / delta);
  return {std::abs(s), 8.0 * std::sqrt(s2 * l) + 16.0 * b * l};
}

BoundSides variance_sum_bound(const std::vector<double>& xs,
                              const std::vector<double>& cond_second_moments, double delta) {
  VARBENCH_REQUIRE(xs.size() == cond_second_moments.size(), "variance sum bound length mismatch");
  VARBENCH_REQUIRE(delta > 0.0 && delta < 1.0, "variance sum bound needs delta in (0, 1)");
  double s2 = 0.0, v = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    VARBENCH_REQUIRE(std::abs(xs[i]) <= 1.0, "variance sum bound needs |X_i| <= 1");
    s2 += xs[i] * xs[i];
    v += cond_second_moments[i];
  }
  return {s2, 8.0 * v + 4.0 * std::log(4.0 / delta)};
}

BoundSides freedman_eps_bound(const std::vector<double>& increments,
                              const std::vector<double>& cond_variances, double b, double eps,
                              double delta) {
  VARBENCH_REQUIRE(increments.size() == cond_variances.size(), "freedman bound length mismatch");
  VARBENCH_REQUIRE(eps > 0.0 && delta > 0.0 && b > 0.0, "freedman bound needs eps, delta, b > 0");
  double m = 0.0, v = 0.0;
  for (std::size_t i = 0; i < increments.size(); ++i) {
    m += increments[i];
    v += cond_variances[i];
  }
  const double l = std::log(1.0 / delta);
  return {std::abs(m), 2.0 * std::sqrt(v * l) + 2.0 * std::sqrt(eps * l) + 2.0 * b * l};
}

double bernstein_budget(int n, double delta) { return 6.0 * delta * std::log2(static_cast<double>(n)); }

double variance_sum_budget(int n, double delta) {
  return (std::ceil(std::log2(static_cast<double>(n))) + 1.0) * delta;
}

double freedman_budget(int n, double b, double eps, double delta) {
  return 2.0 * (std::log2(b * b * n / eps) + 1.0) * delta;
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  VARBENCH_REQUIRE(trials > 0, "wilson interval needs trials > 0");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::string to_string(ConcentrationCheck c) {
  switch (c) {
    case ConcentrationCheck::kBernstein: return "bernstein";
    case ConcentrationCheck::kVarianceSum: return "variance-sum";
    case ConcentrationCheck::kFreedman: return "freedman";
    case ConcentrationCheck::kEmpiricalVariance: return "empirical-variance";
  }
  return "unknown";
}

McResult run_concentration_check(ConcentrationCheck check, StreamPreset preset, const McParams& params) {
  VARBENCH_REQUIRE(params.replicates >= 1 && params.n >= 1, "Monte Carlo check needs n, replicates >= 1");
  McResult res;
  res.check = check;
  res.preset = preset;
  res.params = params;
  const int n = params.n;
  switch (check) {
    case ConcentrationCheck::kBernstein: res.raw_budget = bernstein_budget(n, params.delta); break;
    case ConcentrationCheck::kVarianceSum: res.raw_budget = variance_sum_budget(n, params.delta); break;
    case ConcentrationCheck::kFreedman: res.raw_budget = 0.0; break;  // needs b, set below
    case ConcentrationCheck::kEmpiricalVariance: res.raw_budget = params.delta; break;
  }
  const double e2_log = 4.0 * std::log(4.0 * n * (std::log2(static_cast<double>(n)) + 2.0) / params.delta);
  for (std::size_t r = 0; r < params.replicates; ++r) {
    Rng rng(params.seed, StreamTag::kMartingale, r);
    const MartingaleStream st = generate_stream(preset, n, rng);
    if (check == ConcentrationCheck::kFreedman && r == 0) {
      res.raw_budget = freedman_budget(n, st.bound, params.eps, params.delta);
    }
    bool violated = false;
    switch (check) {
      case ConcentrationCheck::kBernstein: {
        const auto s = bernstein_bound(st.x, st.bound, params.delta);
        violated = s.lhs > s.rhs;
        break;
      }
      case ConcentrationCheck::kVarianceSum: {
        const auto s = variance_sum_bound(st.x, st.cond_second_moment, params.delta);
        violated = s.lhs >= s.rhs;
        break;
      }
      case ConcentrationCheck::kFreedman: {
        const auto s = freedman_eps_bound(st.x, st.cond_second_moment, st.bound, params.eps, params.delta);
        violated = s.lhs >= s.rhs;
        break;
      }
      case ConcentrationCheck::kEmpiricalVariance: {
        double e = 0.0, v = 0.0;
        for (std::size_t i = 0; i < st.x.size() && !violated; ++i) {
          e += st.x[i] * st.x[i];
          v += st.cond_second_moment[i];
          violated = e > 8.0 * v + e2_log;
        }
        break;
      }
    }
    if (violated) ++res.violations;
  }
  res.rate = static_cast<double>(res.violations) / static_cast<double>(params.replicates);
  res.budget = std::min(1.0, res.raw_budget);
  res.vacuous = res.raw_budget >= 1.0;
  res.interval = wilson_interval(res.violations, params.replicates, 2.0);
  res.pass = res.interval.lo <= res.budget;
  return res;
}

std::vector<McResult> run_concentration_battery(std::size_t replicates, std::uint64_t seed) {
  std::vector<McResult> out;
  std::uint64_t salt = 0;
  for (auto preset : all_stream_presets()) {
    auto run = [&](ConcentrationCheck c, McParams p) {
      p.replicates = replicates;
      p.seed = derive_seed(seed, salt++);
      out.push_back(run_concentration_check(c, preset, p));
    };
    run(ConcentrationCheck::kBernstein, {1000, 0.05, 0.0625, 0, 0});
    run(ConcentrationCheck::kBernstein, {1000, 0.001, 0.0625, 0, 0});
    run(ConcentrationCheck::kVarianceSum, {256, 0.1, 0.0625, 0, 0});
    run(ConcentrationCheck::kVarianceSum, {256, 0.01, 0.0625, 0, 0});
    run(ConcentrationCheck::kFreedman, {1000, 0.05, 0.0625, 0, 0});
    run(ConcentrationCheck::kFreedman, {1000, 0.001, 0.0625, 0, 0});
    run(ConcentrationCheck::kEmpiricalVariance, {300, 0.1, 0.0625, 0, 0});
  }
  return out;
}

namespace {

void require_lambdas(double l1, double l2, double l3, double l4) {
  VARBENCH_REQUIRE(l3 >= 1.0, "recursion solver needs lambda3 >= 1");
  VARBENCH_REQUIRE(l1 > 0.0 && l2 >= 0.0 && l4 >= 0.0, "recursion solver needs lambda1 > 0, lambda2, lambda4 >= 0");
}

int kappa_of(double l1) { return std::max(1, static_cast<int>(std::ceil(std::log2(l1)))); }

}  // namespace

double solve_recursion_implicit(double l1, double l2, double l3, double l4) {
  require_lambdas(l1, l2, l3, l4);
  return 22.0 * l2 * l2 + 6.0 * l4 + 4.0 * l2 * std::sqrt(2.0 * l3);
}

double solve_recursion_bootstrap(double l1, double l2, double l3, double l4) {
  require_lambdas(l1, l2, l3, l4);
  const double first = l2 + std::sqrt(l2 * l2 + l4);
  return std::max(first * first, l2 * std::sqrt(8.0 * l3) + l4);
}

WorstCaseSequence worst_case_implicit(double l1, double l2, double l3, double l4) {
  require_lambdas(l1, l2, l3, l4);
  WorstCaseSequence w;
  w.kappa = kappa_of(l1);
  w.bound = solve_recursion_implicit(l1, l2, l3, l4);
  w.a.assign(static_cast<std::size_t>(w.kappa + 1), 0.0);
  w.a[static_cast<std::size_t>(w.kappa)] = l1;
  for (int i = w.kappa; i >= 1; --i) {
    const double rest = w.a[static_cast<std::size_t>(i)] + std::ldexp(l3, i + 1);
    // g(a) = l2 sqrt(a + rest) + l4 is concave with slope <= 1/2 at its
    // unique fixed point, so iteration from 0 climbs to it.
    double a = 0.0;
    for (int it = 0; it < 10000; ++it) {
      const double next = l2 * std::sqrt(a + rest) + l4;
      const double diff = std::abs(next - a);
      a = next;
      if (diff <= 1e-10 * std::max(1.0, a)) break;
    }
    w.a[static_cast<std::size_t>(i - 1)] = std::min(l1, a);
  }
  for (int i = 1; i <= w.kappa; ++i) {
    const double ai = w.a[static_cast<std::size_t>(i - 1)];
    const double rhs = l2 * std::sqrt(ai + w.a[static_cast<std::size_t>(i)] + std::ldexp(l3, i + 1)) + l4;
    w.max_residual = std::max(w.max_residual, ai - rhs);
    if (ai > rhs + 1e-9 * std::max(1.0, rhs) || ai > l1 || ai < 0.0) w.recursion_holds = false;
  }
  return w;
}

WorstCaseSequence worst_case_bootstrap(double l1, double l2, double l3, double l4) {
  require_lambdas(l1, l2, l3, l4);
  WorstCaseSequence w;
  w.kappa = kappa_of(l1);
  w.bound = solve_recursion_bootstrap(l1, l2, l3, l4);
  w.a.assign(static_cast<std::size_t>(w.kappa + 1), 0.0);
  w.a[static_cast<std::size_t>(w.kappa)] = l1;
  for (int i = w.kappa; i >= 1; --i) {
    const double v = l2 * std::sqrt(w.a[static_cast<std::size_t>(i)] + std::ldexp(l3, i + 1)) + l4;
    w.a[static_cast<std::size_t>(i - 1)] = std::min(l1, v);
  }
  for (int i = 1; i <= w.kappa; ++i) {
    const double ai = w.a[static_cast<std::size_t>(i - 1)];
    const double rhs = l2 * std::sqrt(w.a[static_cast<std::size_t>(i)] + std::ldexp(l3, i + 1)) + l4;
    w.max_residual = std::max(w.max_residual, ai - rhs);
    if (ai > rhs + 1e-9 * std::max(1.0, rhs) || ai > l1 || ai < 0.0) w.recursion_holds = false;
  }
  return w;
}

RecursionGridReport verify_recursion_grid() {
  RecursionGridReport rep;
  for (double l1 : {1e2, 1e6, 1e12}) {
    for (double l2 : {0.1, 0.5, 1.0, 3.0, 10.0}) {
      for (double l3 : {1.0, 2.0, 10.0, 100.0}) {
        for (double l4 : {0.0, 0.5, 1.0, 5.0, 20.0}) {
          RecursionGridPoint p{l1, l2, l3, l4};
          const auto a = worst_case_implicit(l1, l2, l3, l4);
          const auto b = worst_case_bootstrap(l1, l2, l3, l4);
          p.implicit_a1 = a.a.front();
          p.implicit_bound = a.bound;
          p.bootstrap_a1 = b.a.front();
          p.bootstrap_bound = b.bound;
          p.pass = a.recursion_holds && b.recursion_holds && p.implicit_a1 <= p.implicit_bound &&
                   p.bootstrap_a1 <= p.bootstrap_bound;
          if (!p.pass) ++rep.failures;
          if (p.implicit_bound > 0.0) rep.max_ratio_implicit = std::max(rep.max_ratio_implicit, p.implicit_a1 / p.implicit_bound);
          if (p.bootstrap_bound > 0.0) rep.max_ratio_bootstrap = std::max(rep.max_ratio_bootstrap, p.bootstrap_a1 / p.bootstrap_bound);
          rep.points.push_back(p);
        }
      }
    }
  }
  return rep;
}

double mm_recursion_rhs(double M_next, double K, double R0, int m, int d, int H, int K_total,
                        double delta, const MmConstants& c) {
  VARBENCH_REQUIRE(M_next >= 0.0 && K >= 0.0 && R0 >= 0.0 && m >= 0, "mm_recursion_rhs needs nonnegative inputs");
  VARBENCH_REQUIRE(d >= 1 && H >= 1 && K_total >= 1 && delta > 0.0 && delta < 1.0,
                   "mm_recursion_rhs needs d, H, K >= 1 and delta in (0, 1)");
  const double lg = std::log(static_cast<double>(d) * H * K_total);
  const double ld = std::log(1.0 / delta);
  const double inner = M_next + c.log_term * d * std::pow(lg, 5) + std::ldexp(1.0, m + 1) * (K + R0) * ld;
  return c.outer * std::sqrt(inner) + c.tail * ld;
}

}  // namespace varbench
