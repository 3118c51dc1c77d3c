#include "varbench/epc.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "varbench/error.h"
#include "varbench/rng.h"

namespace varbench {

void EpcInstance::validate() const {
  VARBENCH_REQUIRE(tau > 0.0 && q > 0.0, "EPC instance needs tau > 0 and q > 0");
  const int d = dim();
  for (const auto& x : xs) {
    VARBENCH_REQUIRE(x.dim() == d, "EPC vectors must share a dimension");
    VARBENCH_REQUIRE(x.norm() <= 1.0 + 1e-12, "EPC vectors must satisfy ||x|| <= 1");
  }
}

constexpr double kTieTolerance = 1e-12;

ExceedanceResult count_exceedances(const EpcInstance& inst) {
  inst.validate();
  ExceedanceResult out;
  if (inst.xs.empty()) return out;
  const int d = inst.dim();
  Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd::Identity(d, d) * inst.tau);
  out.values.reserve(inst.xs.size());
  Eigen::VectorXd z(d);
  for (std::size_t s = 0; s < inst.xs.size(); ++s) {
    const Eigen::VectorXd& x = inst.xs[s].vec();
    z = llt.matrixL().solve(x);
    const double value = z.squaredNorm();
    out.values.push_back(value);
    // Exact ties (1/2 >= 1/2 on repeated vectors) come out a few ulps low.
    if (value >= inst.q * (1.0 - kTieTolerance)) out.indices.push_back(s + 1);
    llt.rankUpdate(x, 1.0);
    if (llt.info() != Eigen::Success) throw SingularMatrixError("EPC Gram update lost definiteness");
  }
  out.count = out.indices.size();
  return out;
}

double epc_bound(int d, double tau, double q) {
  VARBENCH_REQUIRE(d >= 1 && tau > 0.0 && q > 0.0, "epc_bound needs d >= 1, tau > 0, q > 0");
  const double lq = std::log1p(q);
  return 2.0 / lq * d * std::log1p((2.0 / std::numbers::e) / lq / tau);
}

double epc_bound_halved(int d, double tau, double q) { return 0.5 * epc_bound(d, tau, q); }

EpcInstance repeated_direction(int d, double tau, double q, std::size_t n) {
  EpcInstance inst;
  inst.tau = tau;
  inst.q = q;
  inst.xs.assign(n, FeatureVector::unit(d, 0));
  return inst;
}

EpcInstance random_unit(int d, double tau, double q, std::size_t n, std::uint64_t seed) {
  EpcInstance inst;
  inst.tau = tau;
  inst.q = q;
  inst.xs.reserve(n);
  Rng rng(seed, StreamTag::kEpc, static_cast<std::uint64_t>(d));
  Eigen::VectorXd v(d);
  for (std::size_t s = 0; s < n; ++s) {
    double norm = 0.0;
    do {
      for (int i = 0; i < d; ++i) v[i] = rng.normal();
      norm = v.norm();
    } while (norm == 0.0);
    v /= norm;
    if (v.norm() > 1.0) v /= v.norm() * (1.0 + 1e-16);
    inst.xs.emplace_back(v);
  }
  return inst;
}

namespace {

Eigen::VectorXd canonical_sign(Eigen::VectorXd v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12) {
      if (v[i] < 0.0) v = -v;
      break;
    }
  }
  return v;
}

Eigen::VectorXd min_eigen_direction(const Eigen::MatrixXd& v) {
  const Eigen::Index d = v.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
  const auto& vals = es.eigenvalues();
  const double tol = 1e-9 * std::max(1.0, std::abs(vals[d - 1]));
  Eigen::Index tied = 1;
  while (tied < d && vals[tied] - vals[0] <= tol) ++tied;
  const Eigen::MatrixXd basis = es.eigenvectors().leftCols(tied);
  if (tied == 1) return canonical_sign(basis.col(0));
  for (Eigen::Index axis = 0; axis < d; ++axis) {
    Eigen::VectorXd p = basis * basis.row(axis).transpose();
    const double n = p.norm();
    if (n > 1e-6) return canonical_sign(p / n);
  }
  return canonical_sign(basis.col(0));
}

}  // namespace

EpcInstance greedy_adversary(int d, double tau, double q, std::size_t n) {
  VARBENCH_REQUIRE(d >= 1 && tau > 0.0, "greedy_adversary needs d >= 1, tau > 0");
  EpcInstance inst;
  inst.tau = tau;
  inst.q = q;
  inst.xs.reserve(n);
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(d, d) * tau;
  for (std::size_t s = 0; s < n; ++s) {
    Eigen::VectorXd x = min_eigen_direction(v);
    if (x.norm() > 1.0) x /= x.norm() * (1.0 + 1e-16);
    v.noalias() += x * x.transpose();
    inst.xs.emplace_back(std::move(x));
  }
  return inst;
}

DetTraceCheck check_det_trace_chain(const EpcInstance& inst) {
  const ExceedanceResult ex = count_exceedances(inst);
  const int d = inst.xs.empty() ? 1 : inst.dim();
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(d, d) * inst.tau;
  for (std::size_t s : ex.indices) {
    const auto& x = inst.xs[s - 1].vec();
    w.noalias() += x * x.transpose();
  }
  DetTraceCheck c;
  c.j_size = ex.count;
  const double j = static_cast<double>(ex.count);
  c.log_count_bound = d * std::log((d * inst.tau + j) / d);
  c.log_trace_bound = d * std::log(w.trace() / d);
  c.log_det = log_det(spd_from_trusted(std::move(w)));
  c.log_lower = d * std::log(inst.tau) + j * std::log1p(inst.q);
  auto geq = [](double a, double b) {
    return a >= b - 1e-8 * std::max({1.0, std::abs(a), std::abs(b)});
  };
  c.ok = geq(c.log_count_bound, c.log_trace_bound) && geq(c.log_trace_bound, c.log_det) &&
         geq(c.log_det, c.log_lower);
  return c;
}

std::string to_string(EpcFamily f) {
  switch (f) {
    case EpcFamily::kRepeated: return "repeated";
    case EpcFamily::kRandomUnit: return "random-unit";
    case EpcFamily::kGreedy: return "greedy";
  }
  return "unknown";
}

EpcFamily epc_family_from_string(const std::string& s) {
  if (s == "repeated") return EpcFamily::kRepeated;
  if (s == "random-unit") return EpcFamily::kRandomUnit;
  if (s == "greedy") return EpcFamily::kGreedy;
  throw ContractViolation("unknown EPC family '" + s + "'");
}

EpcReport verify_epc(const std::vector<EpcFamily>& families, const EpcGrid& grid,
                     int random_seeds, std::uint64_t master_seed) {
  EpcReport report;
  auto record = [&](EpcFamily fam, std::uint64_t seed, const EpcInstance& inst, int d,
                    std::size_t n) {
    EpcReportEntry e;
    e.family = fam;
    e.seed = seed;
    e.d = d;
    e.tau = inst.tau;
    e.q = inst.q;
    e.n = n;
    const DetTraceCheck chain = check_det_trace_chain(inst);
    e.count = chain.j_size;
    e.bound = epc_bound(d, inst.tau, inst.q);
    e.ratio = static_cast<double>(e.count) / e.bound;
    e.pass = static_cast<double>(e.count) <= e.bound;
    e.chain_ok = chain.ok;
    e.halved_pass = static_cast<double>(e.count) <= epc_bound_halved(d, inst.tau, inst.q);
    report.max_ratio = std::max(report.max_ratio, e.ratio);
    if (!e.pass) ++report.violations;
    if (!e.chain_ok) ++report.chain_failures;
    if (!e.halved_pass) ++report.halved_violations;
    if (!e.pass || !e.chain_ok) report.failures.push_back({e, inst});
    report.entries.push_back(e);
  };
  for (EpcFamily fam : families) {
    for (int d : grid.dims) {
      for (double tau : grid.taus) {
        for (double q : grid.qs) {
          for (std::size_t n : grid.ns) {
            switch (fam) {
              case EpcFamily::kRepeated:
                record(fam, 0, repeated_direction(d, tau, q, n), d, n);
                break;
              case EpcFamily::kGreedy:
                record(fam, 0, greedy_adversary(d, tau, q, n), d, n);
                break;
              case EpcFamily::kRandomUnit:
                for (int r = 0; r < random_seeds; ++r) {
                  const std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(r));
                  record(fam, seed, random_unit(d, tau, q, n, seed), d, n);
                }
                break;
            }
          }
        }
      }
    }
  }
  return report;
}

}  // namespace varbench
