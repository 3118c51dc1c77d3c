#include <cmath>

#include <Eigen/LU>
#include <gtest/gtest.h>

#include "varbench/epc.h"
#include "varbench/error.h"

namespace vb = varbench;

namespace {

std::size_t closed_form_repeated(double tau, double q, std::size_t n) {
  std::size_t c = 0;
  for (std::size_t s = 1; s <= n; ++s) {
    if (1.0 / (tau + static_cast<double>(s) - 1.0) >= q) ++c;
  }
  return c;
}

}  // namespace

TEST(CountExceedances, RepeatedE1Examples) {
  EXPECT_EQ(vb::count_exceedances(vb::repeated_direction(2, 1.0, 1.0, 100)).count, 1u);
  const auto r = vb::count_exceedances(vb::repeated_direction(2, 1.0, 0.5, 100));
  EXPECT_EQ(r.count, 2u);
  EXPECT_EQ(r.indices, (std::vector<std::size_t>{1, 2}));
}

TEST(CountExceedances, RepeatedMatchesClosedFormEverywhere) {
  for (double tau : {0.25, 1.0, 4.0}) {
    for (double q : {0.1, 0.5, 1.0, 2.0}) {
      const auto r = vb::count_exceedances(vb::repeated_direction(3, tau, q, 1000));
      EXPECT_EQ(r.count, closed_form_repeated(tau, q, 1000)) << tau << " " << q;
      for (std::size_t s = 0; s < 50; ++s) {
        EXPECT_NEAR(r.values[s], 1.0 / (tau + static_cast<double>(s)), 1e-12);
      }
    }
  }
}

TEST(CountExceedances, AlternatingBasisCountsFour) {
  vb::EpcInstance inst;
  inst.tau = 1.0;
  inst.q = 0.5;
  for (int s = 0; s < 100; ++s) inst.xs.push_back(vb::FeatureVector::unit(2, s % 2));
  // frozen from tests/oracles/oracles.py
  EXPECT_EQ(vb::count_exceedances(inst).count, 4u);
}

TEST(CountExceedances, MatchesDirectInverseOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = vb::random_unit(3, 0.5, 0.3, 200, seed);
    const auto r = vb::count_exceedances(inst);
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(3, 3) * inst.tau;
    std::size_t c = 0;
    for (std::size_t s = 0; s < inst.xs.size(); ++s) {
      const Eigen::VectorXd& x = inst.xs[s].vec();
      const double val = x.dot(v.inverse() * x);
      EXPECT_NEAR(r.values[s], val, 1e-10);
      if (val >= inst.q) ++c;
      v += x * x.transpose();
    }
    EXPECT_EQ(r.count, c);
  }
}

TEST(EpcInstance, ValidationRejectsBadInput) {
  vb::EpcInstance inst;
  inst.tau = 0.0;
  inst.q = 1.0;
  inst.xs.push_back(vb::FeatureVector::unit(2, 0));
  EXPECT_THROW(vb::count_exceedances(inst), vb::ContractViolation);
  inst.tau = 1.0;
  inst.xs.push_back({0.9, 0.9});
  EXPECT_THROW(vb::count_exceedances(inst), vb::ContractViolation);
}

TEST(EpcBound, SpotValuesAgainstIndependentOracle) {
  // frozen from tests/oracles/oracles.py
  EXPECT_NEAR(vb::epc_bound(2, 1.0, 1.0), 4.174709795614407, 1e-9);
  EXPECT_NEAR(vb::epc_bound(2, 1.0, 0.5), 10.20873853051565, 1e-9);
  EXPECT_NEAR(vb::epc_bound(1, 1.0, 1.0), 2.0873548978072036, 1e-9);
}

TEST(EpcBound, MonotoneInQAndLinearInD) {
  double prev = INFINITY;
  for (double q = 0.05; q < 50.0; q *= 1.3) {
    const double b = vb::epc_bound(1, 1.0, q);
    EXPECT_LT(b, prev);
    EXPECT_GT(b, 0.0);
    prev = b;
  }
  for (int d = 1; d <= 4; ++d) EXPECT_DOUBLE_EQ(vb::epc_bound(2 * d, 0.7, 0.3), 2.0 * vb::epc_bound(d, 0.7, 0.3));
  EXPECT_DOUBLE_EQ(vb::epc_bound_halved(3, 1.0, 1.0), 0.5 * vb::epc_bound(3, 1.0, 1.0));
}

TEST(GreedyAdversary, FirstStepAndOneDimensionalReduction) {
  const auto inst = vb::greedy_adversary(3, 2.0, 0.5, 10);
  EXPECT_EQ(inst.xs.front(), vb::FeatureVector::unit(3, 0));
  EXPECT_NEAR(vb::count_exceedances(inst).values.front(), 0.5, 1e-15);
  const auto one = vb::count_exceedances(vb::greedy_adversary(1, 1.0, 0.3, 40));
  for (std::size_t s = 0; s < 40; ++s) EXPECT_NEAR(one.values[s], 1.0 / (1.0 + static_cast<double>(s)), 1e-12);
}

TEST(GreedyAdversary, WithinBound) {
  const auto r = vb::count_exceedances(vb::greedy_adversary(2, 1.0, 0.5, 100));
  EXPECT_LE(static_cast<double>(r.count), vb::epc_bound(2, 1.0, 0.5));
}

TEST(DetTraceChain, EmptyAndSingleStep) {
  vb::EpcInstance empty;
  empty.tau = 1.5;
  empty.q = 10.0;
  empty.xs.push_back(vb::FeatureVector::unit(2, 0));
  const auto c0 = vb::check_det_trace_chain(empty);
  EXPECT_TRUE(c0.ok);
  EXPECT_EQ(c0.j_size, 0u);
  EXPECT_NEAR(c0.log_det, 2.0 * std::log(1.5), 1e-12);
  EXPECT_NEAR(c0.log_lower, 2.0 * std::log(1.5), 1e-12);

  const auto c1 = vb::check_det_trace_chain(vb::repeated_direction(1, 1.0, 1.0, 1));
  EXPECT_TRUE(c1.ok);
  EXPECT_EQ(c1.j_size, 1u);
  EXPECT_NEAR(c1.log_det, std::log(2.0), 1e-12);
  EXPECT_NEAR(c1.log_lower, std::log(2.0), 1e-12);
}

TEST(DetTraceChain, HoldsOnGreedyInstances) {
  for (int d = 1; d <= 4; ++d) {
    for (double q : {0.1, 1.0}) EXPECT_TRUE(vb::check_det_trace_chain(vb::greedy_adversary(d, 1.0, q, 500)).ok);
  }
}

TEST(VerifyEpc, SmallGridPasses) {
  vb::EpcGrid grid;
  grid.dims = {1, 2, 3};
  grid.taus = {1.0};
  grid.qs = {0.5, 1.0};
  grid.ns = {100, 1000};
  const auto rep = vb::verify_epc({vb::EpcFamily::kRepeated, vb::EpcFamily::kRandomUnit, vb::EpcFamily::kGreedy},
                                  grid, 5, 3);
  EXPECT_TRUE(rep.pass());
  EXPECT_EQ(rep.entries.size(), 3u * 2u * 2u * (1u + 5u + 1u));
  EXPECT_LE(rep.max_ratio, 1.0);
}

TEST(EpcFamily, NamesRoundTrip) {
  for (auto f : {vb::EpcFamily::kRepeated, vb::EpcFamily::kRandomUnit, vb::EpcFamily::kGreedy}) {
    EXPECT_EQ(vb::epc_family_from_string(vb::to_string(f)), f);
  }
  EXPECT_THROW(vb::epc_family_from_string("nope"), vb::ContractViolation);
}
