#include <cmath>

#include <boost/multiprecision/cpp_int.hpp>
#include <gtest/gtest.h>

#include "cbp/moments.hpp"
#include "cbp/oracle.hpp"
#include "test_util.hpp"

namespace cbp {
namespace {

TEST(Oracle, CompositionCounts) {
  const auto c = oracle::compositions(6);
  std::size_t total = 0;
  const std::size_t binom5[] = {1, 5, 10, 10, 5, 1};
  for (std::size_t r = 1; r <= 6; ++r) {
    EXPECT_EQ(c[r].size(), binom5[r - 1]);
    total += c[r].size();
  }
  EXPECT_EQ(total, 32u);
  const auto three = oracle::compositions(3);
  EXPECT_EQ(three[2], (std::vector<std::vector<int>>{{1, 2}, {2, 1}}));
  EXPECT_EQ(three[3], (std::vector<std::vector<int>>{{1, 1, 1}}));
}

TEST(Oracle, NoBranchingGivesTransitionMatrix) {
  // alpha = 0 and beta = exit rate: P_11(t) = (1 + e^{-2t}) / 2.
  const CbpModel m = test::two_state({0.0, 1.0}, 1, 0.0);
  for (double t : {0.1, 1.0, 4.0}) {
    const Eigen::MatrixXd p = oracle::mean_field(m, t);
    EXPECT_NEAR(p(1, 1), 0.5 * (1.0 + std::exp(-2.0 * t)), 1e-12);
    EXPECT_NEAR(p.row(0).sum(), 1.0, 1e-12);
  }
}

TEST(Oracle, Semigroup) {
  const CbpModel m = test::two_state({0.0, 0.0, 0.0, 1.0});
  const Eigen::MatrixXd lhs = oracle::mean_field(m, 1.7);
  const Eigen::MatrixXd rhs = oracle::mean_field(m, 0.5) * oracle::mean_field(m, 1.2);
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9 * lhs.cwiseAbs().maxCoeff());
  EXPECT_GE(lhs.minCoeff(), 0.0);
}

TEST(Oracle, GrowthRateOfTwoStateModels) {
  // Mean generator [[-1, 1], [1/2, 1/2]]: lambda^2 + lambda/2 - 1 = 0.
  const CbpModel m = test::two_state({0.0, 0.0, 0.0, 1.0});
  EXPECT_NEAR(oracle::growth_rate(m), (-0.5 + std::sqrt(4.25)) / 2.0, 1e-12);
  EXPECT_NEAR(oracle::growth_rate(test::two_state({0.5, 0.0, 0.5})), 0.0, 1e-12);
}

TEST(Oracle, SecondMomentWithoutSourceStaysZero) {
  const CbpModel m = test::two_state({0.5, 0.5});
  const oracle::SecondMoments s = oracle::second_moments(m, 3.0);
  EXPECT_LE(s.m2.cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((s.m1 - oracle::mean_field(m, 3.0)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Oracle, SecondMomentSmallTime) {
  // m_2(t; w, w) ~ beta alpha f'' t for small t when started at the catalyst.
  const CbpModel m = test::two_state({0.0, 0.0, 0.0, 1.0});
  const double t = 1e-4;
  const oracle::SecondMoments s = oracle::second_moments(m, t);
  EXPECT_NEAR(s.m2(1, 1) / t, 0.5 * 6.0, 1e-2);
}

TEST(Oracle, BruteForceMatchesConvolution) {
  using Q = boost::multiprecision::cpp_rational;
  const std::vector<Q> f{Q(1), Q(3, 2), Q(7, 3), Q(5), Q(11, 4), Q(2)};
  const std::vector<Q> z{Q(1, 3), Q(2), Q(5, 7), Q(1, 2), Q(3)};
  for (int n = 2; n <= 6; ++n) EXPECT_EQ(oracle::h_brute_force<Q>(Q(2, 5), f, n, z), h_nk<Q>(Q(2, 5), f, n, z));
}

TEST(Oracle, CriticalMeanBisection) {
  const CbpModel m = test::load("z_two_catalysts.json");
  const auto m1 = oracle::critical_mean(m, 0, {0.0, 0.0});
  ASSERT_TRUE(m1.has_value());
  EXPECT_NEAR(*m1, (0.65 - 0.035 / 0.9) / 0.3, 1e-9);
  EXPECT_FALSE(oracle::critical_mean(m, 1, {5.0, 0.0}).has_value());
}

}  // namespace
}  // namespace cbp
