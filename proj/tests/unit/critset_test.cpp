#include <gtest/gtest.h>

#include "cbp/critset.hpp"
#include "cbp/error.hpp"
#include "test_util.hpp"

namespace cbp {
namespace {

// With D(0) = [[.3 m1 + .35, .35], [.1, .8 m2 + .1]], det(D - I) = 0 solves
// in closed form for either mean when the other vanishes.
const double kM1 = (0.65 - 0.035 / 0.9) / 0.3;
const double kM2 = (0.9 - 0.035 / 0.65) / 0.8;

TEST(Critset, AxisBoundsClosedForm) {
  const CritSetSolver s(test::load("z_two_catalysts.json"));
  const std::vector<double> b = s.axis_bounds();
  ASSERT_EQ(b.size(), 2u);
  EXPECT_NEAR(b[0], kM1, 1e-9);
  EXPECT_NEAR(b[1], kM2, 1e-9);
}

TEST(Critset, SolveGivesUnitPoint) {
  const CritSetSolver s(test::load("z_two_catalysts.json"));
  const MeanSolution r = s.solve({1.0, 0.0}, 1);
  ASSERT_TRUE(r.m.has_value());
  EXPECT_NEAR(*r.m, 1.0, 1e-10);
  EXPECT_LE(r.residual, 1e-12);
}

TEST(Critset, SupercriticalPrefixIsSkipped) {
  const CritSetSolver s(test::load("z_two_catalysts.json"));
  const MeanSolution r = s.solve({kM1 + 0.5, 0.0}, 1);
  EXPECT_FALSE(r.m.has_value());
  EXPECT_EQ(r.reason, SkipReason::PrefixSupercritical);
}

TEST(Critset, TraceIsSortedAndFlipsRegime) {
  const CritSetSolver s(test::load("z_two_catalysts.json"));
  const CritSetResult r = s.trace(11, {}, 2);
  ASSERT_EQ(r.points.size(), 11u);
  EXPECT_TRUE(r.skipped.empty());
  for (std::size_t i = 1; i < r.points.size(); ++i) EXPECT_LT(r.points[i - 1].m, r.points[i].m);
  for (const CritPoint& p : r.points) {
    EXPECT_LE(p.residual, 1e-9);
    std::vector<double> up = p.m;
    up[1] += 0.01;
    EXPECT_GT(s.rho(up), 1.0);
    EXPECT_LE(p.m[0], kM1 + 1e-9);
    EXPECT_LE(p.m[1], kM2 + 1e-9);
  }
  // Worker count does not change the output.
  const CritSetResult again = s.trace(11, {}, 1);
  for (std::size_t i = 0; i < r.points.size(); ++i) EXPECT_EQ(r.points[i].m, again.points[i].m);
}

TEST(Critset, ThreeCatalystSurfaceInsideBounds) {
  const CritSetSolver s(test::load("z_three_catalysts.json"));
  const std::vector<double> b = s.axis_bounds();
  const CritSetResult r = s.trace(7, {}, 1);
  EXPECT_FALSE(r.points.empty());
  for (const CritPoint& p : r.points) {
    for (std::size_t i = 0; i < 3; ++i) EXPECT_LE(p.m[i], b[i] + 1e-9);
  }
}

TEST(Critset, SingleRecurrentCatalystCriticalAtOne) {
  const CritSetSolver s(test::two_state({0.0, 0.0, 0.0, 1.0}));
  EXPECT_NEAR(*s.solve({0.0}, 0).m, 1.0, 1e-12);
}

TEST(Critset, RejectsAlphaZero) {
  try {
    CritSetSolver s(test::two_state({0.0, 0.0, 0.0, 1.0}, 1, 0.0));
    FAIL() << "expected AlphaZero";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AlphaZero);
  }
}

TEST(Critset, ReasonNames) {
  EXPECT_EQ(to_string(SkipReason::PrefixSupercritical), "prefix_supercritical");
  EXPECT_EQ(to_string(SkipReason::NegativeSolution), "negative_solution");
}

}  // namespace
}  // namespace cbp
