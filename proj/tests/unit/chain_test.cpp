#include <cmath>

#include <gtest/gtest.h>

#include "cbp/chain.hpp"
#include "cbp/error.hpp"
#include "test_util.hpp"

namespace cbp {
namespace {

ErrorCode code_of(const ChainDescription& d) {
  try {
    ChainModel::validate(d);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

TEST(Chain, RejectsBadGenerators) {
  ChainDescription d;
  d.generator = {{-1.0, 0.5}, {1.0, -1.0}};
  EXPECT_EQ(code_of(d), ErrorCode::RowSumNonzero);
  d.generator = {{1.0, -1.0}, {1.0, -1.0}};
  EXPECT_EQ(code_of(d), ErrorCode::NegativeOffDiagonal);
  d.generator = {{-1.0, 1.0, 0.0}, {1.0, -1.0, 0.0}, {0.0, 1.0, -1.0}};
  EXPECT_EQ(code_of(d), ErrorCode::NotIrreducible);
  d.generator = {};
  EXPECT_EQ(code_of(d), ErrorCode::EmptyModel);
}

TEST(Chain, TwoStateReturnTransform) {
  // From state 1: exit, hold Exp(1) at state 0, jump back.
  const ChainModel c = test::two_state_chain();
  const Site one = Site::index(1);
  for (double lambda : {0.0, 0.3, 2.0}) {
    const auto b = chain::transforms(c, std::vector<Site>{one}, one, {}, lambda, true, true);
    const double z = 1.0 / (1.0 + lambda);
    EXPECT_NEAR(b.bar[0].value, z, 1e-14);
    EXPECT_NEAR(b.hit[0].value, z * z, 1e-14);
    EXPECT_NEAR(b.bar[0].dvalue, -z * z, 1e-13);
    EXPECT_NEAR(b.bar[0].total, 1.0, 1e-14);
    EXPECT_EQ(b.bar[0].atom0, 0.0);
  }
}

TEST(Chain, TwoStateGreenFunction) {
  // (lambda I - Q)^{-1}_{11} = (lambda + 1) / (lambda (lambda + 2)).
  const ChainModel c = test::two_state_chain();
  for (double lambda : {0.5, 1.0, 3.0}) {
    EXPECT_NEAR(chain::green_lst(c, Site::index(1), Site::index(1), lambda),
                (lambda + 1.0) / (lambda * (lambda + 2.0)), 1e-13);
  }
  EXPECT_TRUE(chain::is_recurrent(c));
}

TEST(Chain, NeighbourHittingOnZ) {
  // phi = (0.5 + 0.5 phi^2) / (1 + lambda): phi = 1 + lambda - sqrt((1 + lambda)^2 - 1).
  const ChainModel c = test::z1_chain();
  const Site zero({0}), one({1});
  for (double lambda : {0.1, 0.5, 2.0}) {
    const double s = 1.0 + lambda;
    const double phi = s - std::sqrt(s * s - 1.0);
    EXPECT_NEAR(chain::hit_lst(c, zero, one, {}, lambda).value, phi, 1e-10);
  }
  // Recurrent: the neighbour is reached almost surely.
  EXPECT_NEAR(chain::hit_lst(c, zero, one, {}, 0.0).value, 1.0, 1e-10);
}

TEST(Chain, TabooKillsPaths) {
  // From 1 the first step goes either to 2 or into the taboo site 0.
  const ChainModel c = test::z1_chain();
  const SiteSet taboo = make_site_set({Site({0})});
  EXPECT_NEAR(chain::hit_lst(c, Site({1}), Site({2}), taboo, 0.0).value, 0.5, 1e-9);
}

TEST(Chain, SiteLabels) {
  const ChainModel c = test::two_state_chain();
  EXPECT_EQ(c.parse_site("1"), Site::index(1));
  EXPECT_FALSE(c.parse_site("7").has_value());
  EXPECT_EQ(c.label(Site::index(0)), "0");
  const ChainModel z = test::z1_chain();
  EXPECT_EQ(z.parse_site("-3"), Site({-3}));
  EXPECT_EQ(z.label(Site({-3})), "-3");
}

}  // namespace
}  // namespace cbp
