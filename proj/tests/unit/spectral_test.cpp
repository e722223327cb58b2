#include <cmath>

#include <gtest/gtest.h>

#include "cbp/spectral.hpp"
#include "test_util.hpp"

namespace cbp {
namespace {

// Two-state model with one catalyst: D(lambda) = alpha m z + (1 - alpha) z^2
// with z = 1 / (1 + lambda).
double d_closed(double m, double lambda) {
  const double z = 1.0 / (1.0 + lambda);
  return 0.5 * m * z + 0.5 * z * z;
}

TEST(Spectral, PerronRootOfSymmetricMatrix) {
  Eigen::MatrixXd a(2, 2);
  a << 2.0, 1.0, 1.0, 2.0;
  const PerronResult r = perron_root(a);
  EXPECT_NEAR(r.rho, 3.0, 1e-12);
  EXPECT_NEAR(r.right(0), r.right(1), 1e-10);
}

TEST(Spectral, IrreducibilityOfSupportGraph) {
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 1.0, 0.0, 1.0;
  EXPECT_FALSE(is_irreducible(a));
  a(1, 0) = 0.1;
  EXPECT_TRUE(is_irreducible(a));
}

TEST(Spectral, TwoStateMatrixAndDerivative) {
  const CbpModel m = test::two_state({0.0, 0.0, 0.0, 1.0});
  for (double lambda : {0.0, 0.3, 1.7}) {
    const MatrixWithDerivative d = spectral::build_D(m, lambda);
    const double z = 1.0 / (1.0 + lambda);
    EXPECT_NEAR(d.value(0, 0), d_closed(3.0, lambda), 1e-14);
    EXPECT_NEAR(d.derivative(0, 0), -(1.5 + z) * z * z, 1e-12);
    const DeltaReport r = spectral::delta_and_adjuncts(m, lambda);
    EXPECT_NEAR(r.delta, 1.0 - d_closed(3.0, lambda), 1e-14);
    EXPECT_NEAR(r.derivative, (1.5 + z) * z * z, 1e-12);
    EXPECT_DOUBLE_EQ(r.adjuncts(0, 0), 1.0);
  }
}

TEST(Spectral, ClassifiesTwoStateModels) {
  const CbpModel m = test::two_state({0.0, 0.0, 0.0, 1.0});
  const SpectralReport r = spectral::classify(m);
  EXPECT_EQ(r.regime, Regime::Supercritical);
  EXPECT_DOUBLE_EQ(r.rho_d, d_closed(3.0, 0.0));
  ASSERT_TRUE(r.nu.has_value());
  EXPECT_NEAR(d_closed(3.0, *r.nu), 1.0, 1e-12);
  EXPECT_EQ(spectral::classify(m.with_means({1.0})).regime, Regime::Critical);
  EXPECT_EQ(spectral::classify(m.with_means({0.5})).regime, Regime::Subcritical);
}

TEST(Spectral, RhoDecreasesInLambda) {
  const CbpModel m = test::load("z_two_catalysts.json");
  const CatalystKernel k(m);
  double prev = spectral::rho_D(k, 0.0);
  for (double lambda : {0.1, 0.5, 2.0}) {
    const double r = spectral::rho_D(k, lambda);
    EXPECT_LT(r, prev);
    prev = r;
  }
}

TEST(Spectral, TwoCatalystZMatrixAtZero) {
  // Adjacent catalysts on Z: each reaches the other directly with
  // probability 1/2 and otherwise returns to itself.
  const CbpModel m = test::load("z_two_catalysts.json");
  const Eigen::MatrixXd d = spectral::build_D(m, 0.0).value;
  EXPECT_NEAR(d(0, 0), 0.3 * 1.0 + 0.7 * 0.5, 1e-10);
  EXPECT_NEAR(d(0, 1), 0.7 * 0.5, 1e-10);
  EXPECT_NEAR(d(1, 0), 0.2 * 0.5, 1e-10);
  EXPECT_NEAR(d(1, 1), 0.8 * 1.0 + 0.2 * 0.5, 1e-10);
}

TEST(Spectral, DTildeRootMatchesNu) {
  const CbpModel m = test::two_state({0.0, 0.0, 0.0, 1.0});
  const SpectralReport r = spectral::classify(m);
  EXPECT_NEAR(spectral::d_tilde_root(m, 0.0, r.lambda_hi), *r.nu, 1e-10);
}

}  // namespace
}  // namespace cbp
