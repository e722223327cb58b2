#include <cmath>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "cbp/error.hpp"
#include "cbp/moments.hpp"
#include "cbp/oracle.hpp"
#include "test_util.hpp"

namespace cbp {
namespace {

const std::vector<double> kThree{0.0, 0.0, 0.0, 1.0};

TEST(Moments, HnkSmallOrders) {
  const std::vector<double> f{1.0, 2.5, 4.0};
  EXPECT_DOUBLE_EQ(h_nk(0.4, f, 2, std::vector<double>{3.0}), 0.4 * 2.5 * 9.0);
  const std::vector<double> z{3.0, 5.0};
  EXPECT_NEAR(h_nk(0.4, f, 3, z), 0.4 * (3.0 * 2.5 * 3.0 * 5.0 + 4.0 * 27.0), 1e-12);
  EXPECT_THROW(h_nk(0.4, std::vector<double>{1.0}, 2, std::vector<double>{1.0}), Error);
}

// First-order constants from the spectral projection of the mean generator:
// m_1(t) e^{-nu t} -> v u^T / (u . v) with A v = nu v, u^T A = nu u^T.
struct Projection {
  double nu;
  Eigen::MatrixXd p;
};

Projection projection(const CbpModel& m) {
  const Eigen::MatrixXd a = oracle::mean_generator(m);
  Eigen::EigenSolver<Eigen::MatrixXd> right(a), left(a.transpose());
  auto top = [](const Eigen::EigenSolver<Eigen::MatrixXd>& es) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i) {
      if (es.eigenvalues()(i).real() > es.eigenvalues()(best).real()) best = i;
    }
    return best;
  };
  const Eigen::VectorXd v = right.eigenvectors().col(top(right)).real();
  const Eigen::VectorXd u = left.eigenvectors().col(top(left)).real();
  return {right.eigenvalues()(top(right)).real(), v * u.transpose() / u.dot(v)};
}

TEST(Moments, SupercriticalFirstOrderMatchesProjection) {
  const CbpModel m = test::two_state(kThree, 3);
  const MomentEngine eng(m);
  const Projection pr = projection(m);
  EXPECT_NEAR(eng.nu(), pr.nu, 1e-10);
  for (std::size_t x = 0; x < 2; ++x) {
    double row = 0.0;
    for (std::size_t y = 0; y < 2; ++y) {
      EXPECT_NEAR(eng.a(Site::index(x), Site::index(y), 1), pr.p(x, y), 1e-9);
      row += pr.p(x, y);
    }
    EXPECT_NEAR(eng.A(Site::index(x), 1), row, 1e-9);
  }
  EXPECT_TRUE(eng.local_positive(3));
  EXPECT_TRUE(eng.total_positive());
}

TEST(Moments, LowerOrdersUnchangedByHigherNmax) {
  const MomentEngine two(test::two_state(kThree, 2));
  const MomentEngine three(test::two_state(kThree, 3));
  const Site w = Site::index(1), x = Site::index(0);
  EXPECT_EQ(two.a(x, w, 1), three.a(x, w, 1));
  EXPECT_EQ(two.a(x, w, 2), three.a(x, w, 2));
  EXPECT_EQ(two.A(x, 2), three.A(x, 2));
}

TEST(Moments, SubcriticalConstants) {
  const MomentEngine eng(test::two_state({0.5, 0.5}));
  EXPECT_EQ(eng.regime(), Regime::Subcritical);
  EXPECT_EQ(eng.local(Site::index(0), Site::index(1), 1), 0.0);
  EXPECT_EQ(eng.C(Site::index(1), 1), 0.0);
  EXPECT_EQ(eng.C(Site::index(0), 1), 0.0);
  EXPECT_FALSE(eng.total_positive());
}

TEST(Moments, CriticalRecurrentConstants) {
  const MomentEngine eng(test::two_state({0.5, 0.0, 0.5}));
  ASSERT_EQ(eng.regime(), Regime::Critical);
  const Site w = Site::index(1);
  // Delta(lambda) = 1 - z/2 - z^2/2, Delta'(0) = 3/2, so b_1(w, w) = 1 / (beta * 3/2).
  EXPECT_NEAR(eng.b(w, w, 1), 2.0 / 3.0, 1e-12);
  EXPECT_EQ(eng.B(w, 1), 0.0);
  EXPECT_TRUE(eng.local_positive(1));
  EXPECT_TRUE(eng.local_positive(2));
  EXPECT_FALSE(eng.total_positive());
}

TEST(Moments, RegimeMismatch) {
  const MomentEngine eng(test::two_state(kThree));
  try {
    eng.b(Site::index(1), Site::index(1), 1);
    FAIL() << "expected RegimeMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RegimeMismatch);
  }
  EXPECT_THROW(eng.a(Site::index(1), Site::index(1), 5), Error);
}

TEST(Moments, AugmentedRouteAgrees) {
  const CbpModel m = test::two_state(kThree, 2);
  const Site x = Site::index(0), w = Site::index(1);
  const CbpModel aug = moments::augment_sites(m, x);
  ASSERT_EQ(aug.size(), 2u);
  EXPECT_EQ(aug.catalyst(1).alpha, 0.0);
  EXPECT_EQ(aug.catalyst(1).beta, 1.0);
  const MomentEngine a(m), b(aug);
  EXPECT_NEAR(a.nu(), b.nu(), 1e-10);
  EXPECT_NEAR(a.a(x, w, 1), b.a(x, w, 1), 1e-9);
  EXPECT_NEAR(a.a(x, w, 2), b.a(x, w, 2), 1e-9);
  EXPECT_NEAR(a.A(x, 2), b.A(x, 2), 1e-9);
}

TEST(Moments, AugmentRejectsCatalystSite) {
  const CbpModel m = test::two_state(kThree);
  try {
    moments::augment_sites(m, Site::index(1));
    FAIL() << "expected SiteAlreadyCatalyst";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SiteAlreadyCatalyst);
  }
}

TEST(Moments, TableCoversRequest) {
  const MomentTable t =
      moments::moment_table(test::two_state(kThree, 2), {Site::index(0), Site::index(1)}, {Site::index(1)}, 2);
  EXPECT_EQ(t.local.size(), 4u);
  EXPECT_EQ(t.total.size(), 4u);
  for (const LocalConstant& c : t.local) EXPECT_EQ(c.symbol, 'a');
  for (const TotalConstant& c : t.total) EXPECT_EQ(c.symbol, 'A');
}

}  // namespace
}  // namespace cbp
