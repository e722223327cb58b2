#include <gtest/gtest.h>

#include "cbp/error.hpp"
#include "cbp/model.hpp"
#include "test_util.hpp"

namespace cbp {
namespace {

ErrorCode load_error(const std::string& text) {
  try {
    model::load_model(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

const char* kChain = R"("chain": {"states": ["a", "b"], "generator": [[-1, 1], [2, -2]]})";

TEST(Model, FactorialMoments) {
  const std::vector<double> f = factorial_moments({0.5, 0.0, 0.5}, 3);
  ASSERT_EQ(f.size(), 3u);
  EXPECT_DOUBLE_EQ(f[0], 1.0);
  EXPECT_DOUBLE_EQ(f[1], 1.0);
  EXPECT_DOUBLE_EQ(f[2], 0.0);
  const std::vector<double> g = factorial_moments({0.0, 0.0, 0.0, 1.0}, 3);
  EXPECT_DOUBLE_EQ(g[0], 3.0);
  EXPECT_DOUBLE_EQ(g[1], 6.0);
  EXPECT_DOUBLE_EQ(g[2], 6.0);
}

TEST(Model, LoadsLawObjectsAndLabels) {
  const CbpModel m = model::load_model(std::string("{") + kChain +
                                       R"(, "catalysts": [{"site": "b", "alpha": 0.25, "beta": 3, "law": {"0": 0.5, "2": 0.5}}]})");
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m.catalyst(0).site, Site::index(1));
  EXPECT_DOUBLE_EQ(m.mean(0), 1.0);
  EXPECT_DOUBLE_EQ(m.factorial_moment(0, 2), 1.0);
  EXPECT_TRUE(m.nondegenerate_law(0));
  EXPECT_EQ(m.catalyst_index(Site::index(1)), 0u);
  EXPECT_FALSE(m.catalyst_index(Site::index(0)).has_value());
}

TEST(Model, DumpRoundTrips) {
  const CbpModel m = test::load("z_two_catalysts.json");
  const CbpModel again = model::load_model(model::dump_model(m));
  EXPECT_EQ(model::dump_model(again), model::dump_model(m));
  ASSERT_EQ(again.size(), 2u);
  EXPECT_EQ(again.catalyst(1).alpha, m.catalyst(1).alpha);
}

TEST(Model, ValidationErrors) {
  const std::string head = std::string("{") + kChain + R"(, "catalysts": [)";
  EXPECT_EQ(load_error(head + R"({"site": "c", "alpha": 0.5, "beta": 1, "moments": [1]}]})"), ErrorCode::UnknownSite);
  EXPECT_EQ(load_error(head + R"({"site": "a", "alpha": 1.5, "beta": 1, "moments": [1]}]})"),
            ErrorCode::AlphaOutOfRange);
  EXPECT_EQ(load_error(head + R"({"site": "a", "alpha": 0.5, "beta": 1, "moments": [1]},
                                 {"site": "a", "alpha": 0.5, "beta": 1, "moments": [1]}]})"),
            ErrorCode::DuplicateSite);
  EXPECT_EQ(load_error(head + R"({"site": "a", "alpha": 0.5, "beta": 1, "moments": [2], "law": [0, 1]}]})"),
            ErrorCode::MomentLawMismatch);
  EXPECT_EQ(load_error(head + R"({"site": "a", "alpha": 0.5, "beta": 1, "moments": [1]}], "n_max": 2})"),
            ErrorCode::MomentOrderMissing);
  EXPECT_EQ(load_error("{not json"), ErrorCode::InvalidConfig);
}

TEST(Model, DegenerateLaw) {
  const CbpModel m = test::two_state({0.0, 1.0}, 1);
  EXPECT_FALSE(m.nondegenerate_law(0));
}

TEST(Model, WithMeansReplacesFirstMoment) {
  const CbpModel m = test::two_state({0.0, 0.0, 0.0, 1.0}, 1);
  const CbpModel n = m.with_means({0.5});
  EXPECT_DOUBLE_EQ(n.mean(0), 0.5);
  EXPECT_DOUBLE_EQ(m.mean(0), 3.0);
}

}  // namespace
}  // namespace cbp
