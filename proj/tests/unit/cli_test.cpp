#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cbp/csv.hpp"
#include "cli.hpp"
#include "test_util.hpp"

namespace cbp {
namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

TEST(Csv, NumberFormat) {
  EXPECT_EQ(csv::number(0.0), "0");
  EXPECT_EQ(csv::number(1.0), "1");
  EXPECT_EQ(csv::number(2.0 / 3.0), "0.666666666667");
  EXPECT_EQ(csv::number(1.5e-20), "1.5e-20");
  EXPECT_EQ(csv::field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv::field("say \"x\""), "\"say \"\"x\"\"\"");
}

TEST(Cli, ClassifyTwoState) {
  const CliResult r = run({"classify", test::model_path("two_state.json")});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("regime=Supercritical"), std::string::npos);
  EXPECT_NE(r.out.find("nu=0.780776406"), std::string::npos);
  EXPECT_NE(r.out.find("d_tilde_root=0.780776406"), std::string::npos);
}

TEST(Cli, ClassifyRegimeOnly) {
  const CliResult r = run({"classify", test::model_path("two_state.json"), "--regime-only"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("regime=Supercritical"), std::string::npos);
  EXPECT_NE(r.out.find("nu=na"), std::string::npos);
  EXPECT_NE(r.out.find("d_tilde_root=na"), std::string::npos);
}

TEST(Cli, CritsetIsReproducible) {
  const CliResult a = run({"critset", test::model_path("z_two_catalysts.json")});
  const CliResult b = run({"critset", test::model_path("z_two_catalysts.json"), "--workers", "3"});
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.rfind("m_1,m_2,residual\n", 0), 0u);
  EXPECT_NE(a.out.find("\n1,1,"), std::string::npos);
  EXPECT_NE(a.out.find("\n0,1.05769230769,"), std::string::npos);
  EXPECT_NE(a.out.find("\n2.03703703704,0,"), std::string::npos);
}

TEST(Cli, MomentsCsv) {
  const CliResult r = run({"moments", test::model_path("two_state.json"), "--x", "1", "--y", "1", "--orders", "2"});
  EXPECT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "regime,nu,kind,x,y,order,symbol,value,positive");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("Supercritical,0.780776406405,local,1,1,1,a,0.8638", 0), 0u) << line;
}

TEST(Cli, SimulateCsv) {
  const CliResult r = run({"simulate", test::model_path("two_state.json"), "--replicates", "200", "--times", "0.5", "1"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("time,site,order,estimate,stderr,replicates,truncated\n", 0), 0u);
  EXPECT_NE(r.out.find("\n1,TOTAL,1,"), std::string::npos);
}

TEST(Cli, OracleCsv) {
  const CliResult r = run({"oracle", test::model_path("two_state.json"), "--times", "1"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("time,x,y,m1,m2\n", 0), 0u);
}

TEST(Cli, VerifyPasses) {
  const CliResult r = run({"verify", test::model_path("two_state.json"), "--count", "12", "--seed", "4"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find(",FAIL,"), std::string::npos);
}

TEST(Cli, ValidationErrorExitCode) {
  const std::string path = testing::TempDir() + "/bad_rows.json";
  std::ofstream(path) << R"({"chain": {"generator": [[-1, 0.5], [1, -1]]},
                             "catalysts": [{"site": "1", "alpha": 0.5, "beta": 1, "law": [0, 0, 1]}]})";
  const CliResult r = run({"verify", path});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error[RowSumNonzero]:", 0), 0u) << r.err;
}

TEST(Cli, UnknownSiteAndBadFlags) {
  const CliResult r = run({"moments", test::model_path("two_state.json"), "--x", "9"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error[UnknownSite]"), std::string::npos);
  EXPECT_EQ(run({"classify"}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
}

}  // namespace
}  // namespace cbp
