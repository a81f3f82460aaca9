#include "bqo/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "bqo/bundle.hpp"
#include "test_support.hpp"

namespace bqo {
namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "bqo");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("bqo_cli_" + std::string(::testing::UnitTest::GetInstance()
                                          ->current_test_info()
                                          ->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }
  std::string at(const std::string& name) const { return (root_ / name).string(); }

  void build_heat(const std::string& name) {
    ASSERT_EQ(run({"build", "heat", "--k", "10", "--gamma", "0.1", "--out", at(name)}).code, 0);
  }

  fs::path root_;
};

TEST_F(CliTest, BuildHeatIdentity) {
  const Result r = run({"build", "heat", "--k", "10", "--output-variant", "identity",
                        "--out", at("heat")});
  ASSERT_EQ(r.code, 0) << r.err;
  const BqoSystem s = load_system(at("heat"));
  EXPECT_EQ(s.n(), 100);
  EXPECT_EQ(s.M()[1], Matrix::Identity(100, 100) / 100.0);
  EXPECT_TRUE(fs::exists(root_ / "heat" / "run.json"));
}

TEST_F(CliTest, BuildRandomIsDeterministic) {
  for (const char* name : {"a", "b"}) {
    ASSERT_EQ(run({"build", "random", "--n", "10", "--m", "2", "--p", "2", "--seed", "7",
                   "--margin", "0.5", "--out", at(name)})
                  .code,
              0);
  }
  for (const char* f : {"A.csv", "B.csv", "C.csv", "N1.csv", "N2.csv", "M1.csv", "M2.csv",
                        "manifest.json"}) {
    EXPECT_EQ(slurp(root_ / "a" / f), slurp(root_ / "b" / f)) << f;
  }
}

TEST_F(CliTest, UsageErrors) {
  const Result r = run({"build", "heat", "--out", at("x")});
  EXPECT_EQ(r.code, 2);
  const auto diag = nlohmann::json::parse(r.err);
  EXPECT_EQ(diag.at("error"), "Usage");
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"build", "heat", "--k", "2", "--out", at("x")}).code, 2);
  EXPECT_EQ(run({"gramians", "--system", at("missing"), "--out", at("g")}).code, 1);
  EXPECT_EQ(run({"--version"}).code, 0);
}

TEST_F(CliTest, ScalarGramians) {
  save_system(at("scalar"), testing::scalar_system());
  ASSERT_EQ(run({"gramians", "--system", at("scalar"), "--variant", "S", "--out", at("g")}).code, 0);
  EXPECT_NEAR(read_matrix_csv(root_ / "g" / "P.csv")(0, 0), 4.0 / 7.0, 1e-7);
  ASSERT_EQ(run({"gramians", "--system", at("scalar"), "--variant", "S", "--tol", "1e-14",
                 "--max-iter", "200", "--out", at("gt")}).code, 0);
  EXPECT_NEAR(read_matrix_csv(root_ / "gt" / "P.csv")(0, 0), 4.0 / 7.0, 1e-12);
  EXPECT_NEAR(read_matrix_csv(root_ / "gt" / "Q.csv")(0, 0), 44.0 / 49.0, 1e-12);

  ASSERT_EQ(run({"gramians", "--system", at("scalar"), "--variant", "TP", "--out", at("tp")}).code, 0);
  ASSERT_EQ(run({"gramians", "--system", at("scalar"), "--variant", "TA", "--out", at("ta")}).code, 0);
  EXPECT_EQ(read_matrix_csv(root_ / "tp" / "Qhat.csv"), read_matrix_csv(root_ / "ta" / "Q.csv"));

  ASSERT_EQ(run({"gramians", "--system", at("scalar"), "--variant", "M", "--phi", "0.5",
                 "--tol", "1e-14", "--max-iter", "200", "--out", at("m")}).code, 0);
  EXPECT_NEAR(read_matrix_csv(root_ / "m" / "Q.csv")(0, 0), (11.0 / 7.0) / 1.9375, 1e-12);
  EXPECT_EQ(run({"gramians", "--system", at("scalar"), "--variant", "Z", "--out", at("z")}).code, 2);
}

TEST_F(CliTest, HeatResidualReport) {
  ASSERT_EQ(run({"build", "heat", "--k", "10", "--out", at("heat")}).code, 0);
  ASSERT_EQ(run({"gramians", "--system", at("heat"), "--gamma", "0.1", "--out", at("g")}).code, 0);
  const auto rep = nlohmann::json::parse(slurp(root_ / "g" / "residuals.json"));
  for (const auto& item : rep.at("residuals").items()) {
    EXPECT_LE(item.value().get<double>(), 1e-8) << item.key();
  }
  EXPECT_EQ(read_run_manifest(at("g")).options.at("gamma"), "0.10000000000000001");
}

TEST_F(CliTest, ReduceAndSimulate) {
  build_heat("heat");
  ASSERT_EQ(run({"gramians", "--system", at("heat"), "--out", at("g")}).code, 0);
  ASSERT_EQ(run({"reduce", "--system", at("heat"), "--gramians", at("g"), "--r", "10",
                 "--out", at("r10")}).code, 0);
  const Matrix hsv = read_matrix_csv(root_ / "r10" / "hsv.csv", true);
  EXPECT_GE(hsv.rows(), 10);
  for (Eigen::Index i = 1; i < hsv.rows(); ++i) EXPECT_LE(hsv(i, 0), hsv(i - 1, 0));
  EXPECT_EQ(load_system(at("r10")).n(), 10);
  EXPECT_EQ(load_system(at("r10")).input_scale(), 0.1);

  const Result bad = run({"reduce", "--system", at("heat"), "--gramians", at("g"), "--r", "100",
                          "--out", at("r100")});
  EXPECT_EQ(bad.code, 1);
  const auto diag = nlohmann::json::parse(bad.err);
  EXPECT_EQ(diag.at("error"), "RankDeficient");
  EXPECT_GT(diag.at("achievable_r").get<int>(), 10);

  const Result sim = run({"simulate", "--system", at("heat"), "--reduced", at("heat"),
                          "--reduced", at("r10"), "--input", "cos", "--t-end", "5",
                          "--steps", "1000", "--out", at("sim")});
  ASSERT_EQ(sim.code, 0) << sim.err;
  const auto errs = nlohmann::json::parse(slurp(root_ / "sim" / "errors.json"));
  EXPECT_EQ(errs[0].at("frobenius_rel").get<double>(), 0.0);
  EXPECT_GT(errs[1].at("frobenius_rel").get<double>(), 0.0);
  const Matrix y = read_matrix_csv(root_ / "sim" / "trajectory_full.csv", true);
  EXPECT_EQ(y.cols(), 3);
  EXPECT_EQ(y.rows(), 1001);
}

TEST_F(CliTest, ScalarReductionPassThrough) {
  save_system(at("scalar"), testing::scalar_system());
  ASSERT_EQ(run({"gramians", "--system", at("scalar"), "--out", at("g")}).code, 0);
  ASSERT_EQ(run({"reduce", "--system", at("scalar"), "--gramians", at("g"), "--r", "1",
                 "--out", at("r")}).code, 0);
  ASSERT_EQ(run({"simulate", "--system", at("scalar"), "--reduced", at("r"), "--input", "exp",
                 "--t-end", "2", "--steps", "100", "--out", at("sim")}).code, 0);
  const auto errs = nlohmann::json::parse(slurp(root_ / "sim" / "errors.json"));
  EXPECT_LE(errs[0].at("frobenius_rel").get<double>(), 1e-12);
}

TEST_F(CliTest, TableInput) {
  save_system(at("scalar"), testing::scalar_system());
  std::ofstream(root_ / "u.csv") << "t,u1\n0,1\n10,1\n";
  ASSERT_EQ(run({"simulate", "--system", at("scalar"), "--input", "table", "--table",
                 (root_ / "u.csv").string(), "--t-end", "1", "--steps", "10", "--out",
                 at("sim")}).code, 0);
  EXPECT_EQ(run({"simulate", "--system", at("scalar"), "--input", "table", "--out",
                 at("sim2")}).code, 2);
}

TEST_F(CliTest, ErrsweepTrend) {
  build_heat("heat");
  std::vector<std::string> rs;
  for (int r = 2; r <= 20; r += 2) rs.push_back(std::to_string(r));
  std::string list;
  for (const auto& r : rs) list += (list.empty() ? "" : ",") + r;
  const Result res = run({"errsweep", "--system", at("heat"), "--variant", "S", "--r-list", list,
                          "--input", "cos", "--t-end", "5", "--steps", "1000", "--out", at("sw")});
  ASSERT_EQ(res.code, 0) << res.err;
  const Matrix tab = read_matrix_csv(root_ / "sw" / "errsweep.csv", true);
  ASSERT_EQ(tab.rows(), static_cast<Eigen::Index>(rs.size()));
  // The two symmetric inputs make Hankel singular values come in near pairs,
  // so single steps of 2 may go up; steps of 4 must go down.
  for (Eigen::Index i = 2; i < tab.rows(); ++i)
    EXPECT_LT(tab(i, 1), tab(i - 2, 1)) << "r = " << tab(i, 0);
  EXPECT_LT(tab(tab.rows() - 1, 1), 1e-3 * tab(0, 1));
}

TEST_F(CliTest, ReplayReproducesOutputs) {
  build_heat("heat");
  ASSERT_EQ(run({"gramians", "--system", at("heat"), "--variant", "TS", "--out", at("g")}).code, 0);
  ASSERT_EQ(run({"replay", "--run", at("g"), "--out", at("g2")}).code, 0);
  for (const char* f : {"P.csv", "Q.csv", "P1.csv", "Q1.csv", "Qhat.csv", "residuals.json"}) {
    EXPECT_EQ(slurp(root_ / "g" / f), slurp(root_ / "g2" / f)) << f;
  }
  ASSERT_EQ(run({"reduce", "--system", at("heat"), "--gramians", at("g"), "--r", "6",
                 "--out", at("r")}).code, 0);
  ASSERT_EQ(run({"replay", "--run", at("r"), "--out", at("r2")}).code, 0);
  EXPECT_EQ(slurp(root_ / "r" / "A.csv"), slurp(root_ / "r2" / "A.csv"));
  ASSERT_EQ(run({"replay", "--run", at("heat"), "--out", at("heat2")}).code, 0);
  EXPECT_EQ(slurp(root_ / "heat" / "A.csv"), slurp(root_ / "heat2" / "A.csv"));
  EXPECT_EQ(slurp(root_ / "heat" / "manifest.json"), slurp(root_ / "heat2" / "manifest.json"));
}

TEST_F(CliTest, OutputDirectoryFromEnvironment) {
  ::setenv("BQO_OUTPUT_DIR", root_.c_str(), 1);
  const Result r = run({"build", "random", "--n", "4", "--m", "1", "--p", "1", "--seed", "1"});
  ::unsetenv("BQO_OUTPUT_DIR");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(root_ / "build" / "A.csv"));
}

}  // namespace
}  // namespace bqo
