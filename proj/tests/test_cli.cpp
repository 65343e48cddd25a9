#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <unistd.h>

#include "energy_fixture.hpp"
#include "mflm/cli.hpp"
#include "mflm/data.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("mflm_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliRun run(std::vector<std::string> args) {
    args.insert(args.begin(), "mflm");
    args.push_back("--out-dir");
    args.push_back(dir_.string());
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    CliRun r;
    r.code = mflm::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
  }

  json report(const std::string& command) {
    std::ifstream in(dir_ / (command + "_report.json"));
    return json::parse(in);
  }

  std::string slurp(const std::string& name) {
    std::ifstream in(dir_ / name);
    return std::string(std::istreambuf_iterator<char>(in), {});
  }

  fs::path dir_;
};

std::vector<int> blocks(const json& support) { return support["blocks"].get<std::vector<int>>(); }

}  // namespace

TEST_F(Cli, SimulateWritesDatasetAndTruth) {
  const auto r = run({"simulate", "--example", "1", "--n", "1000", "--sigma", "0.01", "--seed", "7"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = report("simulate");
  EXPECT_EQ(rep["summary"]["p"], 7);
  EXPECT_EQ(rep["seed"], 7);
  for (const auto& f : rep["outputs"]) EXPECT_TRUE(fs::exists(f.get<std::string>())) << f;
  const auto data = mflm::load_dataset(dir_ / "sim.manifest");
  EXPECT_EQ(data.p(), 7u);
  EXPECT_EQ(data.n(), 1000);
}

TEST_F(Cli, SimulateIsReproducible) {
  ASSERT_EQ(run({"simulate", "--example", "2", "--n", "50", "--seed", "3", "--name", "a"}).code, 0);
  ASSERT_EQ(run({"simulate", "--example", "2", "--n", "50", "--seed", "3", "--name", "b"}).code, 0);
  EXPECT_EQ(slurp("a.csv"), slurp("b.csv"));
  EXPECT_EQ(slurp("a_truth.csv"), slurp("b_truth.csv"));
}

TEST_F(Cli, UsageErrors) {
  auto r = run({"simulate", "--example", "3"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error: usage:", 0), 0u) << r.err;
  EXPECT_EQ(r.err.find('\n'), r.err.size() - 1);
  EXPECT_EQ(run({"simulate"}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"path", "--example", "1", "--delta", "2"}).code, 2);
  EXPECT_EQ(run({"fit", "--example", "1", "--select", "aic"}).code, 2);
  EXPECT_EQ(run({"--tol", "-1", "path", "--example", "1", "--n", "20"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(Cli, RuntimeErrorsAreOneLine) {
  auto r = run({"path", "--data", (dir_ / "nope.manifest").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: io:", 0), 0u) << r.err;
  r = run({"energy", "--raw", (dir_ / "nope.csv").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: io:", 0), 0u) << r.err;
}

TEST_F(Cli, PathTableShape) {
  ASSERT_EQ(run({"simulate", "--example", "2", "--n", "200", "--seed", "2"}).code, 0);
  const auto r = run({"path", "--data", (dir_ / "sim.manifest").string(), "--n-r", "12"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = mflm::read_csv(dir_ / "path.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"r", "block", "norm", "converged"}));
  ASSERT_EQ(t.rows.size(), 12u * 7u);
  for (std::size_t k = 0; k < 7; ++k) EXPECT_EQ(std::stod(t.rows[k][2]), 0.0);
}

TEST_F(Cli, ProjectedPath) {
  const auto r = run({"path", "--example", "1", "--n", "150", "--n-r", "5", "--project", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(report("path")["config"]["project"], 4);
  EXPECT_EQ(run({"path", "--example", "1", "--n", "50", "--n-r", "5", "--project", "100000"}).code, 2);
}

TEST_F(Cli, FitExampleOneSigmaRule) {
  const auto r = run({"--seed", "11", "fit", "--example", "1", "--select", "sigma", "--debias"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = report("fit");
  const auto& s = rep["summary"];
  EXPECT_EQ(blocks(s["support"]), (std::vector<int>{1}));
  for (const auto& f : rep["outputs"]) EXPECT_TRUE(fs::exists(f.get<std::string>())) << f;

  // Ridge refit reduces the error on the active block.
  EXPECT_LT(s["error_debiased"]["per_block"][0].get<double>(), s["error_lasso"]["per_block"][0].get<double>());

  // Every block other than 1 is zero above the selected r.
  const double refit = s["refit_r"];
  const auto t = mflm::read_csv(dir_ / "path.csv");
  for (const auto& row : t.rows) {
    if (std::stod(row[0]) > refit && row[1] != "1") {
      EXPECT_EQ(std::stod(row[2]), 0.0) << row[0] << " " << row[1];
    }
  }
}

TEST_F(Cli, FitExampleTwoProjected) {
  const auto r = run({"--seed", "5", "fit", "--example", "2", "--select", "sigma", "--project", "auto"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto s = report("fit")["summary"];
  EXPECT_EQ(blocks(s["support"]), (std::vector<int>{1, 4, 7}));
  EXPECT_TRUE(s.contains("chosen_m"));
  EXPECT_LE(s["chosen_m"].get<int>(), s["m_n"].get<int>());
  EXPECT_TRUE(fs::exists(dir_ / "fit_coef_projected.csv"));
}

TEST_F(Cli, FitFixedDimensionAndBic) {
  const auto r = run({"fit", "--example", "2", "--n", "200", "--select", "bic", "--project", "6", "--n-r", "20"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto s = report("fit")["summary"];
  EXPECT_EQ(s["chosen_m"], 6);
  EXPECT_EQ(s["rule"], "bic");
}

TEST_F(Cli, MonteCarloPercentages) {
  const auto r = run({"montecarlo", "--example", "1", "--n", "200", "--reps", "3", "--n-r", "30", "--project", "auto"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = mflm::read_csv(dir_ / "montecarlo_reps.csv");
  ASSERT_EQ(t.rows.size(), 3u);
  int exact = 0;
  for (const auto& row : t.rows) exact += row[t.column("exact_plain", "reps")] == "1" ? 1 : 0;
  const auto s = report("montecarlo")["summary"];
  const double pct = s["recovery_plain_percent"];
  EXPECT_GE(pct, 0.0);
  EXPECT_LE(pct, 100.0);
  EXPECT_DOUBLE_EQ(pct, 100.0 * exact / 3.0);
  EXPECT_TRUE(s["recovery_projected_percent"].is_number());
}

TEST_F(Cli, EnergyOnFixture) {
  using namespace std::chrono;
  fixture::write_energy_csv(dir_ / "energy.csv", sys_days{year{2016} / 1 / 11} + hours{17}, 40 * 144, 3);
  const auto r = run({"energy", "--raw", (dir_ / "energy.csv").string(), "--n-r", "20"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = mflm::read_csv(dir_ / "energy_path.csv");
  EXPECT_EQ(t.rows.size(), 20u * 24u);
  const auto s = report("energy")["summary"];
  EXPECT_EQ(s["p"], 24);
  EXPECT_TRUE(s.contains("matches_reference"));

  // Same file, same output.
  const std::string first = slurp("energy_path.csv");
  ASSERT_EQ(run({"energy", "--raw", (dir_ / "energy.csv").string(), "--n-r", "20"}).code, 0);
  EXPECT_EQ(slurp("energy_path.csv"), first);
}
