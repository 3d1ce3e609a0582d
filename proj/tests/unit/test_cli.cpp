#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "cbi/json_io.hpp"
#include "cbi/moments.hpp"
#include "cli.hpp"

namespace cbi {
namespace {

namespace fs = std::filesystem;
using cli::RunSpec;

const fs::path kScenarios = scenario_dir(CBI_TEST_SCENARIO_DIR);

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(RunSpec spec) {
  if (spec.scenario_dir.empty()) spec.scenario_dir = kScenarios;
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(spec, out, err);
  return {code, out.str(), err.str()};
}

RunSpec command(const std::string& name, const fs::path& params) {
  RunSpec s;
  s.command = name;
  s.params = params;
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cbi_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

TEST(Cli, ValidateCirPasses) {
  const Outcome o = run(command("validate", kScenarios / "cir.json"));
  EXPECT_EQ(o.code, cli::kOk);
  const Json j = Json::parse(o.out);
  EXPECT_TRUE(j["ok"].get<bool>());
  for (const auto& c : j["checks"]) EXPECT_TRUE(c["passed"].get<bool>()) << c["name"];
}

TEST(Cli, ValidateAcceptsScenarioFiles) {
  EXPECT_EQ(run(command("validate", kScenarios / "S3.json")).code, cli::kOk);
}

TEST(Cli, ValidateReportsInadmissibleParameters) {
  const Outcome o = run(command("validate", kScenarios / "invalid" / "nu_alpha_1_5.json"));
  EXPECT_EQ(o.code, cli::kInadmissible);
  EXPECT_FALSE(Json::parse(o.out)["ok"].get<bool>());
}

TEST(Cli, ValidateReportsDimensionMismatch) {
  const Outcome o = run(command("validate", kScenarios / "invalid" / "c_length_mismatch.json"));
  EXPECT_EQ(o.code, cli::kInputError);
  EXPECT_EQ(Json::parse(o.out)["checks"][0]["name"], "dimensions");
}

TEST(Cli, InadmissibleParametersBlockOtherCommands) {
  RunSpec s = command("mean", kScenarios / "invalid" / "B_negative_offdiag_d2.json");
  s.m0 = {1.0, 1.0};
  const Outcome o = run(s);
  EXPECT_EQ(o.code, cli::kInadmissible);
  EXPECT_NE(o.err.find("B.essentially_nonnegative"), std::string::npos);
}

TEST(Cli, InputErrors) {
  EXPECT_EQ(run(command("validate", "/nonexistent.json")).code, cli::kInputError);
  EXPECT_EQ(run(command("frobnicate", kScenarios / "cir.json")).code, cli::kInputError);
  RunSpec s = command("laplace", kScenarios / "cir.json");
  s.x = {1.0, 2.0};
  s.lam = {1.0};
  EXPECT_EQ(run(s).code, cli::kInputError);
  s.x = {-1.0};
  EXPECT_EQ(run(s).code, cli::kInputError);
  RunSpec v;
  v.command = "verify";
  v.check = "mean";
  v.scenario = "no_such_scenario";
  EXPECT_EQ(run(v).code, cli::kInputError);
}

TEST(Cli, LaplaceAtTimeZero) {
  RunSpec s = command("laplace", kScenarios / "S3.json");
  s.x = {1.0, 2.0};
  s.lam = {0.3, 0.7};
  s.t = 0.0;
  const Outcome o = run(s);
  ASSERT_EQ(o.code, cli::kOk) << o.err;
  EXPECT_EQ(Json::parse(o.out)["value"].get<double>(), std::exp(-(0.3 + 1.4)));
}

TEST(Cli, MeanMatchesLibrary) {
  RunSpec s = command("mean", kScenarios / "S3.json");
  s.m0 = {1.0, 0.5};
  s.t = 0.7;
  const Outcome o = run(s);
  ASSERT_EQ(o.code, cli::kOk) << o.err;
  const Scenario sc = load_scenario("S3", kScenarios);
  Vector m0(2);
  m0 << 1.0, 0.5;
  EXPECT_EQ(vector_from_json(Json::parse(o.out)["value"], "value"),
            mean(sc.params, derive(sc.params), m0, 0.7));
}

TEST(Cli, DeriveRoundTripsExactly) {
  for (const char* name : {"S1", "S2", "S3", "S4", "S5"}) {
    const fs::path file = kScenarios / (std::string(name) + ".json");
    const Outcome o = run(command("derive", file));
    ASSERT_EQ(o.code, cli::kOk) << o.err;
    const DerivedParams back = derived_from_json(Json::parse(o.out));
    const DerivedParams der = derive(load_scenario(name, kScenarios).params);
    EXPECT_EQ(back.beta_tilde, der.beta_tilde) << name;
    EXPECT_EQ(back.B_tilde, der.B_tilde) << name;
    EXPECT_EQ(back.D, der.D) << name;
    EXPECT_EQ(back.B_hat, der.B_hat) << name;
  }
}

RunSpec simulate_spec(const fs::path& out, std::size_t threads) {
  RunSpec s = command("simulate", kScenarios / "S3.json");
  s.x0 = {1.0, 1.0};
  s.T = 0.5;
  s.dt = 1.0 / 64.0;
  s.n = 300;
  s.seed = 123456789012345ULL;
  s.jumps = true;
  s.out = out;
  s.threads = threads;
  return s;
}

TEST(Cli, SimulateWritesCsv) {
  const fs::path dir = fresh_dir("sim_csv");
  const Outcome o = run(simulate_spec(dir, 1));
  ASSERT_EQ(o.code, cli::kOk) << o.err;
  EXPECT_EQ(Json::parse(o.out)["files"].size(), 600u);
  std::ifstream path(dir / "path_00000.csv");
  std::string line;
  std::getline(path, line);
  EXPECT_EQ(line, "t,x1,x2");
  std::getline(path, line);
  EXPECT_EQ(line, "0,1,1");
  std::size_t rows = 1;
  while (std::getline(path, line)) ++rows;
  EXPECT_EQ(rows, 33u);
  std::ifstream jumps(dir / "jumps_00000.csv");
  std::getline(jumps, line);
  EXPECT_EQ(line, "t,kind,type,z1,z2,u");
}

TEST(Cli, SimulateIsByteIdenticalAcrossRunsAndThreads) {
  const fs::path a = fresh_dir("det_a");
  const fs::path b = fresh_dir("det_b");
  ASSERT_EQ(run(simulate_spec(a, 1)).code, cli::kOk);
  ASSERT_EQ(run(simulate_spec(b, 4)).code, cli::kOk);
  for (const auto& entry : fs::directory_iterator(a)) {
    EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << entry.path();
  }
}

TEST(Cli, SimulateRejectsUnknownMode) {
  RunSpec s = simulate_spec(fresh_dir("mode"), 1);
  s.mode = "reflect";
  EXPECT_EQ(run(s).code, cli::kInputError);
}

TEST(Cli, VerifyMeanS1Passes) {
  const fs::path report = fs::temp_directory_path() / "cbi_cli_verify_s1.json";
  RunSpec s;
  s.command = "verify";
  s.check = "mean";
  s.scenario = "S1";
  s.out = report;
  const Outcome o = run(s);
  EXPECT_EQ(o.code, cli::kOk) << o.out;
  EXPECT_NE(o.out.find("result: PASS"), std::string::npos);
  const Json j = read_json_file(report);
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_LE(std::abs(j["entries"][0]["z"].get<double>()), 3.0);
  EXPECT_FALSE(j.contains("runtime_seconds"));
}

}  // namespace
}  // namespace cbi
