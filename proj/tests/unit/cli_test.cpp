#include "destab/cli/commands.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <unistd.h>

#include "destab/cli/io.hpp"
#include "destab/verify.hpp"
#include "json.hpp"
#include "suite.hpp"

namespace destab::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("destab_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
    example_ = write("example.json", example_system_json());
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
  std::string example_;
};

TEST_F(CliTest, AnalyzeExample) {
  const Invocation r = run({"analyze", example_});
  ASSERT_EQ(r.code, 0) << r.err;
  const json report = json::parse(r.out);
  EXPECT_NEAR(report["hinf_norm"].get<double>(), 1.0, 1e-9);
  EXPECT_NEAR(report["omega0"].get<double>(), 1.0, 1e-9);
  EXPECT_EQ(report["stability"], "Hurwitz");
  EXPECT_EQ(report["at_infinity"], false);
  EXPECT_EQ(report["u"].size(), 1u);
}

TEST_F(CliTest, AnalyzeZeroInputSystem) {
  const std::string file = write("zero_b.json", R"({"version": "destab-v1", "kind": "linear",
      "A": [[-1]], "B": [[0, 0]], "C": [[1], [0]], "D": [[3, 0], [0, -4]]})");
  const Invocation r = run({"analyze", file});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(json::parse(r.out)["hinf_norm"].get<double>(), 4.0, 1e-12);
}

TEST_F(CliTest, AnalyzeErrors) {
  EXPECT_EQ(run({"analyze", write("bad.json", "{ not json")}).code, kExitParse);
  EXPECT_EQ(run({"analyze", path("missing.json")}).code, kExitParse);
  EXPECT_EQ(run({"analyze", write("v.json", R"({"version": "v0", "A": [[-1]]})")}).code, kExitParse);
  EXPECT_EQ(run({"analyze", write("e.json", R"({"version": "destab-v1", "kind": "nonlinear",
      "state_dim": 1, "input_dim": 1, "equations": ["-x1 +"], "outputs": ["x1"]})")}).code,
            kExitParse);
  const Invocation unstable = run({"analyze", write("u.json", R"({"version": "destab-v1",
      "A": [[1]], "B": [[1]], "C": [[1]], "D": [[0]]})")});
  EXPECT_EQ(unstable.code, kExitPrecondition);
  EXPECT_NE(unstable.err.find("Unstable"), std::string::npos);
  EXPECT_EQ(run({"analyze", write("d.json", R"({"version": "destab-v1",
      "A": [[-1]], "B": [[1, 0]], "C": [[1]], "D": [[0]]})")}).code, kExitDimension);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, kExitPrecondition);
  EXPECT_EQ(run({"frobnicate"}).code, kExitPrecondition);
  EXPECT_EQ(run({"simulate", example_, "--method", "euler", "--no-attack"}).code, kExitPrecondition);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST_F(CliTest, ExampleRoundTrips) {
  const Invocation r = run({"example"});
  ASSERT_EQ(r.code, 0);
  const LoadedSystem sys = load_system_text(r.out);
  EXPECT_FALSE(sys.is_linear);
  EXPECT_EQ(sys.linear.states(), 2);
}

TEST_F(CliTest, SynthVerifyExample) {
  const std::string attack = path("attack.json");
  const Invocation s = run({"synth", example_, "--out", attack});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(json::parse(s.out)["certificate"]["result"], "PASS");
  const json file = json::parse(read_file(attack));
  EXPECT_EQ(file["D"], json::parse("[[1.0]]"));
  EXPECT_TRUE(file["A"].empty());
  EXPECT_EQ(file["metadata"]["construction"], "siso");
  const Invocation v = run({"verify", example_, attack});
  EXPECT_EQ(v.code, 0);
  EXPECT_EQ(json::parse(v.out)["closed_loop_class"], "Marginal");
}

TEST_F(CliTest, SynthToStdout) {
  const Invocation s = run({"synth", example_});
  ASSERT_EQ(s.code, 0);
  EXPECT_EQ(load_attack_text(s.out).realization.d()(0, 0), 1.0);
}

TEST_F(CliTest, VerifyFailuresAndMismatch) {
  const std::string half = write("half.json", R"({"version": "destab-v1", "kind": "attack",
      "A": [], "B": [], "C": [], "D": [[0.5]], "metadata": {"omega0": 1.0}})");
  const Invocation v = run({"verify", example_, half});
  EXPECT_EQ(v.code, kExitFail);
  EXPECT_EQ(json::parse(v.out)["result"], "FAIL");
  const std::string wide = write("wide.json", R"({"version": "destab-v1", "kind": "attack",
      "D": [[0.5, 0.5]], "metadata": {"omega0": 1.0}})");
  EXPECT_EQ(run({"verify", example_, wide}).code, kExitDimension);
  EXPECT_EQ(run({"sweep", example_, wide}).code, kExitDimension);
}

TEST_F(CliTest, SynthInfinitePeakNeedsSlack) {
  const std::string file = write("inf.json", R"({"version": "destab-v1",
      "A": [[-1]], "B": [[1]], "C": [[-1]], "D": [[2]]})");
  const Invocation r = run({"synth", file});
  EXPECT_EQ(r.code, kExitPrecondition);
  EXPECT_NE(r.err.find("--eps-near-minimal"), std::string::npos);
  const Invocation ok = run({"synth", file, "--eps-near-minimal", "0.01"});
  ASSERT_EQ(ok.code, 0) << ok.err;
  const AttackSystem att = load_attack_text(ok.out);
  EXPECT_EQ(att.construction, Construction::kNearMinimal);
  EXPECT_DOUBLE_EQ(att.epsilon, 0.01);
}

TEST_F(CliTest, SweepCsv) {
  const std::string attack = path("attack.json");
  ASSERT_EQ(run({"synth", example_, "--out", attack}).code, 0);
  const Invocation r = run({"sweep", example_, attack, "--eps-max", "0.2", "--steps", "41"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "eps,re_lambda,im_lambda");
  int rows = 0;
  double last_re = -INFINITY;
  std::string footer;
  while (std::getline(in, line)) {
    if (line[0] == '#') {
      footer = line;
      continue;
    }
    double eps, re, im;
    ASSERT_EQ(std::sscanf(line.c_str(), "%lf,%lf,%lf", &eps, &re, &im), 3);
    if (std::abs(eps - 0.1) < 1e-12) EXPECT_NEAR(re, 0.05, 1e-10);
    if (eps == 0.0) EXPECT_LE(std::abs(re), 1e-8);
    if (eps > 0.0) EXPECT_GT(re, last_re);
    last_re = re;
    ++rows;
  }
  EXPECT_EQ(rows, 41);
  EXPECT_EQ(footer.rfind("# crossing_rate=", 0), 0u);
  EXPECT_NEAR(std::stod(footer.substr(16)), 0.5, 1e-6);
  EXPECT_EQ(run({"sweep", example_, attack, "--steps", "40"}).code, kExitPrecondition);
}

TEST_F(CliTest, Simulate) {
  const std::string attack = path("attack.json");
  ASSERT_EQ(run({"synth", example_, "--out", attack}).code, 0);
  const Invocation minimal = run({"simulate", example_, attack, "--x0", "0.1,0.1"});
  ASSERT_EQ(minimal.code, 0) << minimal.err;
  EXPECT_EQ(minimal.out.rfind("t,x1,x2\n", 0), 0u);
  EXPECT_NE(minimal.out.find("\nverdict=Converged\n"), std::string::npos);
  EXPECT_EQ(minimal.out.substr(minimal.out.size() - 18), "verdict=Converged\n");
  const std::string csv = path("traj.csv");
  const Invocation perturbed = run({"simulate", example_, attack, "--attack-eps", "0.1", "--x0",
                             "0.01,0.01", "--out", csv, "--method", "rk45"});
  EXPECT_EQ(perturbed.out, "verdict=Diverged\n");
  EXPECT_EQ(read_file(csv).rfind("t,x1,x2\n", 0), 0u);
  const Invocation nominal = run({"simulate", example_, "--no-attack", "--x0", "0.1,0.1", "--out", csv});
  EXPECT_EQ(nominal.out, "verdict=Converged\n");
  EXPECT_EQ(run({"simulate", example_, "--x0", "1,2,3", "--no-attack"}).code, kExitDimension);
  EXPECT_EQ(run({"simulate", example_}).code, kExitPrecondition);
}

TEST_F(CliTest, SimulateBlowUpIsAResult) {
  const std::string file = write("grow.json", R"({"version": "destab-v1", "kind": "nonlinear",
      "state_dim": 1, "input_dim": 1, "equations": ["x1 + x1^2 + w1"], "outputs": ["x1"]})");
  const Invocation r = run({"simulate", file, "--no-attack", "--x0", "1", "--t-final", "10",
                     "--out", path("grow.csv")});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "verdict=Diverged\n");
}

TEST_F(CliTest, SuiteRoundTripsThroughFiles) {
  const std::vector<StateSpace> suite = destab::testing::random_suite(50);
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const std::string sys = write("g" + std::to_string(i) + ".json", system_to_json(suite[i]));
    const std::string att = path("a" + std::to_string(i) + ".json");
    ASSERT_EQ(run({"synth", sys, "--out", att}).code, 0) << i;
    const Invocation v = run({"verify", sys, att});
    EXPECT_EQ(v.code, 0) << i << "\n" << v.out;
  }
}

TEST_F(CliTest, MimoAttackMinimality) {
  StateSpace g = destab::testing::oscillator_plant();
  for (const StateSpace& candidate : destab::testing::random_suite(50)) {
    if (candidate.inputs() == 2 && candidate.outputs() == 2) {
      g = candidate;
      break;
    }
  }
  ASSERT_EQ(g.inputs(), 2);
  const std::string sys = write("g.json", system_to_json(g));
  const std::string att = path("a.json");
  ASSERT_EQ(run({"synth", sys, "--out", att}).code, 0);
  const json cert = json::parse(run({"verify", sys, att}).out);
  const double product = cert["system_norm"].get<double>() * cert["attack_norm"].get<double>();
  EXPECT_GE(product, 1.0 - 1e-6);
  EXPECT_LE(product, 1.0 + 1e-6);
}

}  // namespace
}  // namespace destab::cli
