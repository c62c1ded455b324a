#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "roblearn/data.hpp"
#include "roblearn/results.hpp"

using namespace roblearn;

namespace {

struct RunResult {
  int rc;
  std::string out, err;
};

std::filesystem::path scratch() {
  auto dir = std::filesystem::temp_directory_path() / "roblearn_test_cli";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

RunResult run_cli(const std::string& args) {
  const auto err_path = scratch() / "stderr.txt";
  const std::string cmd = std::string(ROBLEARN_CLI_PATH) + " " + args + " 2>" + err_path.string();
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, "", ""};
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out, slurp(err_path)};
}

const std::string kOffsets = "--offsets '0,0;0.3,0;-0.3,0;0,0.3'";

std::string model_file() {
  const auto p = scratch() / "model.json";
  if (!std::filesystem::exists(p)) run_cli("rerm-ellipsoid --seed 3 --output " + p.string());
  return p.string();
}

std::string args_for(const std::string& cmd) {
  if (cmd == "certify" || cmd == "attack") return "--model " + model_file();
  if (cmd == "robustify" || cmd == "fms" || cmd == "wm") return kOffsets;
  return "";
}

void expect_error_json(const RunResult& r, const std::string& name) {
  Json e = Json::parse(r.err, nullptr, false);
  ASSERT_FALSE(e.is_discarded()) << r.err;
  EXPECT_EQ(e["error"], name);
  EXPECT_TRUE(e["message"].is_string());
}

}  // namespace

class Subcommand : public ::testing::TestWithParam<std::string> {};

TEST_P(Subcommand, ExitsZeroWithJson) {
  const std::string cmd = GetParam();
  RunResult r = run_cli(cmd + " --seed 11 " + args_for(cmd));
  ASSERT_EQ(r.rc, 0) << r.err;
  if (cmd == "gen-data") {
    std::istringstream in(r.out);
    EXPECT_GT(parse_csv(in).size(), 0u);
    return;
  }
  Json doc = Json::parse(r.out, nullptr, false);
  ASSERT_FALSE(doc.is_discarded()) << r.out;
  EXPECT_EQ(doc["config"]["command"], cmd);
  EXPECT_TRUE(doc.contains("metrics"));
}

TEST_P(Subcommand, ByteIdenticalRerun) {
  const std::string cmd = GetParam();
  const std::string args = cmd + " --seed 5 " + args_for(cmd);
  RunResult a = run_cli(args), b = run_cli(args);
  ASSERT_EQ(a.rc, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
}

INSTANTIATE_TEST_SUITE_P(All, Subcommand,
                         ::testing::Values("certify", "attack", "rerm-ellipsoid", "roboost", "uroboost",
                                           "alpha-boost", "robustify", "fms", "cycle-robust", "one-pass",
                                           "wm", "rcn-train", "rejectron", "urejectron", "transductive-pool",
                                           "gen-data"),
                         [](const auto& info) {
                           std::string n = info.param;
                           std::replace(n.begin(), n.end(), '-', '_');
                           return n;
                         });

TEST(Cli, OutputFileMatchesStdout) {
  const auto p = scratch() / "out.json";
  RunResult a = run_cli("roboost --seed 2");
  RunResult b = run_cli("roboost --seed 2 --output " + p.string());
  ASSERT_EQ(b.rc, 0);
  EXPECT_EQ(Json::parse(slurp(p)), Json::parse(a.out));
}

TEST(Cli, ThreadCountDoesNotChangeOutput) {
  RunResult a = run_cli("alpha-boost --seed 4");
  RunResult b = run_cli("alpha-boost --seed 4");
  setenv("ROBLEARN_THREADS", "1", 1);
  RunResult c = run_cli("alpha-boost --seed 4");
  unsetenv("ROBLEARN_THREADS");
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);
}

TEST(Cli, GeneratedCsvFeedsTraining) {
  const auto p = scratch() / "gen.csv";
  ASSERT_EQ(run_cli("gen-data --gen gaussian --n 120 --seed 1 --output " + p.string()).rc, 0);
  EXPECT_EQ(load_csv(p.string()).size(), 120u);
  RunResult r = run_cli("cycle-robust --input " + p.string());
  EXPECT_EQ(r.rc, 0) << r.err;
}

TEST(CliErrors, ConfigExitTwo) {
  EXPECT_EQ(run_cli("roboost --no-such-flag").rc, 2);
  EXPECT_EQ(run_cli("").rc, 2);
  RunResult r = run_cli("certify");
  EXPECT_EQ(r.rc, 2);
  expect_error_json(r, "ConfigError");
  RunResult bad_p = run_cli("roboost --p 0.5");
  EXPECT_EQ(bad_p.rc, 2);
  RunResult wm = run_cli("wm");
  EXPECT_EQ(wm.rc, 2);
}

TEST(CliErrors, DataExitThree) {
  RunResult missing = run_cli("roboost --input /nonexistent/x.csv");
  EXPECT_EQ(missing.rc, 3);
  expect_error_json(missing, "IoError");
  const auto p = scratch() / "bad.csv";
  std::ofstream(p) << "1,2,1\n3,4,0\n";
  RunResult bad = run_cli("roboost --input " + p.string());
  EXPECT_EQ(bad.rc, 3);
  expect_error_json(bad, "ParseError");
}

TEST(CliErrors, NonRealizableExitFour) {
  const auto p = scratch() / "moons.csv";
  ASSERT_EQ(run_cli("gen-data --gen moons --noise 0.3 --n 200 --seed 1 --output " + p.string()).rc, 0);
  RunResult r = run_cli("rerm-ellipsoid --input " + p.string());
  EXPECT_EQ(r.rc, 4);
  expect_error_json(r, "NotSeparable");
  RunResult c = run_cli("cycle-robust --mistake-cap 5 --input " + p.string());
  EXPECT_EQ(c.rc, 4);
  expect_error_json(c, "MistakeCapExceeded");
}
