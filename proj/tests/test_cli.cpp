#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "condmall/fixtures.hpp"
#include "condmall/model_io.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("condmall_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Outcome run(const std::string& args) {
    const auto out = dir_ / "stdout", err = dir_ / "stderr";
    const std::string cmd =
        std::string(CONDMALL_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

  fs::path write(const std::string& name, const std::string& text) {
    auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

// Data lines of a CSV output, without the metadata comment.
std::string csv_body(const std::string& s) { return s.substr(s.find('\n') + 1); }

TEST_F(Cli, VerifyOperatorsPasses) {
  auto r = run("verify-operators --models 100 --seed 7");
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json::parse(r.out);
  EXPECT_EQ(j["command"], "verify-operators");
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_EQ(j["metadata"]["seed"], 7);
  EXPECT_FALSE(j["metadata"]["version"].get<std::string>().empty());
  EXPECT_EQ(j["metadata"]["parameters"]["models"], 100);
}

TEST_F(Cli, CltBernoulliCsvRows) {
  auto r = run("clt-bernoulli --n 64,256 --no-slope --samples 10000 --seed 3 --format csv");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("# command=clt-bernoulli", 0), 0u);
  std::stringstream ss(csv_body(r.out));
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "n,samples,seed,dw_empirical,bound");
  int rows = 0;
  while (std::getline(ss, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 4);
  }
  EXPECT_EQ(rows, 2);
}

TEST_F(Cli, NumericOutputIsDeterministic) {
  const std::string args = "hypergraph-motif --mode experiment --n 10,12 --p 0.3 --samples 10000 --seed 9 --format csv";
  auto a = run(args + " --workers 1");
  auto b = run(args + " --workers 3");
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(csv_body(a.out), csv_body(b.out));
}

TEST_F(Cli, MissingConfigIsUsageError) {
  const auto missing = (dir_ / "absent.json").string();
  auto r = run("verify-operators --config " + missing);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find(missing), std::string::npos);
}

TEST_F(Cli, UnknownOptionIsUsageError) {
  auto r = run("verify-operators --no-such-flag 3");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST_F(Cli, ConfigSuppliesCommandAndFlagsOverride) {
  auto cfg = write("c.json", R"({"command": "clt-bernoulli", "seed": 4,
                                 "params": {"n": [64], "samples": 50000, "no-slope": true}})");
  auto r = run("--config " + cfg.string() + " --samples 10000");
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json::parse(r.out);
  EXPECT_EQ(j["metadata"]["seed"], 4);
  EXPECT_EQ(j["metadata"]["parameters"]["samples"], 10000);
  EXPECT_EQ(j["rows"].size(), 1u);
}

TEST_F(Cli, FailingCheckExitsTwo) {
  auto r = run("verify-operators --models 5 --tolerance 0");
  EXPECT_EQ(r.code, 2);
  auto failure = json::parse(r.err);
  EXPECT_FALSE(failure["pass"].get<bool>());
  EXPECT_FALSE(failure["failed_checks"].empty());
}

TEST_F(Cli, DegenerateMotifExitsTwo) {
  auto r = run("hypergraph-motif --mode experiment --n 10 --p 1 --samples 10000");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(json::parse(r.err)["error"], "ZeroVariance");
}

TEST_F(Cli, ChaosOnModelFile) {
  auto path = write("cm1.json", condmall::model_to_json(*condmall::cm1_model()).dump());
  auto r = run("chaos --model " + path.string());
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json::parse(r.out);
  EXPECT_EQ(j["report"]["details"]["chaos_energy"].size(), 4u);
}

TEST_F(Cli, GlauberDumpsPaths) {
  auto dump = dir_ / "paths.jsonl";
  auto out = dir_ / "report.json";
  auto r = run("glauber --paths 500 --t 1 --dump-paths " + dump.string() + " --dump-count 3 --out " +
               out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_TRUE(json::parse(slurp(out))["pass"].get<bool>());
  std::stringstream ss(slurp(dump));
  int lines = 0;
  for (std::string line; std::getline(ss, line); ++lines) EXPECT_TRUE(json::parse(line).is_object());
  EXPECT_EQ(lines, 3);
}

TEST_F(Cli, OutDirectoryMustExist) {
  auto r = run("verify-operators --models 2 --out " + (dir_ / "nope" / "x.json").string());
  EXPECT_EQ(r.code, 1);
}

}  // namespace
