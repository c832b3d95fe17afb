#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <set>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "tbaopt/hash.hpp"
#include "tbaopt/value.hpp"

using namespace tbaopt;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + TBAOPT_CLI + " " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path tmpdir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("tbaopt_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::size_t count_jsonl(const fs::path& dir) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ".jsonl";
  return n;
}

}  // namespace

TEST(Cli, RunWritesLogAndSummary) {
  const auto dir = tmpdir("run");
  const auto r = cli("run --benchmark crashy_branin --optimizer hybrid --budget 25 --seed 0 --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(count_jsonl(dir), 1u);
  const auto log = dir / "hybrid-crashy_branin-default-mid-B25-s0.jsonl";
  ASSERT_TRUE(fs::exists(log));
  ASSERT_TRUE(fs::exists(dir / "hybrid-crashy_branin-default-mid-B25-s0.summary.json"));
  const auto summary = Json::parse(r.out);
  EXPECT_EQ(summary["trials"], 25);
  EXPECT_EQ(summary["complete"], true);
}

TEST(Cli, UsageErrors) {
  const auto dir = tmpdir("usage").string();
  auto r = cli("run --optimizer bogus --out " + dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("random"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("hybrid"), std::string::npos);
  EXPECT_EQ(cli("run --benchmark nope --out " + dir).code, 2);
  EXPECT_EQ(cli("run --budget 0 --out " + dir).code, 2);
  EXPECT_EQ(cli("calibrate --samples 0").code, 2);
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
}

TEST(Cli, AbortedRunExitsNonzero) {
  const auto dir = tmpdir("abort");
  const auto r = cli(std::string("run --budget 20 --evaluator 'exec:") + TBAOPT_WORKER +
                     " --die-after 4' --out " + dir.string());
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("\"complete\": false"), std::string::npos);
}

TEST(Cli, OutputDirFromEnvironment) {
  const auto dir = tmpdir("env");
  const auto r = cli("run --optimizer random --budget 5", "TBAOPT_OUT_DIR=" + dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(count_jsonl(dir), 1u);
}

TEST(Cli, ConfigFileWithOverrides) {
  const auto dir = tmpdir("config");
  const auto cfg = dir / "run.json";
  std::ofstream(cfg) << R"({"benchmark":"sim_deploy","scenario":"edge_tight","optimizer":"tpe","budget":12,
                           "seed":4,"timeout":{"multiplier":3.0},"tpe":{"n_candidates":8},
                           "out":")" << (dir / "out").string() << R"("})";
  auto r = cli("run --config " + cfg.string() + " --seed 6");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto log = dir / "out" / "tpe-sim_deploy-edge_tight-mid-B12-s6.jsonl";
  ASSERT_TRUE(fs::exists(log)) << r.out;
  std::ifstream in(log);
  std::string first;
  std::getline(in, first);
  const auto head = Json::parse(first);
  EXPECT_EQ(head["config"]["timeout"]["multiplier"], 3.0);
  EXPECT_EQ(head["config"]["tpe"]["n_candidates"], 8);
  EXPECT_EQ(head["config"]["seed"], 6);

  std::ofstream(dir / "bad.json") << R"({"benchmrk":"sim_deploy"})";
  r = cli("run --config " + (dir / "bad.json").string() + " --out " + dir.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("benchmrk"), std::string::npos);
}

TEST(Cli, SweepManifestAndResume) {
  const auto dir = tmpdir("sweep");
  const std::string args = "sweep --benchmark crashy_branin --budgets 6,8 --seeds 0-2 --optimizers random,hybrid "
                           "--jobs 2 --out " + dir.string();
  auto r = cli(args);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(count_jsonl(dir), 12u);
  auto manifest = Json::parse(read_file((dir / "manifest.json").string()));
  EXPECT_EQ(manifest["expected_runs"], 12);
  EXPECT_EQ(manifest["incomplete_runs"], 0);
  std::set<std::string> ids;
  for (const auto& e : manifest["runs"]) ids.insert(e["run_id"].get<std::string>());
  EXPECT_EQ(ids.size(), 12u);
  EXPECT_TRUE(ids.count("hybrid-crashy_branin-default-mid-B8-s2"));
  EXPECT_TRUE(ids.count("random-crashy_branin-default-mid-B6-s0"));

  const auto log = dir / "random-crashy_branin-default-mid-B6-s0.jsonl";
  const auto before = fs::last_write_time(log);
  r = cli(args + " --resume");
  ASSERT_EQ(r.code, 0) << r.out;
  manifest = Json::parse(read_file((dir / "manifest.json").string()));
  for (const auto& e : manifest["runs"]) EXPECT_EQ(e.value("skipped", false), true);
  EXPECT_EQ(fs::last_write_time(log), before);
}

TEST(Cli, ReportFromSweep) {
  const auto dir = tmpdir("report");
  ASSERT_EQ(cli("sweep --benchmark sim_deploy --scenario edge_tight --budgets 10 --seeds 0-1 --out " + dir.string()).code,
            0);
  auto r = cli("report " + dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("Seeds discovering each model family"), std::string::npos);
  EXPECT_NE(r.out.find(" / 2"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "curves" / "hybrid-sim_deploy-edge_tight-mid-B10-s1.csv"));
  r = cli("report --format csv --output " + (dir / "t.csv").string() + " " + dir.string());
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(read_file((dir / "t.csv").string()).substr(0, 2), "# ");
  EXPECT_NE(cli("report " + tmpdir("empty_report").string()).code, 0);
  EXPECT_EQ(cli("report --format html " + dir.string()).code, 2);
}

TEST(Cli, Calibrate) {
  auto r = cli("calibrate --benchmark crashy_branin --samples 100000");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
  auto rate = [](const std::string& out) {
    const auto p = out.find("combined:");
    return std::stod(out.substr(p + 9));
  };
  const double slow = rate(cli("calibrate --benchmark sim_deploy --hardware slow --samples 20000").out);
  const double fast = rate(cli("calibrate --benchmark sim_deploy --hardware fast --samples 20000").out);
  EXPECT_GT(slow, fast);
}
