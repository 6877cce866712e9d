#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "vprobe/cli.hpp"
#include "vprobe/io.hpp"

using namespace vprobe;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

const std::string kSampleConfig = VPROBE_SAMPLE_DIR "/run.json";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) n += !line.empty();
  return n;
}

json small_config(const fs::path& out) {
  return {{"seed", 1},
          {"paths", {{"bank", VPROBE_SAMPLE_DIR "/bank.jsonl"}, {"out", out.string()}}},
          {"probe", {{"kind", "mock"}, {"model", "tiny"}}},
          {"grid", {{"methods", {"token"}}, {"styles", {"default", "prefixed"}}, {"variants", {"letters", "digits"}}}}};
}

fs::path write_config(const testutil::TempDir& dir, const json& j, const std::string& name = "run.json") {
  const auto p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

}  // namespace

TEST(Cli, HelpDocumentsGlobalFlags) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  for (const char* flag : {"--config", "--mock", "--seed", "--out", "probe", "report", "scenarios", "cache"}) {
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  }
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({"--bogus"}).code, kExitUsage);
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"report", "sideways"}).code, kExitUsage);
}

TEST(Cli, MissingConfigAndMissingBank) {
  testutil::TempDir dir;
  const auto missing = run({"--config", (dir / "nope.json").string(), "probe"});
  EXPECT_EQ(missing.code, kExitUsage);
  EXPECT_NE(missing.err.find("nope.json"), std::string::npos);

  auto j = small_config(dir / "out");
  j["paths"]["bank"] = (dir / "absent_bank.jsonl").string();
  const auto r = run({"--config", write_config(dir, j).string(), "probe"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("absent_bank.jsonl"), std::string::npos);
}

TEST(Cli, UnknownConfigKeyIsHardError) {
  testutil::TempDir dir;
  auto j = small_config(dir / "out");
  j["grid"]["stlyes"] = {"default"};
  const auto r = run({"--config", write_config(dir, j).string(), "probe"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("stlyes"), std::string::npos);
}

TEST(Cli, ProbeWarmRerunAndReports) {
  testutil::TempDir dir;
  const auto cfg = write_config(dir, small_config(dir / "out"));
  const auto first = run({"--config", cfg.string(), "probe"});
  ASSERT_EQ(first.code, kExitOk) << first.err;
  EXPECT_EQ(line_count(dir / "out" / "reps" / "reps.jsonl"), 48u);  // 12 x 2 x 2
  EXPECT_TRUE(fs::exists(dir / "out" / "reps" / "completeness.csv"));
  EXPECT_EQ(first.out.find("(cache hit)"), std::string::npos);

  const auto second = run({"--config", cfg.string(), "probe"});
  ASSERT_EQ(second.code, kExitOk);
  EXPECT_NE(second.out.find("0 backend calls (cache hit)"), std::string::npos);

  ASSERT_EQ(run({"--config", cfg.string(), "report", "robustness"}).code, kExitOk);
  const auto csv = slurp(dir / "out" / "reports" / "robustness.csv");
  EXPECT_TRUE(csv.starts_with("model,method,kind,mismatch_rate,mean_js_distance,mean_js_divergence,pairs,expected_pairs,"
                              "coverage\n"));
  EXPECT_NE(csv.find("tiny,token,prompt,0,0,0,12,12,1\n"), std::string::npos) << csv;

  // no personas were probed
  EXPECT_EQ(run({"--config", cfg.string(), "report", "alignment"}).code, kExitUsage);
  EXPECT_EQ(run({"--config", cfg.string(), "cache", "verify"}).code, kExitOk);
}

TEST(Cli, ReportBeforeProbeFails) {
  testutil::TempDir dir;
  const auto cfg = write_config(dir, small_config(dir / "out"));
  const auto r = run({"--config", cfg.string(), "report", "robustness"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("reps.jsonl"), std::string::npos);
}

TEST(Cli, OutAndSeedOverrides) {
  testutil::TempDir dir;
  const auto cfg = write_config(dir, small_config(dir / "ignored"));
  ASSERT_EQ(run({"--config", cfg.string(), "--out", (dir / "a").string(), "--seed", "5", "probe"}).code, kExitOk);
  ASSERT_EQ(run({"--config", cfg.string(), "--out", (dir / "b").string(), "--seed", "6", "probe"}).code, kExitOk);
  EXPECT_FALSE(fs::exists(dir / "ignored"));
  EXPECT_NE(slurp(dir / "a" / "reps" / "reps.jsonl"), slurp(dir / "b" / "reps" / "reps.jsonl"));
  ASSERT_EQ(run({"probe", "--config", cfg.string(), "--out", (dir / "c").string(), "--seed", "5"}).code, kExitOk);
  EXPECT_EQ(slurp(dir / "a" / "reps" / "reps.jsonl"), slurp(dir / "c" / "reps" / "reps.jsonl"));
}

TEST(Cli, UnreachableEndpointExitsThree) {
  testutil::TempDir dir;
  auto j = small_config(dir / "out");
  j["probe"] = {{"kind", "http"}, {"model", "remote"}, {"endpoint", "http://127.0.0.1:9/v1"}, {"max_retries", 1},
                {"timeout_s", 1}};
  j["grid"]["styles"] = {"default"};
  j["grid"]["variants"] = {"letters"};
  const auto r = run({"--config", write_config(dir, j).string(), "probe"});
  EXPECT_EQ(r.code, kExitTransport) << r.err;
  EXPECT_EQ(line_count(dir / "out" / "reps" / "failures.jsonl"), 12u);
}

TEST(Cli, MockFlagReplacesHttpBackend) {
  testutil::TempDir dir;
  auto j = small_config(dir / "out");
  j["probe"] = {{"kind", "http"}, {"model", "remote"}, {"endpoint", "http://127.0.0.1:9/v1"}};
  EXPECT_EQ(run({"--config", write_config(dir, j).string(), "--mock", "probe"}).code, kExitOk);
}

TEST(Cli, ScenariosWithAndWithoutCritic) {
  testutil::TempDir dir;
  auto j = small_config(dir / "out");
  j["generator"] = {{"kind", "mock"}, {"model", "gen"}};
  j["critic"] = {{"kind", "mock"}, {"model", "critic"}, {"mock", {{"critic", {{"reject_when_contains", "at work"}}}}}};
  const auto r = run({"--config", write_config(dir, j).string(), "scenarios"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("kept 60, dropped 60, unverifiable 0 (retention 50%)"), std::string::npos) << r.out;
  const auto kept = load_scenarios(dir / "out" / "scenarios" / "scenarios.jsonl", testutil::sample_bank());
  EXPECT_EQ(kept.size(), 60u);

  j.erase("critic");
  j["paths"]["out"] = (dir / "out2").string();
  const auto bare = run({"--config", write_config(dir, j, "bare.json").string(), "scenarios"});
  ASSERT_EQ(bare.code, kExitOk) << bare.err;
  EXPECT_NE(bare.err.find("warning: no critic"), std::string::npos);
  const auto unverified = load_scenarios(dir / "out2" / "scenarios" / "scenarios.jsonl", testutil::sample_bank());
  ASSERT_EQ(unverified.size(), 120u);
  EXPECT_FALSE(unverified[0].verified);
}

TEST(Cli, CacheVerifyFlagsCorruption) {
  testutil::TempDir dir;
  const auto file = dir / "c.jsonl";
  std::ofstream(file) << "garbage\n";
  const auto r = run({"cache", "verify", "--file", file.string()});
  EXPECT_NE(r.code, kExitOk);
  EXPECT_NE(r.out.find("1 corrupt"), std::string::npos);
}
