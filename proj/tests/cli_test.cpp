#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>

#include "vprobe/jsonl.hpp"

namespace {

namespace fs = std::filesystem;
using vprobe::read_jsonl;
using vprobe::read_text_file;

struct Outcome {
  int code = -1;
  std::string output;
};

Outcome vprobe_cli(const std::string& args) {
  const char* exe = std::getenv("VPROBE_CLI");
  Outcome out;
  if (exe == nullptr) {
    ADD_FAILURE() << "VPROBE_CLI is not set";
    return out;
  }
  FILE* pipe = ::popen((std::string(exe) + " " + args + " 2>&1").c_str(), "r");
  if (pipe == nullptr) return out;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe) != nullptr) out.output += buf;
  const int status = ::pclose(pipe);
  out.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("vprobe_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    vprobe::atomic_write(dir_ / "spec.json", R"({
  "master_seed": 11,
  "profile": "blip2",
  "suites": [{"kind": "quality", "param_grid": [20, 10], "digit_tiers": [3], "trials_per_cell": 5}]
})");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_text_file(e.path());
  }
  return out;
}

TEST_F(Cli, OracleSmokeRunScoresPerfectly) {
  ASSERT_EQ(vprobe_cli("generate --spec " + p("spec.json") + " --out " + p("gen")).code, 0);
  ASSERT_EQ(read_jsonl(p("gen/manifest.jsonl")).size(), 10u);
  const Outcome run = vprobe_cli("run --manifest " + p("gen/manifest.jsonl") + " --backend oracle --out " + p("results.jsonl"));
  ASSERT_EQ(run.code, 0) << run.output;
  ASSERT_EQ(vprobe_cli("score --manifest " + p("gen/manifest.jsonl") + " --results " + p("results.jsonl") + " --out " +
                       p("scored.jsonl"))
                .code,
            0);
  ASSERT_EQ(vprobe_cli("report --scored " + p("scored.jsonl") + " --out " + p("report")).code, 0);
  const std::string csv = read_text_file(p("report/quality_blip2_curve.csv"));
  EXPECT_EQ(csv,
            "series,param,mean,n,n_errors,ci_low,ci_high\n"
            "blip2/digits=3,10.000000,1.000000,5,0,1.000000,1.000000\n"
            "blip2/digits=3,20.000000,1.000000,5,0,1.000000,1.000000\n");
  EXPECT_TRUE(fs::exists(p("report/quality_blip2_curve.svg")));
}

TEST_F(Cli, GenerateIsByteIdentical) {
  ASSERT_EQ(vprobe_cli("generate --spec " + p("spec.json") + " --out " + p("a")).code, 0);
  ASSERT_EQ(vprobe_cli("generate --spec " + p("spec.json") + " --out " + p("b")).code, 0);
  const auto a = tree(p("a"));
  EXPECT_EQ(a.size(), 11u);
  EXPECT_EQ(a, tree(p("b")));
  ASSERT_EQ(vprobe_cli("generate --spec " + p("spec.json") + " --out " + p("c") + " --seed 12").code, 0);
  EXPECT_NE(a.at("manifest.jsonl"), read_text_file(p("c/manifest.jsonl")));
}

TEST_F(Cli, UnreachableEndpointRecordsPerTrialErrors) {
  ASSERT_EQ(vprobe_cli("generate --spec " + p("spec.json") + " --out " + p("gen")).code, 0);
  const Outcome run = vprobe_cli("run --manifest " + p("gen/manifest.jsonl") +
                                 " --backend http --endpoint-url http://127.0.0.1:1/v1 --timeout 0.5 --max-retries 1 --out " +
                                 p("results.jsonl"));
  EXPECT_NE(run.code, 0);
  EXPECT_EQ(run.code, 3);
  const auto lines = read_jsonl(p("results.jsonl"));
  ASSERT_EQ(lines.size(), 10u);
  for (const auto& l : lines) {
    EXPECT_EQ(l["error"]["kind"], "Timeout");
    EXPECT_EQ(l["attempts"], 2);
  }
  const Outcome score = vprobe_cli("score --manifest " + p("gen/manifest.jsonl") + " --results " + p("results.jsonl") +
                                   " --out " + p("scored.jsonl"));
  EXPECT_EQ(score.code, 0) << score.output;
}

TEST_F(Cli, ResumeSkipsAnsweredTrials) {
  ASSERT_EQ(vprobe_cli("generate --spec " + p("spec.json") + " --out " + p("gen")).code, 0);
  const std::string run = "run --manifest " + p("gen/manifest.jsonl") + " --backend template_ocr --resume --out " + p("r.jsonl");
  ASSERT_EQ(vprobe_cli(run).code, 0);
  const std::string first = read_text_file(p("r.jsonl"));
  const Outcome again = vprobe_cli(run);
  ASSERT_EQ(again.code, 0);
  EXPECT_NE(again.output.find("10 already answered"), std::string::npos) << again.output;
  EXPECT_EQ(read_text_file(p("r.jsonl")), first);
}

TEST_F(Cli, ValidationErrorsExitOne) {
  vprobe::atomic_write(dir_ / "bad.json", "{\n  \"profile\": \"blip2\",\n  \"suites\": [{\"kind\": \"qualty\"}]\n}");
  const Outcome bad = vprobe_cli("generate --spec " + p("bad.json") + " --out " + p("gen"));
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.output.find("bad.json:3: /suites/0/kind"), std::string::npos) << bad.output;
  EXPECT_EQ(vprobe_cli("run --manifest " + p("spec.json") + " --backend nope --out " + p("x")).code, 1);
  EXPECT_NE(vprobe_cli("frobnicate").code, 0);
}

TEST_F(Cli, SliceWritesQuantileTable) {
  std::string body;
  for (int i = 0; i < 12; ++i) {
    body += R"({"question_id": "q)" + std::to_string(i) +
            R"(", "mode": "gqa", "width": 100, "height": 100, "answers": ["yes"], "prediction": "yes", "objects": [{"id": "o", "box": [0, 0, )" +
            std::to_string(i + 1) + R"(, 10]}], "target_ids": ["o"]})" + "\n";
  }
  vprobe::atomic_write(dir_ / "ann.jsonl", body);
  ASSERT_EQ(vprobe_cli("slice --annotations " + p("ann.jsonl") + " --out " + p("q.csv")).code, 0);
  const std::string csv = read_text_file(p("q.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  EXPECT_EQ(csv.substr(csv.find('\n') + 1, 2), "0,");
}

}  // namespace
