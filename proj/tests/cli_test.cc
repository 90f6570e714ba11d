#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "httplib.h"
#include "json.hpp"
#include "sitelens/filterlist.h"
#include "sitelens/jwt.h"

namespace sitelens {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kCli = SITELENS_CLI_PATH;

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;

  json Manifest() const { return json::parse(out); }
  json ErrorJson() const { return json::parse(err); }
};

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(fs::temp_directory_path() /
                        ("sitelens_cli_" + std::to_string(::getpid())));
    fs::remove_all(*dir_);
    fs::create_directories(*dir_);
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
  }

  static fs::path Path(const std::string& name) { return *dir_ / name; }

  static RunResult Run(const std::string& args) {
    fs::path out = Path("stdout.txt"), err = Path("stderr.txt");
    std::string cmd = kCli.string() + " " + args + " > " + out.string() + " 2> " + err.string();
    int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = Slurp(out);
    r.err = Slurp(err);
    return r;
  }

  // synth -> extract -> select -> train -> eval -> build-list under |tag|.
  static std::string Pipeline(const std::string& tag) {
    auto p = [&](const std::string& n) { return Path(tag + "_" + n).string(); };
    EXPECT_EQ(Run("synth --seed 7 --out " + p("data.jsonl")).code, 0);
    EXPECT_EQ(Run("extract --data " + p("data.jsonl") + " --out " + p("matrix.json")).code, 0);
    EXPECT_EQ(Run("select --matrix " + p("matrix.json") + " --grid 5:187:5 --out " +
                  p("selection.json"))
                  .code,
              0);
    EXPECT_EQ(Run("train --matrix " + p("matrix.json") + " --selection " + p("selection.json") +
                  " --model rf --mode async --seed 1 --out " + p("model.json"))
                  .code,
              0);
    EXPECT_EQ(Run("eval --model " + p("model.json") + " --matrix " + p("matrix.json") +
                  " --split-seed 7 --report " + p("report.json"))
                  .code,
              0);
    RunResult r = Run("build-list --model " + p("model.json") + " --data " + p("data.jsonl") +
                      " --checkpoint 1 --out " + p("list.json"));
    EXPECT_EQ(r.code, 0) << r.err;
    return Slurp(p("list.json"));
  }

  static fs::path* dir_;
};
fs::path* CliTest::dir_ = nullptr;

TEST_F(CliTest, PipelineIsDeterministicAndAudited) {
  std::string first = Pipeline("a");
  std::string second = Pipeline("b");
  ASSERT_FALSE(first.empty());
  EXPECT_EQ(first, second);
  Filterlist list = ParseList(first);
  EXPECT_EQ(list.checkpoint, 1u);
  EXPECT_GT(list.entries.size(), 100u);

  json report = json::parse(Slurp(Path("a_report.json")));
  for (const char* key : {"tp_rate", "fp_rate", "precision", "recall", "f1", "auc"})
    EXPECT_TRUE(report.contains(key)) << key;
  EXPECT_GE(report["auc"].get<double>(), 0.9);

  json model = json::parse(Slurp(Path("a_model.json")));
  EXPECT_EQ(model["format"], "sitelens-model");
  EXPECT_EQ(model["kind"], "rf");
  EXPECT_EQ(model["split_seed"], 7);
  EXPECT_EQ(model["hyperparameters"]["n_trees"], 100);
  EXPECT_EQ(model["features"], json::parse(Slurp(Path("a_selection.json")))["selected"]);

  RunResult r = Run("eval --model " + Path("a_model.json").string() + " --matrix " +
                    Path("a_matrix.json").string());
  ASSERT_EQ(r.code, 0);
  json m = r.Manifest();
  EXPECT_EQ(m["command"], "eval");
  EXPECT_EQ(m["seed"], 7);
  EXPECT_EQ(m["artifacts"]["model"].get<std::string>().size(), 64u);
  EXPECT_EQ(m["artifacts"]["matrix"].get<std::string>().size(), 64u);
}

TEST_F(CliTest, RealtimeModeUsesTwentySevenFeatures) {
  ASSERT_TRUE(fs::exists(Path("a_matrix.json")));
  RunResult r = Run("train --matrix " + Path("a_matrix.json").string() +
                    " --model gnb --mode realtime --out " + Path("rt_model.json").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.Manifest()["result"]["features"], 27);
}

TEST_F(CliTest, MlpSweepReportsEveryWidth) {
  ASSERT_TRUE(fs::exists(Path("a_matrix.json")));
  RunResult r = Run("mlp-sweep --matrix " + Path("a_matrix.json").string() +
                    " --hidden-grid 16,8 --report " + Path("sweep.json").string());
  ASSERT_EQ(r.code, 0) << r.err;
  json report = json::parse(Slurp(Path("sweep.json")));
  ASSERT_EQ(report["rows"].size(), 2u);
  EXPECT_EQ(report["rows"][0]["hidden_units"], 8);
  EXPECT_EQ(report["rows"][1]["hidden_units"], 16);
  for (const json& row : report["rows"]) {
    EXPECT_GT(row["mean_validation_accuracy"].get<double>(), 0.5);
    EXPECT_LE(row["test_auc"].get<double>(), 1.0);
  }
  EXPECT_EQ(r.Manifest()["result"], report);
}

TEST_F(CliTest, EvalRefusesMismatchedInputs) {
  ASSERT_TRUE(fs::exists(Path("a_model.json")));
  ASSERT_EQ(Run("synth --seed 8 --out " + Path("other.jsonl").string()).code, 0);
  ASSERT_EQ(Run("extract --data " + Path("other.jsonl").string() + " --out " +
                Path("other_matrix.json").string())
                .code,
            0);
  RunResult r = Run("eval --model " + Path("a_model.json").string() + " --matrix " +
                    Path("other_matrix.json").string());
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(r.ErrorJson()["error"], "invariant");
  EXPECT_EQ(r.ErrorJson()["exit_code"], 4);

  r = Run("eval --model " + Path("a_model.json").string() + " --matrix " +
          Path("a_matrix.json").string() + " --split-seed 8");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.ErrorJson()["error"], "usage");
}

TEST_F(CliTest, ExitCodesAndErrorLines) {
  RunResult r = Run("");
  EXPECT_EQ(r.code, 2);
  r = Run("train --model svm --matrix x --out y");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.ErrorJson()["error"], "usage");
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);

  std::ofstream(Path("broken.jsonl")) << "{\"domain\": \"a.com\"\n";
  r = Run("extract --data " + Path("broken.jsonl").string() + " --out " +
          Path("never.json").string());
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(r.ErrorJson()["error"], "data");
  EXPECT_TRUE(r.out.empty());

  std::ofstream(Path("unsorted.json"))
      << R"({"checkpoint":1,"entries":[{"domain":"b.com","probability":0.9,"updated_at":0,"verdict":"blacklisted"},{"domain":"a.com","probability":0.9,"updated_at":0,"verdict":"blacklisted"}]})";
  r = Run("bench-lookup --list " + Path("unsorted.json").string());
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(r.ErrorJson()["error"], "invariant");
}

TEST_F(CliTest, DeltaBetweenBuiltLists) {
  ASSERT_TRUE(fs::exists(Path("a_model.json")));
  std::string model = Path("a_model.json").string(), data = Path("a_data.jsonl").string();
  ASSERT_EQ(Run("build-list --model " + model + " --data " + data +
                " --checkpoint 2 --fake-threshold 0.7 --gzip --out " + Path("list2.json.gz").string())
                .code,
            0);
  RunResult r = Run("delta --old " + Path("a_list.json").string() + " --new " +
                    Path("list2.json.gz").string() + " --out " + Path("d.json").string());
  ASSERT_EQ(r.code, 0) << r.err;
  Filterlist old_list = ParseList(Slurp(Path("a_list.json")));
  Filterlist new_list = ParseList(GzipDecompress(Slurp(Path("list2.json.gz"))));
  EXPECT_EQ(ApplyDelta(old_list, ParseDelta(Slurp(Path("d.json")))), new_list);
  EXPECT_GT(r.Manifest()["result"]["removals"].get<int>(), 0);

  r = Run("delta --old " + Path("list2.json.gz").string() + " --new " +
          Path("a_list.json").string() + " --out " + Path("d2.json").string());
  EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, BenchLookupOnOneHundredThousandEntries) {
  Filterlist list{3, {}};
  for (int i = 0; i < 100000; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "site%06d.example", i);
    list.entries.push_back({buf, i % 3 ? Verdict::kBlacklisted : Verdict::kWhitelisted, 0.5, 0});
  }
  std::ofstream(Path("big.json")) << SerializeList(list);
  RunResult r = Run("bench-lookup --list " + Path("big.json").string() + " --queries 20000");
  ASSERT_EQ(r.code, 0) << r.err;
  json res = r.Manifest()["result"];
  EXPECT_EQ(res["entries"], 100000);
  EXPECT_EQ(res["bound"], 18);
  EXPECT_LE(res["mean_comparisons"].get<double>(), 18.0);
  EXPECT_LE(res["max_comparisons"].get<int>(), 18);
  EXPECT_EQ(res["hits"], 10000);
}

TEST_F(CliTest, RetrainAppliesConfirmedLabels) {
  ASSERT_TRUE(fs::exists(Path("a_data.jsonl")));
  std::string first_line;
  {
    std::ifstream in(Path("a_data.jsonl"));
    std::getline(in, first_line);
  }
  json record = json::parse(first_line);
  std::string domain = record["domain"];
  std::string flipped = record["label"] == "fake" ? "real" : "fake";
  std::ofstream(Path("labels.jsonl"))
      << json{{"domain", domain}, {"label", flipped}}.dump() << "\n"
      << json{{"domain", "unknown-site.org"}, {"label", "fake"}}.dump() << "\n";
  RunResult r = Run("retrain --data " + Path("a_data.jsonl").string() + " --labels " +
                    Path("labels.jsonl").string() + " --model lr --data-out " +
                    Path("merged.jsonl").string() + " --out " + Path("re_model.json").string());
  ASSERT_EQ(r.code, 0) << r.err;
  json res = r.Manifest()["result"];
  EXPECT_EQ(res["labels_applied"], 1);
  EXPECT_EQ(res["labels_changed"], 1);
  EXPECT_EQ(res["labels_unmatched"], 1);
  std::string merged_first;
  {
    std::ifstream in(Path("merged.jsonl"));
    std::getline(in, merged_first);
  }
  EXPECT_EQ(json::parse(merged_first)["label"], flipped);
}

TEST_F(CliTest, TokenAndServeRoundTrip) {
  RunResult r = Run("token --secret s3 --sub alice --role super-user --ttl 600");
  ASSERT_EQ(r.code, 0) << r.err;
  std::string token = r.Manifest()["result"]["token"];
  JwtVerification v = VerifyJwt(token, "s3", r.Manifest()["result"]["exp"].get<int64_t>() - 1);
  ASSERT_TRUE(v.ok());
  EXPECT_EQ(v.claims.role, "super-user");

  SaveList(Path("serve_list.json"), Filterlist{4, {{"a.com", Verdict::kBlacklisted, 0.8, 0}}});
  std::ofstream(Path("serve.json"))
      << json{{"port", 0}, {"jwt_secret", "s3"}, {"filterlist_path", "serve_list.json"},
              {"labels_path", "serve_labels.jsonl"}}
             .dump();
  fs::path out = Path("serve_out.txt"), pid_file = Path("serve.pid");
  std::string cmd = kCli.string() + " serve --config " + Path("serve.json").string() + " > " +
                    out.string() + " 2>&1 & echo $! > " + pid_file.string();
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  std::string pid = Slurp(pid_file);
  json manifest;
  for (int i = 0; i < 100 && manifest.is_null(); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    std::string text = Slurp(out);
    if (text.find('\n') != std::string::npos)
      manifest = json::parse(text.substr(0, text.find('\n')));
  }
  ASSERT_FALSE(manifest.is_null());
  EXPECT_EQ(manifest["command"], "serve");
  EXPECT_EQ(manifest["result"]["checkpoint"], 4);
  httplib::Client cli("127.0.0.1", manifest["result"]["port"].get<int>());
  auto health = cli.Get("/v1/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(json::parse(health->body)["entries"], 1);
  auto post = cli.Post("/v1/labels", {{"Authorization", "Bearer " + token}},
                       R"({"domain":"b.com","proposed_label":"real"})", "application/json");
  ASSERT_TRUE(post);
  EXPECT_EQ(post->status, 202);
  EXPECT_EQ(std::system(("kill -TERM " + pid).c_str()), 0);
}

}  // namespace
}  // namespace sitelens
