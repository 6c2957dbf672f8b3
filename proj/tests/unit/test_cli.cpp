// Copyright 2026 The DRO-Desk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "dro/cli.hpp"
#include "dro/error.hpp"
#include "dro/run_config.hpp"

namespace dro {
namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::size_t line_count(const fs::path& path) {
  const auto text = read_file(path);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(fs::temp_directory_path() / ("dro_cli_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

RunConfig small_config(const fs::path& out) {
  RunConfig cfg = default_run_config();
  cfg.task.num_instances = 10;
  cfg.train.record_wall_time = false;
  cfg.paths.out_dir = out;
  return cfg;
}

int run_args(std::vector<std::string> args) {
  args.insert(args.begin(), "dro");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

TEST(RunConfig, DefaultsMatchDocumentedValues) {
  const auto cfg = default_run_config();
  EXPECT_EQ(cfg.task.n, 20u);
  EXPECT_EQ(cfg.train.k, 5u);
  EXPECT_EQ(cfg.train.m, 8u);
  EXPECT_EQ(cfg.train.iterations, 5u);
  EXPECT_EQ(cfg.train.patience, 1u);
  EXPECT_EQ(cfg.train.early_stop_metric, StopMetric::f1);
  EXPECT_EQ(cfg.features.dimension, 16u);
  EXPECT_NO_THROW(validate(cfg));
}

TEST(RunConfig, NestedKeysParse) {
  const auto cfg = parse_run_config(R"({
    "task": {"num_instances": 12, "feature_noise": 0.3},
    "train": {"m": 4, "estep_mode": "exact", "selector": {"learning_rate": 0.1}},
    "paths": {"out_dir": "somewhere"}
  })");
  EXPECT_EQ(cfg.task.num_instances, 12u);
  EXPECT_EQ(cfg.task.feature_noise, 0.3);
  EXPECT_EQ(cfg.train.m, 4u);
  EXPECT_EQ(cfg.train.estep_mode, EStepMode::exact);
  EXPECT_EQ(cfg.train.selector_optimizer.learning_rate, 0.1);
  EXPECT_EQ(cfg.train.generator_optimizer.learning_rate, 0.05);
  EXPECT_EQ(cfg.paths.out_dir, fs::path("somewhere"));
}

TEST(RunConfig, UnknownKeysAreRejected) {
  EXPECT_THROW(parse_run_config(R"({"train": {"mm": 4}})"), ParseError);
  EXPECT_THROW(parse_run_config(R"({"bogus": 1})"), ParseError);
  EXPECT_THROW(parse_run_config(R"({"train": {"m": "four"}})"), ParseError);
  EXPECT_THROW(parse_run_config("[1, 2]"), ParseError);
  EXPECT_THROW(parse_run_config("{oops"), ParseError);
  RunConfig cfg = default_run_config();
  EXPECT_THROW(apply_override(cfg, "train.nope=1"), ParseError);
  EXPECT_THROW(apply_override(cfg, "train.m"), ParseError);
}

TEST(RunConfig, OverridesApply) {
  RunConfig cfg = default_run_config();
  apply_override(cfg, "train.m=3");
  apply_override(cfg, "train.estep_mode=exact");
  apply_override(cfg, "paths.out_dir=/tmp/x");
  apply_override(cfg, "features.dimension=8");
  apply_override(cfg, "train.selector_init=[1,2,3,4,5,6,7,8]");
  EXPECT_EQ(cfg.train.m, 3u);
  EXPECT_EQ(cfg.train.estep_mode, EStepMode::exact);
  EXPECT_EQ(cfg.paths.out_dir, fs::path("/tmp/x"));
  EXPECT_EQ(cfg.task.dimension, 8u);
  ASSERT_TRUE(cfg.selector_init.has_value());
  EXPECT_EQ(cfg.selector_init->size(), 8u);
  EXPECT_NO_THROW(validate(cfg));
  apply_override(cfg, "train.selector_init=[1]");
  EXPECT_THROW(validate(cfg), InvariantError);
}

TEST(RunConfig, JsonRoundTrip) {
  RunConfig cfg = default_run_config();
  apply_override(cfg, "train.seed=99");
  apply_override(cfg, "task.validation_fraction=0.25");
  apply_override(cfg, "train.generator_init=[1,0,0,0,2]");
  const auto text = to_json_text(cfg);
  EXPECT_EQ(to_json_text(parse_run_config(text)), text);
}

TEST(RunConfig, EveryKeyIsDocumented) {
  const auto& keys = config_keys();
  EXPECT_GT(keys.size(), 30u);
  for (const auto& k : keys) EXPECT_FALSE(k.doc.empty()) << k.name;
  const auto doc = nlohmann::json::parse(to_json_text(default_run_config()));
  EXPECT_EQ(doc.flatten().size(), keys.size());
}

TEST(CmdGen, SplitsEightTwo) {
  TempDir dir("gen_split");
  const auto cfg = small_config(dir.path());
  EXPECT_EQ(cmd_gen(cfg), 0);
  EXPECT_EQ(line_count(dir.path() / "train.jsonl"), 8u);
  EXPECT_EQ(line_count(dir.path() / "validation.jsonl"), 2u);
  EXPECT_TRUE(fs::exists(dir.path() / "manifest.json"));
}

TEST(CmdGen, IsDeterministic) {
  TempDir a("gen_a"), b("gen_b");
  EXPECT_EQ(cmd_gen(small_config(a.path())), 0);
  EXPECT_EQ(cmd_gen(small_config(b.path())), 0);
  for (const auto* name : {"train.jsonl", "validation.jsonl"}) {
    EXPECT_EQ(read_file(a.path() / name), read_file(b.path() / name)) << name;
  }
}

TEST(CmdGen, ManifestRegeneratesDataset) {
  TempDir a("gen_manifest_a"), b("gen_manifest_b");
  auto cfg = small_config(a.path());
  cfg.task.seed = 1234;
  cfg.task.hops = 3;
  EXPECT_EQ(cmd_gen(cfg), 0);
  auto replay = load_run_config(a.path() / "manifest.json");
  replay.paths.out_dir = b.path();
  EXPECT_EQ(cmd_gen(replay), 0);
  for (const auto* name : {"train.jsonl", "validation.jsonl"}) {
    EXPECT_EQ(read_file(a.path() / name), read_file(b.path() / name)) << name;
  }
}

TEST(CmdGen, InvalidSpecFails) {
  TempDir dir("gen_invalid");
  auto cfg = small_config(dir.path());
  cfg.task.hops = 9;
  EXPECT_THROW(cmd_gen(cfg), InvariantError);
}

TEST(CmdTrain, OneIterationWritesOneRecord) {
  TempDir dir("train_one");
  auto cfg = small_config(dir.path());
  cfg.task.num_instances = 20;
  cfg.train.iterations = 1;
  ASSERT_EQ(cmd_gen(cfg), 0);
  ASSERT_EQ(cmd_train(cfg), 0);
  EXPECT_EQ(line_count(dir.path() / "trace.jsonl"), 1u);
  EXPECT_EQ(line_count(dir.path() / "trace.csv"), 2u);
  for (const auto* name : {"init.ckpt.json", "best.ckpt.json", "final.ckpt.json"}) {
    EXPECT_TRUE(fs::exists(dir.path() / name)) << name;
  }
}

TEST(CmdTrain, CsvIsByteIdenticalAcrossRuns) {
  TempDir a("train_csv_a"), b("train_csv_b");
  for (const auto* dir : {&a, &b}) {
    auto cfg = small_config(dir->path());
    cfg.task.num_instances = 20;
    cfg.train.iterations = 2;
    cfg.train.patience = 2;
    ASSERT_EQ(cmd_gen(cfg), 0);
    ASSERT_EQ(cmd_train(cfg), 0);
  }
  EXPECT_EQ(read_file(a.path() / "trace.csv"), read_file(b.path() / "trace.csv"));
  EXPECT_EQ(read_file(a.path() / "final.ckpt.json"), read_file(b.path() / "final.ckpt.json"));
}

TEST(CmdTrain, MissingDatasetFails) {
  TempDir dir("train_missing");
  EXPECT_THROW(cmd_train(small_config(dir.path())), Error);
}

TEST(CmdTrain, ResumesFromCheckpoint) {
  TempDir dir("train_resume");
  auto cfg = small_config(dir.path());
  cfg.task.num_instances = 20;
  cfg.train.iterations = 1;
  ASSERT_EQ(cmd_gen(cfg), 0);
  ASSERT_EQ(cmd_train(cfg), 0);
  fs::copy_file(dir.path() / "final.ckpt.json", dir.path() / "step1.json");
  cfg.paths.init_checkpoint = dir.path() / "step1.json";
  ASSERT_EQ(cmd_train(cfg), 0);
  const auto trace = read_file(dir.path() / "trace.csv");
  EXPECT_NE(trace.find("\n2,"), std::string::npos);
  cfg.train.k = 4;
  EXPECT_THROW(cmd_train(cfg), FingerprintError);
}

TEST(CmdEval, SameCheckpointGivesIdenticalReport) {
  TempDir dir("eval_same");
  auto cfg = small_config(dir.path());
  cfg.task.num_instances = 20;
  cfg.train.iterations = 1;
  ASSERT_EQ(cmd_gen(cfg), 0);
  ASSERT_EQ(cmd_train(cfg), 0);
  ASSERT_EQ(cmd_eval(cfg), 0);
  const auto first = read_file(cfg.report_path());
  ASSERT_EQ(cmd_eval(cfg), 0);
  EXPECT_EQ(read_file(cfg.report_path()), first);
  const auto doc = nlohmann::json::parse(first);
  EXPECT_EQ(doc.at("count").get<std::size_t>(), 4u);
  for (const auto* key : {"em", "f1", "recall_at"}) EXPECT_TRUE(doc.contains(key)) << key;
}

TEST(CmdEval, TrainedRecallNotBelowInit) {
  TempDir dir("eval_gain");
  auto cfg = small_config(dir.path());
  cfg.task.num_instances = 250;
  cfg.train.workers = 2;
  ASSERT_EQ(cmd_gen(cfg), 0);
  ASSERT_EQ(cmd_train(cfg), 0);
  auto recall5 = [&](const fs::path& ckpt, const std::string& report) {
    auto c = cfg;
    c.paths.checkpoint = ckpt;
    c.paths.report = dir.path() / report;
    EXPECT_EQ(cmd_eval(c), 0);
    return nlohmann::json::parse(read_file(c.report_path()))["recall_at"]["5"].get<double>();
  };
  EXPECT_GE(recall5(dir.path() / "best.ckpt.json", "best.json"),
            recall5(dir.path() / "init.ckpt.json", "init.json"));
}

TEST(CmdEval, EmptyDatasetFails) {
  TempDir dir("eval_empty");
  auto cfg = small_config(dir.path());
  cfg.task.num_instances = 20;
  cfg.train.iterations = 1;
  ASSERT_EQ(cmd_gen(cfg), 0);
  ASSERT_EQ(cmd_train(cfg), 0);
  std::ofstream(dir.path() / "empty.jsonl").close();
  const auto out = dir.path().string();
  EXPECT_EQ(run_args({"eval", "--set", "paths.out_dir=" + out,
                      "paths.dataset=" + out + "/empty.jsonl"}),
            2);
  EXPECT_FALSE(fs::exists(dir.path() / "eval_report.json"));
}

TEST(CmdOracle, DefaultSuitePasses) {
  TempDir dir("oracle_default");
  auto cfg = small_config(dir.path());
  const auto report = run_oracle_suite(cfg);
  for (const auto& c : report.checks) EXPECT_TRUE(c.passed) << c.name;
  EXPECT_TRUE(report.all_passed());
  EXPECT_GE(report.checks.size(), 10u);
  EXPECT_EQ(cmd_oracle(cfg), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "oracle_report.json"));
}

TEST(CmdOracle, InjectedNormalizationFaultFails) {
  TempDir dir("oracle_fault");
  auto cfg = small_config(dir.path());
  cfg.oracle.fault = "normalization";
  cfg.oracle.mc_samples = 200;
  const auto report = run_oracle_suite(cfg);
  EXPECT_FALSE(report.all_passed());
  for (const auto& c : report.checks) {
    if (c.name == "weight_normalization") EXPECT_FALSE(c.passed);
  }
  EXPECT_EQ(cmd_oracle(cfg), 1);
  const auto out = dir.path().string();
  EXPECT_EQ(run_args({"oracle", "--inject-fault", "normalization", "--set",
                      "paths.out_dir=" + out, "oracle.mc_samples=200"}),
            1);
}

TEST(CmdOracle, PoolOverCapIsRejectedUpFront) {
  TempDir dir("oracle_cap");
  auto cfg = small_config(dir.path());
  cfg.oracle.n = 12;
  cfg.oracle.k = 5;
  EXPECT_THROW(run_oracle_suite(cfg), CapExceededError);
  cfg = small_config(dir.path());
  cfg.oracle.k = 6;
  EXPECT_THROW(run_oracle_suite(cfg), InvariantError);
}

TEST(RunCli, ListKeysAndUsageErrors) {
  testing::internal::CaptureStdout();
  EXPECT_EQ(run_args({"--list-keys", "oracle"}), 0);
  const auto listing = testing::internal::GetCapturedStdout();
  EXPECT_NE(listing.find("train.batch_size"), std::string::npos);
  testing::internal::CaptureStdout();
  testing::internal::CaptureStderr();
  EXPECT_NE(run_args({}), 0);
  EXPECT_NE(run_args({"fly"}), 0);
  testing::internal::GetCapturedStdout();
  testing::internal::GetCapturedStderr();
  EXPECT_EQ(run_args({"gen", "--set", "train.unknown=1"}), 2);
}

}  // namespace
}  // namespace dro
