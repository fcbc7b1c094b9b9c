// Copyright 2026 The Reorient Authors
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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "reorient/io.hpp"

namespace reorient {
namespace {

namespace fs = std::filesystem;

const fs::path kConfigs = fs::path(REORIENT_SOURCE_DIR) / "configs";

int run(const std::string& args) {
  const std::string cmd = std::string(REORIENT_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("reorient_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Very short horizon and tiny networks so the whole pipeline runs in seconds.
  std::string tiny_config(const std::string& extra = "") {
    nlohmann::json j = nlohmann::json::parse(R"({
      "preset": "desk", "seed": 1,
      "ddp": {"horizon": 0.02, "max_iterations": 60},
      "dataset": {"reflex_trajectories": 3, "extra_trajectories": 2, "min_converged": 0},
      "training": {"hidden": 4, "reflex": {"epochs": 2}, "policy": {"epochs": 2, "batch_size": 16}},
      "sweep": {"pitches_deg": [-20, 0, 30]}
    })");
    j["model"] = (kConfigs / "model_default.json").string();
    if (!extra.empty()) j.merge_patch(nlohmann::json::parse(extra));
    const fs::path p = dir_ / "config.json";
    write_json_atomic(p, j);
    return "--config " + p.string() + " --out " + (dir_ / "out").string();
  }

  fs::path out() const { return dir_ / "out"; }

  fs::path dir_;
};

TEST_F(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("solve --theta0 10"), 1);
  EXPECT_EQ(run("solve --config /no/such/file.json --theta0 10"), 1);
  EXPECT_EQ(run("train " + tiny_config() + " --role critic"), 1);
}

TEST_F(Cli, SolveRejectsPitchBeyondNinety) { EXPECT_EQ(run("solve " + tiny_config() + " --theta0 120"), 1); }

TEST_F(Cli, InvalidConfigIsValidationError) {
  EXPECT_EQ(run("solve " + tiny_config(R"({"cost": {"layout": "bogus"}})") + " --theta0 10"), 1);
  EXPECT_EQ(run("eval " + tiny_config(R"({"sweep": {"pitches_deg": []}})") + " --network x.json"), 1);
}

TEST_F(Cli, SolveWritesTrajectoryAndLog) {
  ASSERT_EQ(run("solve " + tiny_config() + " --theta0 10"), 0);
  const std::string csv = read_file(out() / "solve.csv");
  EXPECT_EQ(csv.rfind("# config_hash=", 0), 0u);
  const auto log = read_json(out() / "solve_log.json");
  EXPECT_TRUE(log["converged"].get<bool>());
  EXPECT_DOUBLE_EQ(log["theta0_deg"].get<double>(), 10.0);
}

TEST_F(Cli, NonConvergedSolveIsRunFailure) {
  EXPECT_EQ(run("solve " + tiny_config(R"({"ddp": {"max_iterations": 1}})") + " --theta0 60"), 2);
}

TEST_F(Cli, TrainWithoutDatasetFails) { EXPECT_EQ(run("train " + tiny_config() + " --role reflex"), 1); }

TEST_F(Cli, TooFewConvergedSolvesFails) {
  EXPECT_EQ(run("gen-data " + tiny_config(R"({"ddp": {"max_iterations": 1}, "dataset": {"min_converged": 3}})")), 2);
}

TEST_F(Cli, PipelineEndToEnd) {
  const std::string cfg = tiny_config();
  ASSERT_EQ(run("gen-data " + cfg), 0);
  ASSERT_TRUE(fs::exists(out() / "dataset_index.json"));
  const std::string index = read_file(out() / "dataset_index.json");
  ASSERT_EQ(run("gen-data " + cfg), 0);
  EXPECT_EQ(read_file(out() / "dataset_index.json"), index);

  ASSERT_EQ(run("train " + cfg + " --role reflex"), 0);
  ASSERT_EQ(run("train " + cfg + " --role policy"), 0);
  ASSERT_EQ(run("eval " + cfg + " --network " + (out() / "reflex_network.json").string() + " --compare " +
                (out() / "policy_network.json").string()),
            0);
  const auto summary = read_json(out() / "eval_reflex" / "summary.json");
  EXPECT_EQ(summary["summary"]["count"].get<int>(), 3);
  EXPECT_TRUE(fs::exists(out() / "eval_policy" / "drop_0002.csv"));
  const auto cmp = read_json(out() / "comparison.json");
  EXPECT_TRUE(cmp.contains("reflex") && cmp.contains("policy"));

  ASSERT_EQ(run("rollout " + cfg + " --theta0 15 --reference --network " +
                (out() / "reflex_network.json").string()),
            0);
  EXPECT_NE(read_file(out() / "rollout.csv").find("q_opt1"), std::string::npos);

  // A network trained for another model is refused.
  const std::string other = tiny_config(R"({"model": {"body_mass": 8.0}})");
  EXPECT_EQ(run("eval " + other + " --network " + (out() / "reflex_network.json").string()), 1);
}

}  // namespace
}  // namespace reorient
