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

#include <random>

#include "reorient/trajectory.hpp"
#include "test_util.hpp"

namespace reorient {
namespace {

Trajectory random_trajectory(bool with_com) {
  const RobotModel m = default_model();
  std::mt19937_64 rng(11);
  Trajectory t;
  for (int k = 0; k < 7; ++k) t.knots.push_back({testing::random_state(m, rng, with_com), testing::random_input(m, rng)});
  return t;
}

void expect_same(const Trajectory& a, const Trajectory& b) {
  ASSERT_EQ(a.size(), b.size());
  EXPECT_DOUBLE_EQ(a.dt, b.dt);
  for (int k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a.knots[k].state.vec(), b.knots[k].state.vec());
    EXPECT_EQ(a.knots[k].input.tau, b.knots[k].input.tau);
    ASSERT_EQ(a.knots[k].state.com.has_value(), b.knots[k].state.com.has_value());
    if (a.knots[k].state.com) {
      EXPECT_EQ(a.knots[k].state.com->pos, b.knots[k].state.com->pos);
      EXPECT_EQ(a.knots[k].state.com->vel, b.knots[k].state.com->vel);
    }
  }
}

TEST(TrajectoryCsv, RoundTripIsBitExact) {
  for (bool com : {false, true}) {
    const Trajectory t = random_trajectory(com);
    expect_same(t, trajectory_from_csv(trajectory_to_csv(t)));
  }
}

TEST(TrajectoryCsv, SkipsCommentsAndBlankLines) {
  const Trajectory t = random_trajectory(false);
  const std::string text = with_hash_comment("abc", trajectory_to_csv(t)) + "\n# trailing\n";
  expect_same(t, trajectory_from_csv(text));
}

TEST(TrajectoryCsv, AcceptsCrLf) {
  const Trajectory t = random_trajectory(true);
  std::string text;
  for (char c : trajectory_to_csv(t)) {
    if (c == '\n') text += '\r';
    text += c;
  }
  expect_same(t, trajectory_from_csv(text));
}

TEST(TrajectoryCsv, RejectsBadInput) {
  EXPECT_THROW(trajectory_from_csv(""), std::invalid_argument);
  EXPECT_THROW(trajectory_from_csv("# only a comment\n"), std::invalid_argument);
  EXPECT_THROW(trajectory_from_csv("a,b,c\n1,2,3\n"), std::invalid_argument);
  const std::string ragged = trajectory_csv_header(false) + "\n0,1,2\n";
  EXPECT_THROW(trajectory_from_csv(ragged), std::invalid_argument);
  const std::string garbage = trajectory_csv_header(false) + "\n" + std::string("x") + std::string(14, ',') + "\n";
  EXPECT_ANY_THROW(trajectory_from_csv(garbage));
}

TEST(Hashing, KnownFnv1aValues) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(Hashing, JsonHashIsOrderIndependent) {
  const auto a = nlohmann::json::parse(R"({"x": 1, "y": [1, 2]})");
  const auto b = nlohmann::json::parse(R"({"y": [1, 2], "x": 1})");
  EXPECT_EQ(json_hash(a), json_hash(b));
  EXPECT_NE(json_hash(a), json_hash(nlohmann::json::parse(R"({"x": 2, "y": [1, 2]})")));
}

TEST(Files, AtomicWriteReplacesContents) {
  const auto dir = std::filesystem::temp_directory_path() / "reorient_io_test";
  std::filesystem::remove_all(dir);
  const auto path = dir / "nested" / "f.txt";
  write_file_atomic(path, "first");
  write_file_atomic(path, "second");
  EXPECT_EQ(read_file(path), "second");
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  EXPECT_THROW(read_file(dir / "missing"), std::invalid_argument);
  std::filesystem::remove_all(dir);
}

TEST(Files, JsonWithCommentsParses) {
  const auto path = std::filesystem::temp_directory_path() / "reorient_comments.json";
  write_file_atomic(path, "// header\n{\n  \"a\": 1 // trailing\n}\n");
  EXPECT_EQ(read_json(path)["a"].get<int>(), 1);
  std::filesystem::remove(path);
}

TEST(Csv, SplitKeepsEmptyTrailingCell) {
  EXPECT_EQ(split_csv_line("a,,b,"), (std::vector<std::string>{"a", "", "b", ""}));
}

}  // namespace
}  // namespace reorient
