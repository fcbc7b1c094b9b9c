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

#include <cmath>
#include <random>

#include "reorient/cost.hpp"
#include "test_util.hpp"

namespace reorient {
namespace {

TEST(Barrier, ZeroAtOne) { EXPECT_EQ(relaxed_barrier(1.0, 0.1).value, 0.0); }

TEST(Barrier, BranchesMeetAtDelta) {
  for (double delta : {0.01, 0.05, 0.1, 0.5}) {
    const auto at = relaxed_barrier(delta, delta);  // quadratic branch
    EXPECT_NEAR(at.value, -std::log(delta), 1e-10);
    EXPECT_NEAR(at.d1, -1.0 / delta, 1e-10 / delta);
    EXPECT_NEAR(at.d2, 1.0 / (delta * delta), 1e-10 / (delta * delta));
    const auto above = relaxed_barrier(delta + 1e-12, delta);
    EXPECT_NEAR(above.value, at.value, 1e-11 / delta);
  }
}

TEST(Barrier, FiniteAndDecreasingEverywhere) {
  double prev = std::numeric_limits<double>::infinity();
  for (double z = -2.0; z <= 3.0; z += 1e-3) {
    const auto b = relaxed_barrier(z, 0.05);
    ASSERT_TRUE(std::isfinite(b.value));
    EXPECT_LT(b.value, prev);
    EXPECT_LT(b.d1, 0.0);
    prev = b.value;
  }
}

TEST(Barrier, DerivativesMatchDifferences) {
  const double h = 1e-6;
  for (double z : {-0.3, 0.01, 0.049, 0.051, 0.2, 1.7}) {
    const auto b = relaxed_barrier(z, 0.05);
    const double d1 = (relaxed_barrier(z + h, 0.05).value - relaxed_barrier(z - h, 0.05).value) / (2 * h);
    const double d2 = (relaxed_barrier(z + h, 0.05).d1 - relaxed_barrier(z - h, 0.05).d1) / (2 * h);
    EXPECT_NEAR(b.d1, d1, 1e-6 * std::max(1.0, std::abs(d1)));
    EXPECT_NEAR(b.d2, d2, 1e-5 * std::max(1.0, std::abs(d2)));
  }
}

TEST(Barrier, RejectsNonPositiveDelta) {
  EXPECT_THROW(relaxed_barrier(1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(relaxed_barrier(1.0, -0.1), std::invalid_argument);
}

class StageCost : public ::testing::Test {
 protected:
  RobotModel m = default_model();
  CostSpec c = default_cost(m);
  Vector10 xd = desired_state(m);
};

TEST_F(StageCost, TargetLeavesOnlyBarrier) {
  const auto t = stage_cost_terms(c, xd, Vector4::Zero());
  EXPECT_EQ(t.tracking, 0.0);
  EXPECT_EQ(t.effort, 0.0);
  EXPECT_EQ(stage_cost(c, xd, Vector4::Zero()), t.barrier);
  // Zero torque sits at the torque barrier's minimum.
  CostSpec no_joint = c;
  no_joint.barrier_weight = 0.0;
  EXPECT_EQ(stage_cost(no_joint, xd, Vector4::Zero()), 0.0);
}

TEST_F(StageCost, PitchErrorAddsWeightedIntegrand) {
  Vector10 x = xd;
  x[0] += 1.0;
  EXPECT_NEAR(stage_cost(c, x, Vector4::Zero()) - stage_cost(c, xd, Vector4::Zero()), 2000.0 * 0.001, 1e-12);
}

TEST_F(StageCost, UnitTorqueAddsEffort) {
  EXPECT_NEAR(stage_cost_terms(c, xd, Vector4::UnitX()).effort, 1.0 * 0.001, 1e-15);
}

TEST_F(StageCost, TerminalCostExamples) {
  EXPECT_EQ(terminal_cost(c, xd), 0.0);
  Vector10 x = xd;
  x[0] = 0.1;
  EXPECT_NEAR(terminal_cost(c, x), 70.0, 1e-9);
  x = xd;
  x[3] += 0.1;
  EXPECT_NEAR(terminal_cost(c, x), 30.0, 1e-9);
}

TEST_F(StageCost, DerivativesMatchDifferences) {
  std::mt19937_64 rng(21);
  const double h = 1e-6;
  for (int i = 0; i < 50; ++i) {
    Vector10 x = testing::random_state(m, rng).vec();
    // Push some joints past the relaxation threshold.
    if (i % 3 == 0) x[2] = m.joint_limits[0].upper - 0.02;
    Vector4 u = testing::random_input(m, rng).tau;
    if (i % 4 == 0) u[1] = 0.995 * m.torque_limits[1];
    const auto d = stage_cost_derivatives(c, x, u);
    for (int k = 0; k < kStateDim; ++k) {
      const Vector10 e = Vector10::Unit(k) * h;
      const double fd = (stage_cost(c, x + e, u) - stage_cost(c, x - e, u)) / (2 * h);
      EXPECT_NEAR(d.lx[k], fd, 1e-6 * std::max(1.0, std::abs(fd)));
      const double fd2 = (stage_cost_derivatives(c, x + e, u).lx[k] - stage_cost_derivatives(c, x - e, u).lx[k]) / (2 * h);
      EXPECT_NEAR(d.lxx_diag[k], fd2, 1e-5 * std::max(1.0, std::abs(fd2)));
    }
    for (int k = 0; k < kControlDim; ++k) {
      const Vector4 e = Vector4::Unit(k) * h;
      const double fd = (stage_cost(c, x, u + e) - stage_cost(c, x, u - e)) / (2 * h);
      EXPECT_NEAR(d.lu[k], fd, 1e-6 * std::max(1.0, std::abs(fd)));
      const double fd2 = (stage_cost_derivatives(c, x, u + e).lu[k] - stage_cost_derivatives(c, x, u - e).lu[k]) / (2 * h);
      EXPECT_NEAR(d.luu_diag[k], fd2, 1e-5 * std::max(1.0, std::abs(fd2)));
    }
  }
}

TEST(CostWeights, BroadcastLayout) {
  const Vector10 q = expand_weights({2000, 0.1, 20, 0.1, 10, 0.1, 10}, WeightLayout::kBroadcast);
  Vector10 expected;
  expected << 2000, 0.1, 20, 20, 20, 20, 0.1, 10, 0.1, 10;
  EXPECT_EQ(q, expected);
  const Vector10 qf = default_cost(default_model()).Q_f;
  expected << 7000, 0.1, 3000, 3000, 3000, 3000, 0.1, 0.1, 0.1, 0.1;
  EXPECT_EQ(qf, expected);
}

TEST(CostWeights, FullLayoutAndSizeChecks) {
  std::vector<double> w(10);
  for (int i = 0; i < 10; ++i) w[i] = i;
  EXPECT_EQ(expand_weights(w, WeightLayout::kFull)[7], 7.0);
  EXPECT_THROW(expand_weights(w, WeightLayout::kBroadcast), std::invalid_argument);
  EXPECT_THROW(expand_weights({1, 2, 3}, WeightLayout::kFull), std::invalid_argument);
}

TEST(CostWeights, ValidationFlagsBadWeights) {
  CostSpec c = default_cost(default_model());
  EXPECT_TRUE(validate_cost(c).empty());
  c.Q[4] = -1.0;
  c.R[0] = 0.0;
  c.barrier_delta = 0.0;
  EXPECT_EQ(validate_cost(c).size(), 3u);
}

}  // namespace
}  // namespace reorient
