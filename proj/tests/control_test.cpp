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
#include <numbers>

#include "reorient/control.hpp"
#include "test_util.hpp"

namespace reorient {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

TEST(PdPlus, OnTrajectoryGivesFeedforward) {
  const RobotModel m = default_model();
  const CommandedKnot cmd{Vector4(1, -2, 3, -4), Vector4(0.7, -1.5, 0.8, -1.6), Vector4(0.1, 0.2, -0.3, 0.4)};
  EXPECT_EQ(pd_plus_torque(m, PdGains{}, cmd, cmd.q_nom, cmd.qd_nom).tau, cmd.tau_nom);
}

TEST(PdPlus, ZeroGainsGiveFeedforward) {
  const RobotModel m = default_model();
  const CommandedKnot cmd{Vector4(1, -2, 3, -4), Vector4::Zero(), Vector4::Zero()};
  const PdGains g{Vector4::Zero(), Vector4::Zero()};
  EXPECT_EQ(pd_plus_torque(m, g, cmd, Vector4::Ones(), Vector4::Ones()).tau, cmd.tau_nom);
}

TEST(PdPlus, FeedbackOpposesError) {
  const RobotModel m = default_model();
  const CommandedKnot cmd{Vector4::Zero(), Vector4::Zero(), Vector4::Zero()};
  const Vector4 tau = pd_plus_torque(m, PdGains{}, cmd, Vector4(0.1, 0, 0, 0), Vector4(0, 0, 0, -1.0)).tau;
  EXPECT_DOUBLE_EQ(tau[0], -4.0);
  EXPECT_DOUBLE_EQ(tau[3], 1.0);
}

TEST(PdPlus, SaturatesAndCounts) {
  const RobotModel m = default_model();
  const CommandedKnot cmd{Vector4(100, -100, 5, 0), Vector4::Zero(), Vector4::Zero()};
  int n = 0;
  const Vector4 tau = pd_plus_torque(m, PdGains{}, cmd, Vector4::Zero(), Vector4::Zero(), &n).tau;
  EXPECT_EQ(tau, Vector4(34, -34, 5, 0));
  EXPECT_EQ(n, 2);
}

std::pair<FallDetectorState, bool> feed(FallDetectorState d, const std::vector<double>& samples) {
  bool detected = false;
  for (double a : samples) std::tie(d, detected) = detector_step(d, a);
  return {d, detected};
}

TEST(FallDetector, FiresOnFifteenthConsecutiveSample) {
  FallDetectorState d;
  bool detected = false;
  for (int i = 1; i <= 15; ++i) {
    std::tie(d, detected) = detector_step(d, 9.81);
    EXPECT_EQ(detected, i == 15) << "sample " << i;
  }
}

TEST(FallDetector, OutOfBandSampleResets) {
  std::vector<double> s(14, 9.81);
  s.push_back(9.0);
  auto [d, detected] = feed(FallDetectorState{}, s);
  EXPECT_FALSE(detected);
  EXPECT_EQ(d.counter, 0);
  std::tie(d, detected) = feed(d, std::vector<double>(14, 9.81));
  EXPECT_FALSE(detected);
  std::tie(d, detected) = detector_step(d, 9.81);
  EXPECT_TRUE(detected);
}

TEST(FallDetector, BandEdges) {
  EXPECT_EQ(detector_step(FallDetectorState{}, 9.71).first.counter, 1);
  EXPECT_EQ(detector_step(FallDetectorState{}, 9.91).first.counter, 1);
  EXPECT_EQ(detector_step(FallDetectorState{}, 9.7099).first.counter, 0);
  EXPECT_EQ(detector_step(FallDetectorState{}, 9.9101).first.counter, 0);
}

TEST(FallDetector, StaysLatched) {
  auto [d, detected] = feed(FallDetectorState{}, std::vector<double>(15, 9.8));
  std::tie(d, detected) = detector_step(d, 0.0);
  EXPECT_TRUE(detected);
}

// Every in/out pattern of length 18: the flag is set iff some run of 15
// in-band samples has completed.
TEST(FallDetector, ExhaustiveBinaryStreams) {
  constexpr int kLen = 18;
  for (int mask = 0; mask < (1 << kLen); ++mask) {
    FallDetectorState d;
    bool detected = false;
    int run = 0;
    bool expected = false;
    for (int i = 0; i < kLen; ++i) {
      const bool in = (mask >> i) & 1;
      run = in ? run + 1 : 0;
      expected = expected || run >= 15;
      std::tie(d, detected) = detector_step(d, in ? 9.81 : 12.0);
      ASSERT_EQ(detected, expected) << "mask " << mask << " sample " << i;
    }
  }
}

Trajectory feasible_reference(const RobotModel& m, const State& x0) {
  std::mt19937_64 rng(21);
  return testing::torqued_rollout(m, x0, rng);
}

MlpNetwork constant_reflex(const Trajectory& t) {
  MlpNetwork net = make_mlp(reflex_layer_sizes(4), NetRole::kReflex, 0);
  for (auto& p : net.params) p.setZero();
  net.bias(net.num_layers() - 1) = flatten_trajectory(t);
  return net;
}

TEST(Tracking, FeasibleReferenceNeedsNoCorrection) {
  const RobotModel m = default_model();
  const State x0 = standing_state(m, 20 * kDeg);
  const Trajectory ref = feasible_reference(m, x0);
  const DropResult r = simulate_tracking(m, ref, PdGains{}, x0);
  EXPECT_LE(r.peak_correction, 1e-9);
  EXPECT_NEAR(r.final_pitch, ref.end_state().theta, 1e-10);
  EXPECT_EQ(r.executed.size(), kHorizonKnots);
  EXPECT_EQ(r.momentum.size(), static_cast<std::size_t>(kHorizonKnots));
  EXPECT_EQ(r.saturation_count, 0);
}

TEST(Tracking, PdPullsBackAfterPerturbation) {
  const RobotModel m = default_model();
  const State x0 = standing_state(m, 0.0);
  const Trajectory ref = feasible_reference(m, x0);
  State off = x0;
  off.q[0] += 0.05;
  const DropResult r = simulate_tracking(m, ref, PdGains{}, off);
  const double start = std::abs(r.executed.knots[0].state.q[0] - ref.knots[0].state.q[0]);
  const double end = std::abs(r.executed.end_state().q[0] - ref.end_state().q[0]);
  EXPECT_LT(end, 0.5 * start);
}

TEST(ReflexDrop, NetworkTrajectoryIsTracked) {
  const RobotModel m = default_model();
  const State x0 = standing_state(m, -30 * kDeg);
  const Trajectory ref = feasible_reference(m, x0);
  const DropResult r = simulate_reflex_drop(m, constant_reflex(ref), PdGains{}, x0);
  ASSERT_TRUE(r.commanded.has_value());
  EXPECT_LE(r.peak_correction, 1e-8);
  EXPECT_NEAR(r.final_pitch, ref.end_state().theta, 1e-9);
  EXPECT_LE(r.max_momentum_drift(), 1e-6 * locked_inertia(m, x0));
  EXPECT_FALSE(r.detection_latency.has_value());
}

TEST(ReflexDrop, DetectionTakesThirtyMilliseconds) {
  const RobotModel m = default_model();
  const State x0 = standing_state(m, 0.0);
  DropOptions o;
  o.simulate_detection = true;
  const DropResult r = simulate_reflex_drop(m, constant_reflex(feasible_reference(m, x0)), PdGains{}, x0, o);
  ASSERT_TRUE(r.detection_latency.has_value());
  EXPECT_NEAR(*r.detection_latency, 0.030, 1e-12);
  EXPECT_EQ(r.executed.size(), kHorizonKnots);
}

TEST(ReflexDrop, RejectsWrongRoleAndPitch) {
  const RobotModel m = default_model();
  const MlpNetwork policy = make_mlp(policy_layer_sizes(4), NetRole::kPolicy, 0);
  EXPECT_THROW(simulate_reflex_drop(m, policy, PdGains{}, standing_state(m, 0.0)), std::invalid_argument);
  const MlpNetwork reflex = make_mlp(reflex_layer_sizes(4), NetRole::kReflex, 0);
  EXPECT_THROW(simulate_policy_drop(m, reflex, standing_state(m, 0.0)), std::invalid_argument);
  State s = standing_state(m, 0.0);
  s.theta = 2.0;
  EXPECT_THROW(simulate_reflex_drop(m, reflex, PdGains{}, s), std::domain_error);
}

TEST(ReflexDrop, NonFiniteNetworkOutputAborts) {
  const RobotModel m = default_model();
  MlpNetwork net = make_mlp(reflex_layer_sizes(4), NetRole::kReflex, 0);
  net.bias(net.num_layers() - 1)(17, 0) = std::nan("");
  EXPECT_THROW(simulate_reflex_drop(m, net, PdGains{}, standing_state(m, 0.0)), NumericalError);
}

TEST(PolicyDrop, ZeroNetworkMatchesZeroTorqueRollout) {
  const RobotModel m = default_model();
  MlpNetwork net = make_mlp(policy_layer_sizes(8), NetRole::kPolicy, 0);
  for (auto& p : net.params) p.setZero();
  State x0 = standing_state(m, 0.4);
  x0.theta_dot = 0.3;
  const DropResult r = simulate_policy_drop(m, net, x0);
  const Trajectory ref = rollout(m, x0, std::vector<ControlInput>(kHorizonKnots));
  EXPECT_EQ(r.executed.end_state().vec(), ref.end_state().vec());
}

TEST(PolicyDrop, TorquesSaturate) {
  const RobotModel m = default_model();
  MlpNetwork net = make_mlp(policy_layer_sizes(16), NetRole::kPolicy, 3);
  net.output_norm.std = Vector4::Constant(200.0);
  State x0 = standing_state(m, 0.5);
  x0.theta_dot = -1.0;
  const DropResult r = simulate_policy_drop(m, net, x0);
  EXPECT_GT(r.saturation_count, 0);
  for (const auto& k : r.executed.knots) {
    EXPECT_LE((k.input.tau.cwiseAbs() - m.torque_limits).maxCoeff(), 0.0);
  }
}

TEST(Noise, OffByDefaultAndSeeded) {
  const RobotModel m = default_model();
  const State x0 = standing_state(m, 0.3);
  const Trajectory ref = feasible_reference(m, x0);
  DropOptions noisy;
  noisy.measurement_noise_std = 0.01;
  noisy.noise_seed = 5;
  const DropResult a = simulate_tracking(m, ref, PdGains{}, x0, noisy);
  const DropResult b = simulate_tracking(m, ref, PdGains{}, x0, noisy);
  EXPECT_EQ(a.final_pitch, b.final_pitch);
  EXPECT_GT(a.peak_correction, 1e-3);
  EXPECT_LE(simulate_tracking(m, ref, PdGains{}, x0).peak_correction, 1e-9);
}

DropResult with_pitch(double theta_final) {
  DropResult r;
  r.final_pitch = theta_final;
  r.momentum.resize(1);
  return r;
}

TEST(Evaluate, SingleLevelDrop) {
  const auto s = evaluate_sweep({with_pitch(0.0)});
  EXPECT_EQ(s.mean_final_pitch, 0.0);
  EXPECT_EQ(s.std_final_pitch, 0.0);
  EXPECT_EQ(s.rows.size(), 1u);
}

TEST(Evaluate, PopulationStandardDeviation) {
  const auto s = evaluate_sweep({with_pitch(5 * kDeg), with_pitch(-5 * kDeg)});
  EXPECT_NEAR(s.mean_final_pitch, 0.0, 1e-15);
  EXPECT_NEAR(s.std_final_pitch / kDeg, 5.0, 1e-12);
  EXPECT_NEAR(summary_to_json(s)["std_final_pitch_deg"].get<double>(), 5.0, 1e-12);
}

TEST(Evaluate, EmptyIsRejected) { EXPECT_THROW(evaluate_sweep({}), std::invalid_argument); }

TEST(DropCsv, SideBySideColumns) {
  const RobotModel m = default_model();
  const State x0 = standing_state(m, 0.1);
  const Trajectory ref = feasible_reference(m, x0);
  DropResult r = simulate_tracking(m, ref, PdGains{}, x0);
  r.reference = ref;
  const std::string csv = drop_to_csv(r);
  const std::string header = csv.substr(0, csv.find('\n'));
  EXPECT_EQ(split_csv_line(header).size(), 15u + 13u + 4u + 7u);
  EXPECT_NE(header.find("q_nom1"), std::string::npos);
  EXPECT_NE(header.find("q_opt4"), std::string::npos);
  EXPECT_NE(header.find("L_total"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), kHorizonKnots + 1);
  const auto j = drop_to_json(r);
  EXPECT_NEAR(j["final_pitch_deg"].get<double>(), r.final_pitch / kDeg, 1e-12);
}

}  // namespace
}  // namespace reorient
