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

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "reorient/datasets.hpp"
#include "reorient/dynamics.hpp"
#include "reorient/io.hpp"
#include "reorient/mlp.hpp"
#include "reorient/trajectory.hpp"

namespace reorient {

struct PdGains {
  Vector4 kp = Vector4::Constant(40.0);  // N·m/rad
  Vector4 kd = Vector4::Constant(1.0);   // N·m·s/rad
};

struct CommandedKnot {
  Vector4 tau_nom = Vector4::Zero();
  Vector4 q_nom = Vector4::Zero();
  Vector4 qd_nom = Vector4::Zero();
};

// tau_nom + Kp (q_nom - q) + Kd (qd_nom - qd), then clamped to the torque
// limits. `saturated` counts clamped joints.
inline ControlInput pd_plus_torque(const RobotModel& m, const PdGains& g, const CommandedKnot& cmd, const Vector4& q,
                                   const Vector4& q_dot, int* saturated = nullptr) {
  ControlInput u;
  u.tau = cmd.tau_nom + g.kp.cwiseProduct(cmd.q_nom - q) + g.kd.cwiseProduct(cmd.qd_nom - q_dot);
  return saturate(m, u, saturated);
}

// Declares a fall after `required` consecutive acceleration samples within
// center +/- half_band.
struct FallDetectorState {
  int counter = 0;
  double center = 9.81;     // m/s^2
  double half_band = 0.1;   // m/s^2
  int required = 15;
  bool detected = false;
};

inline std::pair<FallDetectorState, bool> detector_step(FallDetectorState d, double accel_magnitude) {
  if (!d.detected) {
    const bool in_band = std::abs(accel_magnitude - d.center) <= d.half_band + 1e-12;
    d.counter = in_band ? d.counter + 1 : 0;
    d.detected = d.counter >= d.required;
  }
  return {d, d.detected};
}

struct DropOptions {
  double dt = kTimeStep;
  int knots = kHorizonKnots;
  ComState initial_com{Eigen::Vector2d(0.0, 3.0), Eigen::Vector2d::Zero()};
  // When enabled the controller holds the standing pose until the detector
  // fires; the detector samples every detector_tick seconds.
  bool simulate_detection = false;
  FallDetectorState detector;
  double detector_tick = 0.002;
  PdGains hold_gains;
  double measurement_noise_std = 0.0;
  std::uint64_t noise_seed = 0;
};

struct DropResult {
  State initial_state;
  Trajectory executed;                 // actual states and applied torques, with final state
  std::optional<Trajectory> commanded;  // network (or reference) trajectory, reflex runs only
  std::optional<Trajectory> reference;  // optional DDP solution for comparison
  std::vector<MomentumDecomposition> momentum;  // one per executed knot
  double final_pitch = 0.0;
  Vector4 final_joint_error = Vector4::Zero();  // q(T) - q_stand
  int saturation_count = 0;
  std::optional<double> detection_latency;
  double peak_feedforward = 0.0;  // max |tau_nom|
  double peak_correction = 0.0;   // max |tau - tau_nom|

  double joint_error_norm() const { return final_joint_error.norm(); }
  double max_momentum_drift() const {
    double d = 0.0;
    for (const auto& L : momentum) d = std::max(d, std::abs(L.total - momentum.front().total));
    return d;
  }
};

namespace detail {

class Measurer {
 public:
  Measurer(double std, std::uint64_t seed) : std_(std), rng_(seed) {}
  State operator()(const State& s) {
    if (std_ <= 0.0) return s;
    State r = s;
    r.theta += noise();
    r.theta_dot += noise();
    for (int j = 0; j < kNumJoints; ++j) {
      r.q[j] += noise();
      r.q_dot[j] += noise();
    }
    return r;
  }

 private:
  double noise() { return dist_(rng_) * std_; }
  double std_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> dist_;
};

inline void finish_drop(const RobotModel& m, DropResult& r, const State& final_state) {
  r.executed.final_state = final_state;
  r.final_pitch = final_state.theta;
  r.final_joint_error = final_state.q - m.q_stand;
}

// Falls while holding the standing pose until a fall is detected.
inline State run_detection(const RobotModel& m, const DropOptions& opt, State s, DropResult& r) {
  const int per_tick = std::max(1, static_cast<int>(std::lround(opt.detector_tick / opt.dt)));
  FallDetectorState det = opt.detector;
  CommandedKnot hold;
  hold.q_nom = m.q_stand;
  int steps = 0;
  constexpr int kMaxSteps = 100000;
  while (true) {
    const Eigen::Vector2d v0 = s.com->vel;
    for (int i = 0; i < per_tick; ++i, ++steps) {
      const ControlInput u = pd_plus_torque(m, opt.hold_gains, hold, s.q, s.q_dot);
      s = rk4_step(m, s, u, opt.dt);
    }
    const double accel = ((s.com->vel - v0) / (per_tick * opt.dt)).norm();
    bool fired = false;
    std::tie(det, fired) = detector_step(det, accel);
    if (fired) break;
    if (steps > kMaxSteps) throw std::runtime_error("fall was never detected");
  }
  r.detection_latency = steps * opt.dt;
  return s;
}

}  // namespace detail

// Tracks a commanded trajectory with PD+ from x0.
inline DropResult simulate_tracking(const RobotModel& m, const Trajectory& commanded, const PdGains& gains,
                                    const State& x0, const DropOptions& opt = {}) {
  DropResult r;
  r.initial_state = x0;
  r.commanded = commanded;
  State s = x0;
  if (!s.com) s.com = opt.initial_com;
  detail::Measurer measure(opt.measurement_noise_std, opt.noise_seed);
  r.executed.dt = opt.dt;
  for (int k = 0; k < commanded.size(); ++k) {
    const Knot& c = commanded.knots[k];
    const CommandedKnot cmd{c.input.tau, c.state.q, c.state.q_dot};
    const State meas = measure(s);
    const ControlInput u = pd_plus_torque(m, gains, cmd, meas.q, meas.q_dot, &r.saturation_count);
    r.peak_feedforward = std::max(r.peak_feedforward, cmd.tau_nom.cwiseAbs().maxCoeff());
    r.peak_correction = std::max(r.peak_correction, (u.tau - cmd.tau_nom).cwiseAbs().maxCoeff());
    r.executed.knots.push_back({s, u});
    r.momentum.push_back(angular_momentum(m, s));
    try {
      s = rk4_step(m, s, u, opt.dt);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at knot " + std::to_string(k), k);
    }
  }
  detail::finish_drop(m, r, s);
  return r;
}

inline DropResult simulate_reflex_drop(const RobotModel& m, const MlpNetwork& net, const PdGains& gains,
                                       const State& x0, const DropOptions& opt = {}) {
  if (net.role != NetRole::kReflex) throw std::invalid_argument("simulate_reflex_drop needs a reflex network");
  if (std::abs(x0.theta) > std::numbers::pi / 2 + 1e-12) throw std::domain_error("initial pitch outside [-pi/2, pi/2]");
  State s = x0;
  if (!s.com) s.com = opt.initial_com;
  DropResult pre;
  if (opt.simulate_detection) s = detail::run_detection(m, opt, s, pre);
  detail::Measurer measure(opt.measurement_noise_std, opt.noise_seed ^ 0x9e3779b97f4a7c15ULL);
  const Eigen::VectorXd out = mlp_forward(net, measure(s).vec());
  if (!out.allFinite()) throw NumericalError("reflex network produced non-finite output");
  Trajectory cmd = unflatten_trajectory(out, opt.dt);
  DropResult r = simulate_tracking(m, cmd, gains, s, opt);
  r.initial_state = x0;
  r.detection_latency = pre.detection_latency;
  return r;
}

inline DropResult simulate_policy_drop(const RobotModel& m, const MlpNetwork& net, const State& x0,
                                       const DropOptions& opt = {}) {
  if (net.role != NetRole::kPolicy) throw std::invalid_argument("simulate_policy_drop needs a policy network");
  if (std::abs(x0.theta) > std::numbers::pi / 2 + 1e-12) throw std::domain_error("initial pitch outside [-pi/2, pi/2]");
  DropResult r;
  r.initial_state = x0;
  State s = x0;
  if (!s.com) s.com = opt.initial_com;
  if (opt.simulate_detection) s = detail::run_detection(m, opt, s, r);
  detail::Measurer measure(opt.measurement_noise_std, opt.noise_seed);
  r.executed.dt = opt.dt;
  for (int k = 0; k < opt.knots; ++k) {
    ControlInput raw;
    raw.tau = mlp_forward(net, measure(s).vec());
    if (!raw.tau.allFinite()) throw NumericalError("policy network produced non-finite output", k);
    const ControlInput u = saturate(m, raw, &r.saturation_count);
    r.peak_feedforward = std::max(r.peak_feedforward, raw.tau.cwiseAbs().maxCoeff());
    r.executed.knots.push_back({s, u});
    r.momentum.push_back(angular_momentum(m, s));
    try {
      s = rk4_step(m, s, u, opt.dt);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at knot " + std::to_string(k), k);
    }
  }
  detail::finish_drop(m, r, s);
  return r;
}

struct DropRow {
  double initial_pitch = 0.0;
  double final_pitch = 0.0;
  double joint_error_norm = 0.0;
  int saturation_count = 0;
  double momentum_drift = 0.0;
};

// Population statistics (divide by n).
struct SweepSummary {
  int count = 0;
  double mean_final_pitch = 0.0;  // rad
  double std_final_pitch = 0.0;   // rad
  double mean_joint_error = 0.0;  // rad, mean of per-drop ||q(T) - q_stand||
  double std_joint_error = 0.0;
  double max_momentum_drift = 0.0;
  std::vector<DropRow> rows;
};

inline SweepSummary evaluate_sweep(const std::vector<DropResult>& results) {
  if (results.empty()) throw std::invalid_argument("evaluate_sweep needs at least one result");
  SweepSummary s;
  s.count = static_cast<int>(results.size());
  for (const auto& r : results) {
    s.rows.push_back({r.initial_state.theta, r.final_pitch, r.joint_error_norm(), r.saturation_count,
                      r.max_momentum_drift()});
  }
  auto stats = [&](auto field, double& mean, double& sd) {
    mean = 0.0;
    for (const auto& row : s.rows) mean += field(row);
    mean /= s.count;
    double var = 0.0;
    for (const auto& row : s.rows) var += (field(row) - mean) * (field(row) - mean);
    sd = std::sqrt(var / s.count);
  };
  stats([](const DropRow& r) { return r.final_pitch; }, s.mean_final_pitch, s.std_final_pitch);
  stats([](const DropRow& r) { return r.joint_error_norm; }, s.mean_joint_error, s.std_joint_error);
  for (const auto& row : s.rows) s.max_momentum_drift = std::max(s.max_momentum_drift, row.momentum_drift);
  return s;
}

inline nlohmann::json summary_to_json(const SweepSummary& s) {
  constexpr double kDeg = 180.0 / std::numbers::pi;
  nlohmann::json j;
  j["count"] = s.count;
  j["mean_final_pitch_deg"] = s.mean_final_pitch * kDeg;
  j["std_final_pitch_deg"] = s.std_final_pitch * kDeg;
  j["mean_joint_error_rad"] = s.mean_joint_error;
  j["std_joint_error_rad"] = s.std_joint_error;
  j["max_momentum_drift"] = s.max_momentum_drift;
  auto& rows = j["drops"] = nlohmann::json::array();
  for (const auto& r : s.rows) {
    rows.push_back({{"initial_pitch_deg", r.initial_pitch * kDeg},
                    {"final_pitch_deg", r.final_pitch * kDeg},
                    {"joint_error_rad", r.joint_error_norm},
                    {"saturation_count", r.saturation_count},
                    {"momentum_drift", r.momentum_drift}});
  }
  return j;
}

// Side-by-side CSV: actual state and applied torque, commanded state and
// feedforward torque (reflex runs), optional DDP reference joints, momentum
// split and COM.
inline std::string drop_to_csv(const DropResult& r) {
  std::ostringstream os;
  os << "t,theta,theta_dot,q1,q2,q3,q4,qd1,qd2,qd3,qd4,tau1,tau2,tau3,tau4";
  if (r.commanded) {
    os << ",theta_nom,q_nom1,q_nom2,q_nom3,q_nom4,qd_nom1,qd_nom2,qd_nom3,qd_nom4,tau_nom1,tau_nom2,tau_nom3,tau_nom4";
  }
  if (r.reference) os << ",q_opt1,q_opt2,q_opt3,q_opt4";
  os << ",L_total,L_body,L_legs,px,pz,vx,vz\n";
  for (int k = 0; k < r.executed.size(); ++k) {
    const Knot& kn = r.executed.knots[k];
    auto put = [&](double v) {
      os << ",";
      put_double(os, v);
    };
    put_double(os, k * r.executed.dt);
    const Vector10 x = kn.state.vec();
    for (int i = 0; i < kStateDim; ++i) put(x[i]);
    for (int j = 0; j < kControlDim; ++j) put(kn.input.tau[j]);
    if (r.commanded) {
      const Knot& c = r.commanded->knots[k];
      put(c.state.theta);
      for (int j = 0; j < kNumJoints; ++j) put(c.state.q[j]);
      for (int j = 0; j < kNumJoints; ++j) put(c.state.q_dot[j]);
      for (int j = 0; j < kNumJoints; ++j) put(c.input.tau[j]);
    }
    if (r.reference) {
      for (int j = 0; j < kNumJoints; ++j) put(r.reference->knots[k].state.q[j]);
    }
    const auto& L = r.momentum[k];
    put(L.total);
    put(L.body);
    put(L.legs);
    const ComState c = kn.state.com.value_or(ComState{});
    for (double v : {c.pos.x(), c.pos.y(), c.vel.x(), c.vel.y()}) put(v);
    os << "\n";
  }
  return os.str();
}

inline nlohmann::json drop_to_json(const DropResult& r) {
  constexpr double kDeg = 180.0 / std::numbers::pi;
  nlohmann::json j;
  j["initial_pitch_deg"] = r.initial_state.theta * kDeg;
  j["final_pitch_deg"] = r.final_pitch * kDeg;
  j["final_joint_error_rad"] = std::vector<double>(r.final_joint_error.data(), r.final_joint_error.data() + 4);
  j["saturation_count"] = r.saturation_count;
  j["max_momentum_drift"] = r.max_momentum_drift();
  j["peak_feedforward"] = r.peak_feedforward;
  j["peak_correction"] = r.peak_correction;
  if (r.detection_latency) j["detection_latency_s"] = *r.detection_latency;
  return j;
}

}  // namespace reorient
