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

// Planar model of a quadruped with weighted feet: a body link plus a front
// and a back leg, each leg standing in for a left/right pair moving in
// unison. Joint order everywhere is [front hip, front knee, back hip,
// back knee].

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace reorient {

inline constexpr int kNumJoints = 4;
inline constexpr int kStateDim = 10;
inline constexpr int kControlDim = 4;

using Vector4 = Eigen::Vector4d;
using Vector10 = Eigen::Matrix<double, kStateDim, 1>;

struct LinkParams {
  double mass = 0.0;
  double length = 0.0;
  double com_offset = 0.0;  // from the proximal joint, along the link
  double inertia = 0.0;     // about the link COM
};

struct LegParams {
  double hip_offset = 0.0;  // signed, along the body x axis from body COM
  LinkParams upper;
  LinkParams lower;
};

struct JointLimit {
  double lower = 0.0;
  double upper = 0.0;
};

struct RobotModel {
  double body_mass = 0.0;
  double body_length = 0.0;
  double body_inertia = 0.0;
  std::array<LegParams, 2> legs;  // [front, back]
  double boot_mass = 0.0;         // point mass at each planar foot
  double gravity = 9.81;
  std::array<JointLimit, kNumJoints> joint_limits;
  Vector4 torque_limits = Vector4::Zero();
  Vector4 q_stand = Vector4::Zero();

  double total_mass() const {
    double m = body_mass + 2.0 * boot_mass;
    for (const auto& leg : legs) m += leg.upper.mass + leg.lower.mass;
    return m;
  }
};

struct ComState {
  Eigen::Vector2d pos = Eigen::Vector2d::Zero();  // (x, z), z up
  Eigen::Vector2d vel = Eigen::Vector2d::Zero();
};

// Pitch is positive nose-down.
struct State {
  double theta = 0.0;
  double theta_dot = 0.0;
  Vector4 q = Vector4::Zero();
  Vector4 q_dot = Vector4::Zero();
  std::optional<ComState> com;

  // [theta, theta_dot, q, q_dot]
  Vector10 vec() const {
    Vector10 x;
    x << theta, theta_dot, q, q_dot;
    return x;
  }

  static State from_vec(const Vector10& x) {
    State s;
    s.theta = x[0];
    s.theta_dot = x[1];
    s.q = x.segment<4>(2);
    s.q_dot = x.segment<4>(6);
    return s;
  }
};

struct ControlInput {
  Vector4 tau = Vector4::Zero();
};

inline LinkParams rod_link(double mass, double length) {
  return {mass, length, 0.5 * length, mass * length * length / 12.0};
}

namespace detail {
constexpr double kJointHalfRange = 0.9;
}

// Defaults approximate a small quadruped with 0.5 kg boots. Per planar leg
// masses are twice the per-physical-leg values.
inline RobotModel default_model() {
  RobotModel m;
  m.body_mass = 7.0;
  m.body_length = 0.38;
  m.body_inertia = 0.12;
  for (int i = 0; i < 2; ++i) {
    m.legs[i].hip_offset = (i == 0 ? 1.0 : -1.0) * 0.5 * m.body_length;
    m.legs[i].upper = rod_link(0.42, 0.21);
    m.legs[i].lower = rod_link(0.22, 0.21);
  }
  m.boot_mass = 2.0 * 0.5;
  m.gravity = 9.81;
  m.q_stand << 0.778, -1.578, 0.778, -1.578;
  for (int j = 0; j < kNumJoints; ++j) {
    m.joint_limits[j] = {m.q_stand[j] - detail::kJointHalfRange,
                         m.q_stand[j] + detail::kJointHalfRange};
  }
  // Knee travel stays inside (-pi, 0) so the lower leg cannot pass through
  // the upper leg.
  for (int j : {1, 3}) {
    m.joint_limits[j].lower = std::max(m.joint_limits[j].lower, -std::numbers::pi + 0.1);
    m.joint_limits[j].upper = std::min(m.joint_limits[j].upper, -0.1);
  }
  m.torque_limits = Vector4::Constant(2.0 * 17.0);
  return m;
}

inline std::vector<std::string> validate_model(const RobotModel& m) {
  std::vector<std::string> out;
  auto positive = [&](double v, const std::string& name) {
    if (!(v > 0.0)) out.push_back(name + " must be > 0");
  };
  auto nonneg = [&](double v, const std::string& name) {
    if (!(v >= 0.0)) out.push_back(name + " must be >= 0");
  };
  positive(m.body_mass, "body_mass");
  positive(m.body_length, "body_length");
  nonneg(m.body_inertia, "body_inertia");
  positive(m.boot_mass, "boot_mass");
  positive(m.gravity, "gravity");
  const char* leg_names[2] = {"front", "back"};
  for (int i = 0; i < 2; ++i) {
    const auto& leg = m.legs[i];
    const std::string p = std::string("legs.") + leg_names[i] + ".";
    for (auto [link, lname] : {std::pair{&leg.upper, "upper_link"}, std::pair{&leg.lower, "lower_link"}}) {
      positive(link->mass, p + lname + ".mass");
      positive(link->length, p + lname + ".length");
      nonneg(link->inertia, p + lname + ".inertia");
      if (link->com_offset < 0.0 || link->com_offset > link->length) {
        out.push_back(p + lname + ".com_offset must lie within [0, length]");
      }
    }
  }
  if (m.legs[0].hip_offset <= 0.0) out.push_back("legs.front.hip_offset must be > 0");
  if (m.legs[1].hip_offset >= 0.0) out.push_back("legs.back.hip_offset must be < 0");
  auto same_link = [](const LinkParams& a, const LinkParams& b) {
    return a.mass == b.mass && a.length == b.length && a.com_offset == b.com_offset &&
           a.inertia == b.inertia;
  };
  if (!same_link(m.legs[0].upper, m.legs[1].upper) || !same_link(m.legs[0].lower, m.legs[1].lower) ||
      m.legs[0].hip_offset != -m.legs[1].hip_offset) {
    out.push_back("legs: front and back legs must share link parameters and mirrored hip offsets");
  }
  for (int j = 0; j < kNumJoints; ++j) {
    const auto& lim = m.joint_limits[j];
    if (!(lim.lower < lim.upper)) {
      out.push_back("joint_limits[" + std::to_string(j) + "] must have lower < upper");
    } else if (!(m.q_stand[j] > lim.lower && m.q_stand[j] < lim.upper)) {
      out.push_back("q_stand[" + std::to_string(j) + "] must lie strictly inside joint_limits");
    }
    if (!(m.torque_limits[j] > 0.0)) {
      out.push_back("torque_limits[" + std::to_string(j) + "] must be > 0");
    }
  }
  return out;
}

inline State standing_state(const RobotModel& m, double theta0) {
  if (!std::isfinite(theta0) || std::abs(theta0) > std::numbers::pi / 2 + 1e-12) {
    throw std::domain_error("initial pitch must lie in [-pi/2, pi/2], got " + std::to_string(theta0));
  }
  State s;
  s.theta = theta0;
  s.q = m.q_stand;
  return s;
}

inline Vector10 desired_state(const RobotModel& m) { return standing_state(m, 0.0).vec(); }

// Reflection through the vertical plane at the COM: pitch flips sign and the
// legs trade places.
inline Vector4 mirror_joints(const Vector4& v) { return Vector4(v[2], v[3], v[0], v[1]); }

inline State mirror_state(const State& s) {
  State r;
  r.theta = -s.theta;
  r.theta_dot = -s.theta_dot;
  r.q = mirror_joints(s.q);
  r.q_dot = mirror_joints(s.q_dot);
  if (s.com) {
    ComState c = *s.com;
    c.pos.x() = -c.pos.x();
    c.vel.x() = -c.vel.x();
    r.com = c;
  }
  return r;
}

inline ControlInput saturate(const RobotModel& m, const ControlInput& u, int* clamped = nullptr) {
  ControlInput r;
  for (int j = 0; j < kNumJoints; ++j) {
    const double lim = m.torque_limits[j];
    r.tau[j] = std::clamp(u.tau[j], -lim, lim);
    if (clamped && r.tau[j] != u.tau[j]) ++*clamped;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Config file. Masses, inertias and torque limits are given per physical leg
// when "paired_legs" is true (the default) and are doubled for the planar
// model; with "paired_legs": false they are used as-is.

namespace detail {

inline LinkParams link_from_json(const nlohmann::json& j, double scale) {
  LinkParams l;
  l.mass = scale * j.at("mass").get<double>();
  l.length = j.at("length").get<double>();
  l.com_offset = j.value("com_offset", 0.5 * l.length);
  l.inertia = j.contains("inertia") ? scale * j.at("inertia").get<double>()
                                    : l.mass * l.length * l.length / 12.0;
  return l;
}

inline nlohmann::json link_to_json(const LinkParams& l) {
  return {{"mass", l.mass}, {"length", l.length}, {"com_offset", l.com_offset}, {"inertia", l.inertia}};
}

}  // namespace detail

inline RobotModel model_from_json(const nlohmann::json& j) {
  RobotModel m = default_model();
  const bool paired = j.value("paired_legs", true);
  const double scale = paired ? 2.0 : 1.0;
  m.body_mass = j.value("body_mass", m.body_mass);
  m.body_length = j.value("body_length", m.body_length);
  m.body_inertia = j.value("body_inertia", m.body_inertia);
  const double hip = j.value("hip_offset", 0.5 * m.body_length);
  m.legs[0].hip_offset = hip;
  m.legs[1].hip_offset = -hip;
  if (j.contains("upper_link")) {
    m.legs[0].upper = m.legs[1].upper = detail::link_from_json(j.at("upper_link"), scale);
  } else if (!paired) {
    m.legs[0].upper.mass = m.legs[1].upper.mass = 0.21;
    m.legs[0].upper.inertia = m.legs[1].upper.inertia = 0.21 * 0.21 * 0.21 / 12.0;
  }
  if (j.contains("lower_link")) {
    m.legs[0].lower = m.legs[1].lower = detail::link_from_json(j.at("lower_link"), scale);
  } else if (!paired) {
    m.legs[0].lower.mass = m.legs[1].lower.mass = 0.11;
    m.legs[0].lower.inertia = m.legs[1].lower.inertia = 0.11 * 0.21 * 0.21 / 12.0;
  }
  m.boot_mass = scale * j.value("boot_mass", 0.5);
  m.gravity = j.value("gravity", m.gravity);
  if (j.contains("q_stand")) {
    const auto v = j.at("q_stand").get<std::vector<double>>();
    if (v.size() != kNumJoints) throw std::invalid_argument("q_stand must have 4 entries");
    for (int k = 0; k < kNumJoints; ++k) m.q_stand[k] = v[k];
  }
  if (j.contains("joint_limits")) {
    const auto v = j.at("joint_limits").get<std::vector<std::vector<double>>>();
    if (v.size() != kNumJoints) throw std::invalid_argument("joint_limits must have 4 entries");
    for (int k = 0; k < kNumJoints; ++k) {
      if (v[k].size() != 2) throw std::invalid_argument("joint_limits entries are [lower, upper]");
      m.joint_limits[k] = {v[k][0], v[k][1]};
    }
  } else {
    for (int k = 0; k < kNumJoints; ++k) {
      m.joint_limits[k] = {m.q_stand[k] - detail::kJointHalfRange, m.q_stand[k] + detail::kJointHalfRange};
    }
  }
  {
    const auto v = j.value("torque_limits", std::vector<double>(kNumJoints, 17.0));
    if (v.size() != kNumJoints) throw std::invalid_argument("torque_limits must have 4 entries");
    for (int k = 0; k < kNumJoints; ++k) m.torque_limits[k] = scale * v[k];
  }
  return m;
}

// Planar (already paired) values; model_from_json(model_to_json(m)) == m.
inline nlohmann::json model_to_json(const RobotModel& m) {
  nlohmann::json j;
  j["paired_legs"] = false;
  j["body_mass"] = m.body_mass;
  j["body_length"] = m.body_length;
  j["body_inertia"] = m.body_inertia;
  j["hip_offset"] = m.legs[0].hip_offset;
  j["upper_link"] = detail::link_to_json(m.legs[0].upper);
  j["lower_link"] = detail::link_to_json(m.legs[0].lower);
  j["boot_mass"] = m.boot_mass;
  j["gravity"] = m.gravity;
  j["q_stand"] = std::vector<double>(m.q_stand.data(), m.q_stand.data() + kNumJoints);
  auto& lims = j["joint_limits"] = nlohmann::json::array();
  for (const auto& l : m.joint_limits) lims.push_back({l.lower, l.upper});
  j["torque_limits"] = std::vector<double>(m.torque_limits.data(), m.torque_limits.data() + kNumJoints);
  return j;
}

inline RobotModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open model file: " + path);
  const auto j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  RobotModel m = model_from_json(j);
  const auto issues = validate_model(m);
  if (!issues.empty()) {
    std::ostringstream msg;
    msg << "invalid model " << path << ":";
    for (const auto& v : issues) msg << "\n  " << v;
    throw std::invalid_argument(msg.str());
  }
  return m;
}

}  // namespace reorient
