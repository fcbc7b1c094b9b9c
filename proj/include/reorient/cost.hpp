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

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "reorient/robot_model.hpp"

namespace reorient {

struct BarrierValue {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

// -ln(z) above delta; below delta the log is continued by the quadratic
// that matches value, slope and curvature at z = delta, so the penalty is
// finite and C2 everywhere.
inline BarrierValue relaxed_barrier(double z, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("barrier delta must be positive");
  if (z > delta) return {-std::log(z), -1.0 / z, 1.0 / (z * z)};
  const double r = (z - 2.0 * delta) / delta;
  return {0.5 * (r * r - 1.0) - std::log(delta), r / delta, 1.0 / (delta * delta)};
}

// How the 7-entry diagonals of the reference cost map onto the 10-dim
// state. kBroadcast reads them as [theta | theta_dot | q (all four) |
// q_dot (four entries)]; kFull takes 10 explicit entries.
enum class WeightLayout { kBroadcast, kFull };

inline Vector10 expand_weights(const std::vector<double>& w, WeightLayout layout) {
  Vector10 out;
  if (layout == WeightLayout::kFull) {
    if (w.size() != kStateDim) throw std::invalid_argument("full weight layout needs 10 entries");
    for (int i = 0; i < kStateDim; ++i) out[i] = w[i];
    return out;
  }
  if (w.size() != 7) throw std::invalid_argument("broadcast weight layout needs 7 entries");
  out << w[0], w[1], w[2], w[2], w[2], w[2], w[3], w[4], w[5], w[6];
  return out;
}

struct CostSpec {
  Vector10 Q = Vector10::Zero();
  Vector4 R = Vector4::Ones();
  Vector10 Q_f = Vector10::Zero();
  Vector10 x_des = Vector10::Zero();
  double barrier_weight = 1000.0;
  double barrier_delta = 0.05;  // rad
  std::array<JointLimit, kNumJoints> joint_limits{};
  // Torques enter the same barrier through z = 1 -/+ tau / limit.
  Vector4 torque_limits = Vector4::Zero();
  double torque_barrier_weight = 30.0;
  double torque_barrier_delta = 0.01;
  double dt = 0.001;
};

inline CostSpec default_cost(const RobotModel& m) {
  CostSpec c;
  c.Q = expand_weights({2000, 0.1, 20, 0.1, 10, 0.1, 10}, WeightLayout::kBroadcast);
  c.Q_f = expand_weights({7000, 0.1, 3000, 0.1, 0.1, 0.1, 0.1}, WeightLayout::kBroadcast);
  c.R = Vector4::Constant(1.0);
  c.x_des = standing_state(m, 0.0).vec();
  c.joint_limits = m.joint_limits;
  c.torque_limits = m.torque_limits;
  return c;
}

inline std::vector<std::string> validate_cost(const CostSpec& c) {
  std::vector<std::string> out;
  if ((c.Q.array() < 0).any()) out.push_back("Q must be >= 0");
  if ((c.Q_f.array() < 0).any()) out.push_back("Q_f must be >= 0");
  if (!(c.R.array() > 0).all()) out.push_back("R must be > 0");
  if (!(c.barrier_weight >= 0)) out.push_back("barrier_weight must be >= 0");
  if (!(c.barrier_delta > 0)) out.push_back("barrier_delta must be > 0");
  if (!(c.torque_barrier_weight >= 0)) out.push_back("torque_barrier_weight must be >= 0");
  if (!(c.torque_barrier_delta > 0)) out.push_back("torque_barrier_delta must be > 0");
  if (!(c.dt > 0)) out.push_back("dt must be > 0");
  return out;
}

struct StageCostTerms {
  double tracking = 0.0;
  double effort = 0.0;
  double barrier = 0.0;
  double total() const { return tracking + effort + barrier; }
};

// Integrand pieces, already multiplied by dt.
inline StageCostTerms stage_cost_terms(const CostSpec& c, const Vector10& x, const Vector4& u) {
  StageCostTerms t;
  const Vector10 e = x - c.x_des;
  t.tracking = c.dt * e.dot(c.Q.cwiseProduct(e));
  t.effort = c.dt * u.dot(c.R.cwiseProduct(u));
  double bq = 0.0;
  double bu = 0.0;
  for (int j = 0; j < kNumJoints; ++j) {
    const double qj = x[2 + j];
    bq += relaxed_barrier(qj - c.joint_limits[j].lower, c.barrier_delta).value;
    bq += relaxed_barrier(c.joint_limits[j].upper - qj, c.barrier_delta).value;
    if (c.torque_limits[j] > 0.0) {
      const double r = u[j] / c.torque_limits[j];
      bu += relaxed_barrier(1.0 - r, c.torque_barrier_delta).value;
      bu += relaxed_barrier(1.0 + r, c.torque_barrier_delta).value;
    }
  }
  t.barrier = c.dt * (c.barrier_weight * bq + c.torque_barrier_weight * bu);
  return t;
}

inline double stage_cost(const CostSpec& c, const Vector10& x, const Vector4& u) {
  return stage_cost_terms(c, x, u).total();
}

inline double terminal_cost(const CostSpec& c, const Vector10& x) {
  const Vector10 e = x - c.x_des;
  return e.dot(c.Q_f.cwiseProduct(e));
}

// Gradient and (diagonal) Hessian of the stage cost; the cross term l_ux
// is identically zero.
struct StageCostDerivatives {
  Vector10 lx;
  Vector4 lu;
  Vector10 lxx_diag;
  Vector4 luu_diag;
};

inline StageCostDerivatives stage_cost_derivatives(const CostSpec& c, const Vector10& x, const Vector4& u) {
  StageCostDerivatives d;
  const Vector10 e = x - c.x_des;
  d.lx = 2.0 * c.dt * c.Q.cwiseProduct(e);
  d.lxx_diag = 2.0 * c.dt * c.Q;
  d.lu = 2.0 * c.dt * c.R.cwiseProduct(u);
  d.luu_diag = 2.0 * c.dt * c.R;
  const double w = c.dt * c.barrier_weight;
  const double wu = c.dt * c.torque_barrier_weight;
  for (int j = 0; j < kNumJoints; ++j) {
    const double qj = x[2 + j];
    const auto lo = relaxed_barrier(qj - c.joint_limits[j].lower, c.barrier_delta);
    const auto hi = relaxed_barrier(c.joint_limits[j].upper - qj, c.barrier_delta);
    d.lx[2 + j] += w * (lo.d1 - hi.d1);
    d.lxx_diag[2 + j] += w * (lo.d2 + hi.d2);
    if (c.torque_limits[j] > 0.0) {
      const double s = 1.0 / c.torque_limits[j];
      const double r = u[j] * s;
      const auto up = relaxed_barrier(1.0 - r, c.torque_barrier_delta);
      const auto dn = relaxed_barrier(1.0 + r, c.torque_barrier_delta);
      d.lu[j] += wu * s * (dn.d1 - up.d1);
      d.luu_diag[j] += wu * s * s * (up.d2 + dn.d2);
    }
  }
  return d;
}

}  // namespace reorient
