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

#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "reorient/dynamics.hpp"
#include "reorient/io.hpp"
#include "reorient/robot_model.hpp"

namespace reorient {

inline constexpr double kHorizon = 0.5;
inline constexpr double kTimeStep = 0.001;
inline constexpr int kHorizonKnots = 500;

struct Knot {
  State state;
  ControlInput input;
};

// Knot k holds the state at t = k * dt and the input held over
// [k dt, (k+1) dt). final_state is the state after the last input, when known.
struct Trajectory {
  double dt = kTimeStep;
  std::vector<Knot> knots;
  std::optional<State> final_state;

  int size() const { return static_cast<int>(knots.size()); }
  const State& end_state() const { return final_state ? *final_state : knots.back().state; }
  std::vector<ControlInput> controls() const {
    std::vector<ControlInput> u;
    u.reserve(knots.size());
    for (const auto& k : knots) u.push_back(k.input);
    return u;
  }
};

inline Trajectory rollout(const RobotModel& m, const State& s0, const std::vector<ControlInput>& controls,
                          double h = kTimeStep) {
  Trajectory traj;
  traj.dt = h;
  traj.knots.reserve(controls.size());
  State s = s0;
  for (std::size_t k = 0; k < controls.size(); ++k) {
    traj.knots.push_back({s, controls[k]});
    try {
      s = rk4_step(m, s, controls[k], h);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at knot " + std::to_string(k), static_cast<int>(k));
    }
  }
  traj.final_state = s;
  return traj;
}

// CSV: t, theta, theta_dot, q1..q4, qd1..qd4, tau1..tau4 [, px, pz, vx, vz],
// one row per knot.
inline std::string trajectory_csv_header(bool with_com) {
  std::string h = "t,theta,theta_dot,q1,q2,q3,q4,qd1,qd2,qd3,qd4,tau1,tau2,tau3,tau4";
  if (with_com) h += ",px,pz,vx,vz";
  return h;
}

inline std::string trajectory_to_csv(const Trajectory& traj) {
  const bool with_com = !traj.knots.empty() && traj.knots.front().state.com.has_value();
  std::ostringstream os;
  os << trajectory_csv_header(with_com) << "\n";
  for (int k = 0; k < traj.size(); ++k) {
    const Knot& kn = traj.knots[k];
    put_double(os, k * traj.dt);
    const Vector10 x = kn.state.vec();
    for (int i = 0; i < kStateDim; ++i) {
      os << ",";
      put_double(os, x[i]);
    }
    for (int j = 0; j < kControlDim; ++j) {
      os << ",";
      put_double(os, kn.input.tau[j]);
    }
    if (with_com) {
      const ComState c = kn.state.com.value_or(ComState{});
      for (double v : {c.pos.x(), c.pos.y(), c.vel.x(), c.vel.y()}) {
        os << ",";
        put_double(os, v);
      }
    }
    os << "\n";
  }
  return os.str();
}

inline Trajectory trajectory_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!next_data_line(in, line)) throw std::invalid_argument("empty trajectory CSV");
  const auto header = split_csv_line(line);
  const bool with_com = header.size() == 19;
  if (line != trajectory_csv_header(with_com)) throw std::invalid_argument("unexpected trajectory CSV header");
  Trajectory traj;
  std::vector<double> times;
  while (next_data_line(in, line)) {
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw std::invalid_argument("ragged trajectory CSV row");
    std::vector<double> v(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) v[i] = std::stod(cells[i]);
    times.push_back(v[0]);
    Knot kn;
    Vector10 x;
    for (int i = 0; i < kStateDim; ++i) x[i] = v[1 + i];
    kn.state = State::from_vec(x);
    for (int j = 0; j < kControlDim; ++j) kn.input.tau[j] = v[11 + j];
    if (with_com) kn.state.com = ComState{{v[15], v[16]}, {v[17], v[18]}};
    traj.knots.push_back(kn);
  }
  if (times.size() >= 2) traj.dt = times[1] - times[0];
  return traj;
}

inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  write_file_atomic(path, trajectory_to_csv(traj));
}

inline Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  return trajectory_from_csv(read_file(path));
}

}  // namespace reorient
