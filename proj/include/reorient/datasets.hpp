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

// Supervised datasets distilled from swept DDP solutions.
//   reflex: x0 (10) -> whole trajectory, knot-major [state(10), input(4)]
//   policy: x_k (10) -> u_k (4), one pair per knot

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "reorient/io.hpp"
#include "reorient/mlp.hpp"
#include "reorient/trajopt.hpp"

namespace reorient {

inline constexpr int kKnotWidth = kStateDim + kControlDim;
inline constexpr double kValidationFraction = 0.1;

struct RegressionDataset {
  Eigen::MatrixXd train_x;  // one sample per column
  Eigen::MatrixXd train_y;
  Eigen::MatrixXd val_x;
  Eigen::MatrixXd val_y;
  Normalizer input_norm;   // fit on the training split
  Normalizer output_norm;
  int train_trajectories = 0;
  int val_trajectories = 0;

  int train_size() const { return static_cast<int>(train_x.cols()); }
  int val_size() const { return static_cast<int>(val_x.cols()); }
};

using ReflexDataset = RegressionDataset;
using PolicyDataset = RegressionDataset;

inline Eigen::VectorXd flatten_trajectory(const Trajectory& traj) {
  Eigen::VectorXd v(traj.size() * kKnotWidth);
  for (int k = 0; k < traj.size(); ++k) {
    v.segment<kStateDim>(k * kKnotWidth) = traj.knots[k].state.vec();
    v.segment<kControlDim>(k * kKnotWidth + kStateDim) = traj.knots[k].input.tau;
  }
  return v;
}

inline Trajectory unflatten_trajectory(const Eigen::VectorXd& v, double dt = kTimeStep) {
  if (v.size() % kKnotWidth != 0) throw std::domain_error("flattened trajectory length is not a multiple of 14");
  Trajectory traj;
  traj.dt = dt;
  const int n = static_cast<int>(v.size() / kKnotWidth);
  traj.knots.resize(n);
  for (int k = 0; k < n; ++k) {
    traj.knots[k].state = State::from_vec(v.segment<kStateDim>(k * kKnotWidth));
    traj.knots[k].input.tau = v.segment<kControlDim>(k * kKnotWidth + kStateDim);
  }
  return traj;
}

// Validation gets floor(fraction * n) items, but training always keeps one.
inline std::pair<std::vector<int>, std::vector<int>> split_indices(int n, double val_fraction, std::uint64_t seed) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  int n_val = static_cast<int>(std::floor(val_fraction * n + 1e-9));
  n_val = std::clamp(n_val, 0, std::max(0, n - 1));
  std::vector<int> val(idx.begin(), idx.begin() + n_val);
  std::vector<int> train(idx.begin() + n_val, idx.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return {train, val};
}

namespace detail {

inline void require_converged(const std::vector<SweepEntry>& sweep) {
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    if (!sweep[i].solution.converged) {
      throw std::invalid_argument("sweep entry " + std::to_string(i) + " is not converged");
    }
  }
}

inline void finish(RegressionDataset& d) {
  d.input_norm = Normalizer::fit(d.train_x);
  d.output_norm = Normalizer::fit(d.train_y);
}

}  // namespace detail

inline ReflexDataset build_reflex_dataset(const std::vector<SweepEntry>& sweep, std::uint64_t seed,
                                          double val_fraction = kValidationFraction) {
  if (sweep.empty()) throw std::invalid_argument("reflex dataset needs at least one solution");
  detail::require_converged(sweep);
  const int width = sweep.front().solution.trajectory.size() * kKnotWidth;
  const auto [train, val] = split_indices(static_cast<int>(sweep.size()), val_fraction, seed);
  auto fill = [&](const std::vector<int>& ids, Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
    x.resize(kStateDim, static_cast<Eigen::Index>(ids.size()));
    y.resize(width, static_cast<Eigen::Index>(ids.size()));
    for (std::size_t c = 0; c < ids.size(); ++c) {
      const auto& e = sweep[ids[c]];
      if (e.solution.trajectory.size() * kKnotWidth != width) throw std::invalid_argument("mixed horizons in sweep");
      x.col(c) = e.x0.vec();
      y.col(c) = flatten_trajectory(e.solution.trajectory);
    }
  };
  ReflexDataset d;
  fill(train, d.train_x, d.train_y);
  fill(val, d.val_x, d.val_y);
  d.train_trajectories = static_cast<int>(train.size());
  d.val_trajectories = static_cast<int>(val.size());
  detail::finish(d);
  return d;
}

// All knots of both sweeps become (x, u) pairs; the train/validation split
// is made per trajectory so no trajectory straddles it.
inline PolicyDataset build_policy_dataset(const std::vector<SweepEntry>& sweep, const std::vector<SweepEntry>& extra,
                                          std::uint64_t seed, double val_fraction = kValidationFraction) {
  std::vector<const SweepEntry*> all;
  for (const auto& e : sweep) all.push_back(&e);
  for (const auto& e : extra) all.push_back(&e);
  if (all.empty()) throw std::invalid_argument("policy dataset needs at least one solution");
  detail::require_converged(sweep);
  detail::require_converged(extra);
  const auto [train, val] = split_indices(static_cast<int>(all.size()), val_fraction, seed);
  auto fill = [&](const std::vector<int>& ids, Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
    Eigen::Index n = 0;
    for (int i : ids) n += all[i]->solution.trajectory.size();
    x.resize(kStateDim, n);
    y.resize(kControlDim, n);
    Eigen::Index c = 0;
    for (int i : ids) {
      for (const auto& kn : all[i]->solution.trajectory.knots) {
        x.col(c) = kn.state.vec();
        y.col(c) = kn.input.tau;
        ++c;
      }
    }
  };
  PolicyDataset d;
  fill(train, d.train_x, d.train_y);
  fill(val, d.val_x, d.val_y);
  d.train_trajectories = static_cast<int>(train.size());
  d.val_trajectories = static_cast<int>(val.size());
  detail::finish(d);
  return d;
}

// Sampling ranges for the randomized policy-augmentation initial states.
struct RandomStateRanges {
  double max_theta = std::numbers::pi / 2;
  double max_theta_dot = 2.0;  // rad/s
  double max_q_dot = 2.0;      // rad/s
  double joint_fraction = 0.7;  // share of each joint range, centered
};

// theta uniform in [-max_theta, max_theta], joints uniform over the central
// joint_fraction of their limits, rates uniform in the given bands; sorted
// by theta.
inline std::vector<State> sample_random_states(const RobotModel& m, int n, std::uint64_t seed,
                                               const RandomStateRanges& r = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<State> out(n);
  for (auto& s : out) {
    s.theta = r.max_theta * unit(rng);
    s.theta_dot = r.max_theta_dot * unit(rng);
    for (int j = 0; j < kNumJoints; ++j) {
      const auto& lim = m.joint_limits[j];
      s.q[j] = 0.5 * (lim.lower + lim.upper) + 0.5 * r.joint_fraction * (lim.upper - lim.lower) * unit(rng);
      s.q_dot[j] = r.max_q_dot * unit(rng);
    }
  }
  std::sort(out.begin(), out.end(), [](const State& a, const State& b) { return a.theta < b.theta; });
  return out;
}

// CSV layout: split, x1..x10, y1..yD with split in {train, val}.
inline std::string dataset_to_csv(const RegressionDataset& d) {
  std::ostringstream os;
  os << "split";
  for (Eigen::Index i = 0; i < d.train_x.rows(); ++i) os << ",x" << (i + 1);
  for (Eigen::Index i = 0; i < d.train_y.rows(); ++i) os << ",y" << (i + 1);
  os << "\n";
  auto rows = [&](const char* tag, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      os << tag;
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        os << ",";
        put_double(os, x(i, c));
      }
      for (Eigen::Index i = 0; i < y.rows(); ++i) {
        os << ",";
        put_double(os, y(i, c));
      }
      os << "\n";
    }
  };
  rows("train", d.train_x, d.train_y);
  rows("val", d.val_x, d.val_y);
  return os.str();
}

inline RegressionDataset dataset_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!next_data_line(in, line)) throw std::invalid_argument("empty dataset file");
  const auto header = split_csv_line(line);
  int nx = 0;
  int ny = 0;
  for (std::size_t i = 1; i < header.size(); ++i) (header[i][0] == 'x' ? nx : ny)++;
  std::vector<std::vector<double>> train, val;
  while (next_data_line(in, line)) {
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw std::invalid_argument("ragged dataset row");
    std::vector<double> v(cells.size() - 1);
    for (std::size_t i = 1; i < cells.size(); ++i) v[i - 1] = std::stod(cells[i]);
    (cells[0] == "val" ? val : train).push_back(std::move(v));
  }
  auto to_mats = [&](const std::vector<std::vector<double>>& rows, Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
    x.resize(nx, static_cast<Eigen::Index>(rows.size()));
    y.resize(ny, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t c = 0; c < rows.size(); ++c) {
      for (int i = 0; i < nx; ++i) x(i, c) = rows[c][i];
      for (int i = 0; i < ny; ++i) y(i, c) = rows[c][nx + i];
    }
  };
  RegressionDataset d;
  to_mats(train, d.train_x, d.train_y);
  to_mats(val, d.val_x, d.val_y);
  if (d.train_x.cols() == 0) throw std::invalid_argument("dataset has no training rows");
  detail::finish(d);
  return d;
}

}  // namespace reorient
