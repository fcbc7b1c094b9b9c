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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "reorient/cost.hpp"
#include "reorient/ddp.hpp"
#include "reorient/dynamics.hpp"
#include "reorient/io.hpp"
#include "reorient/trajectory.hpp"

namespace reorient {

// Falling-robot reorientation as a DdpProblem on the reduced state.
class ReorientProblem {
 public:
  static constexpr int kNx = kStateDim;
  static constexpr int kNu = kControlDim;
  using StateVec = Vector10;
  using InputVec = Vector4;
  using StateMat = StateMatrix;

  ReorientProblem(const RobotModel& model, const CostSpec& cost, int knots)
      : model_(model), cost_(cost), knots_(knots) {}

  int horizon() const { return knots_; }
  Vector10 step(const Vector10& x, const Vector4& u, int) const { return discrete_step(model_, x, u, cost_.dt); }
  double running_cost(const Vector10& x, const Vector4& u, int) const { return stage_cost(cost_, x, u); }
  double terminal_cost(const Vector10& x) const { return reorient::terminal_cost(cost_, x); }

  void stage_derivatives(const Vector10& x, const Vector4& u, int, StageDerivatives<kNx, kNu>& d) const {
    discrete_step_jacobians(model_, x, u, cost_.dt, d.A, d.B);
    const auto c = stage_cost_derivatives(cost_, x, u);
    d.lx = c.lx;
    d.lu = c.lu;
    d.lxx = c.lxx_diag.asDiagonal();
    d.luu = c.luu_diag.asDiagonal();
    d.lux.setZero();
  }

  void terminal_derivatives(const Vector10& x, Vector10& gx, StateMatrix& gxx) const {
    gx = 2.0 * cost_.Q_f.cwiseProduct(x - cost_.x_des);
    gxx = (2.0 * cost_.Q_f).asDiagonal();
  }

 private:
  const RobotModel& model_;
  const CostSpec& cost_;
  int knots_;
};

struct DdpSolution {
  Trajectory trajectory;
  double total_cost = 0.0;
  int iterations_used = 0;
  bool converged = false;
  std::vector<double> cost_log;
  std::string diagnostic;
};

inline DdpSolution ddp_solve(const RobotModel& m, const State& x0, const CostSpec& spec, const DdpOptions& opts,
                             const std::optional<Trajectory>& warm_start = std::nullopt) {
  if (!(std::abs(x0.theta) <= std::numbers::pi / 2 + 1e-12)) {
    throw std::domain_error("initial pitch must lie in [-pi/2, pi/2]");
  }
  if (std::abs(opts.dt - spec.dt) > 1e-15) throw std::invalid_argument("DdpOptions.dt and CostSpec.dt differ");
  const int n = opts.knots();
  std::vector<Vector4> us(n, Vector4::Zero());
  if (warm_start) {
    if (warm_start->size() != n) throw std::invalid_argument("warm start horizon does not match");
    for (int k = 0; k < n; ++k) us[k] = warm_start->knots[k].input.tau;
  }
  const ReorientProblem problem(m, spec, n);
  auto r = ddp_solve_problem(problem, x0.vec(), std::move(us), opts);

  DdpSolution sol;
  sol.total_cost = r.cost;
  sol.iterations_used = r.iterations;
  sol.converged = r.converged;
  sol.cost_log = std::move(r.cost_log);
  sol.diagnostic = std::move(r.diagnostic);
  sol.trajectory.dt = opts.dt;
  sol.trajectory.knots.resize(n);
  for (int k = 0; k < n && k < static_cast<int>(r.xs.size()); ++k) {
    sol.trajectory.knots[k].state = State::from_vec(r.xs[k]);
    sol.trajectory.knots[k].input.tau = r.us[k];
  }
  if (static_cast<int>(r.xs.size()) == n + 1) sol.trajectory.final_state = State::from_vec(r.xs[n]);
  return sol;
}

struct SweepEntry {
  State x0;
  DdpSolution solution;
};

struct SweepResult {
  std::vector<SweepEntry> solutions;  // converged only, in solve order
  std::vector<std::string> failures;  // one line per excluded instance
  std::vector<int> all_iterations;    // per attempted instance, in solve order
};

// Uniform pitches in [-90 deg, 90 deg], sorted ascending.
inline std::vector<double> sample_pitches(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-std::numbers::pi / 2, std::numbers::pi / 2);
  std::vector<double> out(n);
  for (auto& v : out) v = dist(rng);
  std::sort(out.begin(), out.end());
  return out;
}

// Largest |tau_j| / limit_j over the trajectory.
inline double peak_torque_ratio(const RobotModel& m, const Trajectory& t) {
  double r = 0.0;
  for (const auto& k : t.knots) r = std::max(r, k.input.tau.cwiseAbs().cwiseQuotient(m.torque_limits).maxCoeff());
  return r;
}

// Converged solutions may still lean on the soft torque penalty; above this
// ratio they are treated as infeasible.
inline constexpr double kMaxTorqueRatio = 1.05;

// Solves a sequence of problems in the given order. With warm_start, each
// solve starts from the controls of the most recent accepted solution.
// Unconverged and torque-infeasible solutions are excluded.
inline SweepResult solve_sequence(const RobotModel& m, const CostSpec& spec, const DdpOptions& opts,
                                  const std::vector<State>& initial_states, bool warm_start,
                                  const std::function<void(int, const DdpSolution&)>& on_solved = {}) {
  SweepResult out;
  std::optional<Trajectory> prev;
  for (std::size_t i = 0; i < initial_states.size(); ++i) {
    const State& x0 = initial_states[i];
    DdpSolution sol = ddp_solve(m, x0, spec, opts, warm_start ? prev : std::nullopt);
    out.all_iterations.push_back(sol.iterations_used);
    if (on_solved) on_solved(static_cast<int>(i), sol);
    const double ratio = sol.converged ? peak_torque_ratio(m, sol.trajectory) : 0.0;
    if (!sol.converged || ratio > kMaxTorqueRatio) {
      std::ostringstream os;
      os << "instance " << i << " theta0=" << x0.theta << " excluded: ";
      if (sol.converged) {
        os << "peak torque is " << ratio << " times the limit";
      } else {
        os << sol.diagnostic;
      }
      out.failures.push_back(os.str());
      continue;
    }
    prev = sol.trajectory;
    out.solutions.push_back({x0, std::move(sol)});
  }
  return out;
}

inline SweepResult generate_solution_sweep(const RobotModel& m, const CostSpec& spec, const DdpOptions& opts, int n,
                                           std::uint64_t seed, bool warm_start = true,
                                           const std::function<void(int, const DdpSolution&)>& on_solved = {}) {
  if (n < 1) throw std::invalid_argument("sweep size must be >= 1");
  std::vector<State> x0s;
  for (double th : sample_pitches(n, seed)) x0s.push_back(standing_state(m, th));
  return solve_sequence(m, spec, opts, x0s, warm_start, on_solved);
}

// Writes solution_NNNN.csv per solution plus index.json.
inline nlohmann::json write_sweep(const std::filesystem::path& dir, const SweepResult& sweep, std::uint64_t seed,
                                  const std::string& config_hash) {
  nlohmann::json index;
  index["seed"] = seed;
  index["config_hash"] = config_hash;
  index["failures"] = sweep.failures;
  auto& items = index["solutions"] = nlohmann::json::array();
  for (std::size_t i = 0; i < sweep.solutions.size(); ++i) {
    const auto& e = sweep.solutions[i];
    std::ostringstream name;
    name << "solution_" << std::setw(4) << std::setfill('0') << i << ".csv";
    write_file_atomic(dir / name.str(), with_hash_comment(config_hash, trajectory_to_csv(e.solution.trajectory)));
    const Vector10 x0 = e.x0.vec();
    items.push_back({{"file", name.str()},
                     {"x0", std::vector<double>(x0.data(), x0.data() + kStateDim)},
                     {"cost", e.solution.total_cost},
                     {"iterations", e.solution.iterations_used},
                     {"converged", e.solution.converged},
                     {"final_theta", e.solution.trajectory.end_state().theta}});
  }
  write_json_atomic(dir / "index.json", index);
  return index;
}

inline SweepResult read_sweep(const std::filesystem::path& dir) {
  const auto index = read_json(dir / "index.json");
  SweepResult out;
  for (const auto& item : index.at("solutions")) {
    SweepEntry e;
    const auto x0 = item.at("x0").get<std::vector<double>>();
    e.x0 = State::from_vec(Eigen::Map<const Vector10>(x0.data()));
    e.solution.trajectory = read_trajectory_csv(dir / item.at("file").get<std::string>());
    e.solution.total_cost = item.at("cost").get<double>();
    e.solution.iterations_used = item.at("iterations").get<int>();
    e.solution.converged = item.at("converged").get<bool>();
    out.solutions.push_back(std::move(e));
  }
  for (const auto& f : index.value("failures", nlohmann::json::array())) out.failures.push_back(f.get<std::string>());
  return out;
}

}  // namespace reorient
