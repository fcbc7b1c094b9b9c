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

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "reorient/control.hpp"
#include "reorient/cost.hpp"
#include "reorient/datasets.hpp"
#include "reorient/ddp.hpp"
#include "reorient/io.hpp"
#include "reorient/robot_model.hpp"
#include "reorient/training.hpp"

namespace reorient {

// Thrown for malformed or inconsistent configuration documents.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Preset { kFull, kDesk };

inline Preset preset_from_name(const std::string& s) {
  if (s == "full") return Preset::kFull;
  if (s == "desk") return Preset::kDesk;
  throw ConfigError("unknown preset: " + s + " (expected full or desk)");
}
inline std::string preset_name(Preset p) { return p == Preset::kFull ? "full" : "desk"; }

struct ExperimentConfig {
  std::string model_path;  // empty means default_model()
  RobotModel model = default_model();
  WeightLayout weight_layout = WeightLayout::kBroadcast;
  CostSpec cost = default_cost(default_model());
  DdpOptions ddp;

  Preset preset = Preset::kDesk;
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  int reflex_trajectories = 50;
  int extra_trajectories = 75;
  int min_converged = 45;
  bool warm_start = true;
  RandomStateRanges random_ranges;

  int hidden = 128;
  TrainSchedule reflex_schedule{200, 2, 1e-3, 0};
  TrainSchedule policy_schedule{200, 500, 1e-3, 0};

  PdGains gains;
  bool simulate_detection = false;
  double measurement_noise_std = 0.0;

  // Either explicit pitches (rad) or `sweep_count` uniform draws in
  // [-sweep_range, sweep_range].
  std::vector<double> sweep_pitches;
  int sweep_count = 20;
  double sweep_range = std::numbers::pi / 2;

  // Every stochastic stage draws from seed + a fixed offset.
  std::uint64_t sweep_seed() const { return seed; }
  std::uint64_t split_seed() const { return seed + 1; }
  std::uint64_t random_state_seed() const { return seed + 2; }
  std::uint64_t reflex_init_seed() const { return seed + 3; }
  std::uint64_t policy_init_seed() const { return seed + 4; }
  std::uint64_t reflex_train_seed() const { return seed + 5; }
  std::uint64_t policy_train_seed() const { return seed + 6; }
  std::uint64_t eval_seed() const { return seed + 7; }

  std::vector<double> eval_pitches() const {
    if (!sweep_pitches.empty()) return sweep_pitches;
    std::vector<double> out = sample_pitches(sweep_count, eval_seed());
    for (double& p : out) p *= sweep_range / (std::numbers::pi / 2);
    return out;
  }
};

inline void apply_preset(ExperimentConfig& c, Preset p) {
  c.preset = p;
  if (p == Preset::kFull) {
    c.reflex_trajectories = 400;
    c.extra_trajectories = 600;
    c.min_converged = 360;
    c.hidden = 512;
    c.reflex_schedule = reflex_full_schedule();
    c.policy_schedule = policy_full_schedule();
    c.sweep_count = 100;
  } else {
    c.reflex_trajectories = 50;
    c.extra_trajectories = 75;
    c.min_converged = 45;
    c.hidden = 128;
    c.reflex_schedule = {200, 2, 1e-3, 0};
    c.policy_schedule = {200, 500, 1e-3, 0};
    c.sweep_count = 20;
  }
}

namespace detail {

inline Vector4 read_vec4(const nlohmann::json& j, const char* key, const Vector4& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_number()) return Vector4::Constant(v.get<double>());
  const auto a = v.get<std::vector<double>>();
  if (a.size() != kNumJoints) throw ConfigError(std::string(key) + " must have 4 entries");
  return Vector4(a[0], a[1], a[2], a[3]);
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline void read_schedule(const nlohmann::json& j, TrainSchedule& s) {
  s.epochs = j.value("epochs", s.epochs);
  s.batch_size = j.value("batch_size", s.batch_size);
  s.learning_rate = j.value("learning_rate", s.learning_rate);
}

inline nlohmann::json schedule_json(const TrainSchedule& s) {
  return {{"epochs", s.epochs}, {"batch_size", s.batch_size}, {"learning_rate", s.learning_rate}};
}

}  // namespace detail

// Relative model paths resolve against `base_dir`. Preset defaults are applied
// first; explicit keys override them.
inline ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {},
                                         std::optional<Preset> preset_override = std::nullopt) {
  ExperimentConfig c;
  try {
    apply_preset(c, preset_override.value_or(preset_from_name(j.value("preset", std::string("desk")))));
    c.seed = j.value("seed", std::uint64_t{0});
    c.output_dir = j.value("output_dir", c.output_dir);

    if (j.contains("model")) {
      const auto& mj = j.at("model");
      if (mj.is_string()) {
        std::filesystem::path p = mj.get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        if (!std::filesystem::exists(p)) throw ConfigError("model file not found: " + p.string());
        c.model_path = p.string();
        c.model = load_model(c.model_path);
      } else {
        c.model = model_from_json(mj);
      }
    }
    const auto issues = validate_model(c.model);
    if (!issues.empty()) throw ConfigError("invalid model: " + issues.front());

    c.cost = default_cost(c.model);
    if (j.contains("cost")) {
      const auto& cj = j.at("cost");
      const std::string layout = cj.value("layout", std::string("broadcast"));
      if (layout != "broadcast" && layout != "full") throw ConfigError("cost.layout must be broadcast or full");
      c.weight_layout = layout == "full" ? WeightLayout::kFull : WeightLayout::kBroadcast;
      if (cj.contains("Q")) c.cost.Q = expand_weights(cj.at("Q").get<std::vector<double>>(), c.weight_layout);
      if (cj.contains("Q_f")) c.cost.Q_f = expand_weights(cj.at("Q_f").get<std::vector<double>>(), c.weight_layout);
      c.cost.R = detail::read_vec4(cj, "R", c.cost.R);
      c.cost.barrier_weight = cj.value("barrier_weight", c.cost.barrier_weight);
      c.cost.barrier_delta = cj.value("barrier_delta", c.cost.barrier_delta);
      c.cost.torque_barrier_weight = cj.value("torque_barrier_weight", c.cost.torque_barrier_weight);
      c.cost.torque_barrier_delta = cj.value("torque_barrier_delta", c.cost.torque_barrier_delta);
    }
    if (j.contains("ddp")) {
      const auto& dj = j.at("ddp");
      auto& d = c.ddp;
      d.max_iterations = dj.value("max_iterations", d.max_iterations);
      d.convergence_tolerance = dj.value("convergence_tolerance", d.convergence_tolerance);
      d.convergence_window = dj.value("convergence_window", d.convergence_window);
      d.min_expected_improvement = dj.value("min_expected_improvement", d.min_expected_improvement);
      d.reg_initial = dj.value("reg_initial", d.reg_initial);
      d.reg_min = dj.value("reg_min", d.reg_min);
      d.reg_increase = dj.value("reg_increase", d.reg_increase);
      d.reg_decrease = dj.value("reg_decrease", d.reg_decrease);
      d.reg_max = dj.value("reg_max", d.reg_max);
      d.line_search_steps = dj.value("line_search_steps", d.line_search_steps);
      d.armijo = dj.value("armijo", d.armijo);
      d.horizon = dj.value("horizon", d.horizon);
      d.dt = dj.value("dt", d.dt);
    }
    c.cost.dt = c.ddp.dt;

    if (j.contains("dataset")) {
      const auto& dj = j.at("dataset");
      c.reflex_trajectories = dj.value("reflex_trajectories", c.reflex_trajectories);
      c.extra_trajectories = dj.value("extra_trajectories", c.extra_trajectories);
      c.min_converged = dj.value("min_converged", c.min_converged);
      c.warm_start = dj.value("warm_start", c.warm_start);
      if (dj.contains("random_ranges")) {
        const auto& r = dj.at("random_ranges");
        c.random_ranges.max_theta = r.value("max_theta", c.random_ranges.max_theta);
        c.random_ranges.max_theta_dot = r.value("max_theta_dot", c.random_ranges.max_theta_dot);
        c.random_ranges.max_q_dot = r.value("max_q_dot", c.random_ranges.max_q_dot);
        c.random_ranges.joint_fraction = r.value("joint_fraction", c.random_ranges.joint_fraction);
      }
    }
    if (j.contains("training")) {
      const auto& tj = j.at("training");
      c.hidden = tj.value("hidden", c.hidden);
      if (tj.contains("reflex")) detail::read_schedule(tj.at("reflex"), c.reflex_schedule);
      if (tj.contains("policy")) detail::read_schedule(tj.at("policy"), c.policy_schedule);
    }
    if (j.contains("control")) {
      const auto& kj = j.at("control");
      c.gains.kp = detail::read_vec4(kj, "kp", c.gains.kp);
      c.gains.kd = detail::read_vec4(kj, "kd", c.gains.kd);
      c.simulate_detection = kj.value("simulate_detection", c.simulate_detection);
      c.measurement_noise_std = kj.value("measurement_noise_std", c.measurement_noise_std);
    }
    if (j.contains("sweep")) {
      const auto& sj = j.at("sweep");
      if (sj.contains("pitches_deg")) {
        if (sj.at("pitches_deg").empty()) throw ConfigError("sweep.pitches_deg is empty");
        c.sweep_pitches.clear();
        for (double d : sj.at("pitches_deg").get<std::vector<double>>()) {
          c.sweep_pitches.push_back(d * std::numbers::pi / 180.0);
        }
      }
      c.sweep_count = sj.value("count", c.sweep_count);
      if (sj.contains("range_deg")) c.sweep_range = sj.at("range_deg").get<double>() * std::numbers::pi / 180.0;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }

  std::vector<std::string> problems = validate_cost(c.cost);
  if (c.reflex_trajectories < 1) problems.push_back("dataset.reflex_trajectories must be >= 1");
  if (c.extra_trajectories < 0) problems.push_back("dataset.extra_trajectories must be >= 0");
  if (c.min_converged < 0 || c.min_converged > c.reflex_trajectories) {
    problems.push_back("dataset.min_converged must lie in [0, reflex_trajectories]");
  }
  if (!(c.random_ranges.joint_fraction > 0 && c.random_ranges.joint_fraction <= 1)) {
    problems.push_back("dataset.random_ranges.joint_fraction must lie in (0, 1]");
  }
  if (c.hidden < 1) problems.push_back("training.hidden must be >= 1");
  if (c.sweep_pitches.empty() && c.sweep_count < 1) problems.push_back("sweep.count must be >= 1");
  if (!(c.sweep_range > 0 && c.sweep_range <= std::numbers::pi / 2 + 1e-12)) {
    problems.push_back("sweep.range_deg must lie in (0, 90]");
  }
  for (double p : c.sweep_pitches) {
    if (std::abs(p) > std::numbers::pi / 2 + 1e-12) problems.push_back("sweep.pitches_deg entries must lie in [-90, 90]");
  }
  if (c.ddp.knots() < 1) problems.push_back("ddp.horizon must cover at least one step");
  if (!problems.empty()) throw ConfigError("invalid config: " + problems.front());
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path,
                                    std::optional<Preset> preset_override = std::nullopt) {
  nlohmann::json j;
  try {
    j = read_json(path);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path(), preset_override);
}

// Fully resolved form: the model is inlined so the hash covers its content.
inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["preset"] = preset_name(c.preset);
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["model"] = model_to_json(c.model);
  j["cost"] = {{"layout", "full"},
               {"Q", detail::to_std(c.cost.Q)},
               {"Q_f", detail::to_std(c.cost.Q_f)},
               {"R", detail::to_std(c.cost.R)},
               {"barrier_weight", c.cost.barrier_weight},
               {"barrier_delta", c.cost.barrier_delta},
               {"torque_barrier_weight", c.cost.torque_barrier_weight},
               {"torque_barrier_delta", c.cost.torque_barrier_delta}};
  const auto& d = c.ddp;
  j["ddp"] = {{"max_iterations", d.max_iterations},
              {"convergence_tolerance", d.convergence_tolerance},
              {"convergence_window", d.convergence_window},
              {"min_expected_improvement", d.min_expected_improvement},
              {"reg_initial", d.reg_initial},
              {"reg_min", d.reg_min},
              {"reg_increase", d.reg_increase},
              {"reg_decrease", d.reg_decrease},
              {"reg_max", d.reg_max},
              {"line_search_steps", d.line_search_steps},
              {"armijo", d.armijo},
              {"horizon", d.horizon},
              {"dt", d.dt}};
  j["dataset"] = {{"reflex_trajectories", c.reflex_trajectories},
                  {"extra_trajectories", c.extra_trajectories},
                  {"min_converged", c.min_converged},
                  {"warm_start", c.warm_start},
                  {"random_ranges",
                   {{"max_theta", c.random_ranges.max_theta},
                    {"max_theta_dot", c.random_ranges.max_theta_dot},
                    {"max_q_dot", c.random_ranges.max_q_dot},
                    {"joint_fraction", c.random_ranges.joint_fraction}}}};
  j["training"] = {{"hidden", c.hidden},
                   {"reflex", detail::schedule_json(c.reflex_schedule)},
                   {"policy", detail::schedule_json(c.policy_schedule)}};
  j["control"] = {{"kp", detail::to_std(c.gains.kp)},
                  {"kd", detail::to_std(c.gains.kd)},
                  {"simulate_detection", c.simulate_detection},
                  {"measurement_noise_std", c.measurement_noise_std}};
  std::vector<double> deg;
  for (double p : c.sweep_pitches) deg.push_back(p * 180.0 / std::numbers::pi);
  j["sweep"] = {{"count", c.sweep_count}, {"range_deg", c.sweep_range * 180.0 / std::numbers::pi}};
  if (!deg.empty()) j["sweep"]["pitches_deg"] = deg;
  return j;
}

// output_dir is excluded so relocating a run does not change its identity.
inline std::string config_hash(const ExperimentConfig& c) {
  nlohmann::json j = config_to_json(c);
  j.erase("output_dir");
  return json_hash(j);
}

inline std::string model_hash(const RobotModel& m) { return json_hash(model_to_json(m)); }

}  // namespace reorient
