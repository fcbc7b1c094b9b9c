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

// End-to-end experiment steps shared by the command line tool and the
// acceptance runner: data generation, training and drop evaluation.

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "reorient/config.hpp"
#include "reorient/control.hpp"
#include "reorient/datasets.hpp"
#include "reorient/training.hpp"
#include "reorient/trajopt.hpp"

namespace reorient {

// A solve or sweep did not reach the configured outcome.
class RunFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using SolveProgress = std::function<void(const std::string& tag, int index, const DdpSolution&)>;

struct GeneratedData {
  SweepResult sweep;  // sorted-pitch solutions for the reflex network
  SweepResult extra;  // randomized starts, policy only
  RegressionDataset reflex;
  RegressionDataset policy;
};

// Throws RunFailure when fewer than cfg.min_converged sweep solves converge.
inline GeneratedData generate_data(const ExperimentConfig& cfg, const SolveProgress& progress = {}) {
  auto tagged = [&](const char* tag) {
    return [&progress, tag](int i, const DdpSolution& s) {
      if (progress) progress(tag, i, s);
    };
  };
  GeneratedData d;
  d.sweep = generate_solution_sweep(cfg.model, cfg.cost, cfg.ddp, cfg.reflex_trajectories, cfg.sweep_seed(),
                                    cfg.warm_start, tagged("sweep"));
  if (static_cast<int>(d.sweep.solutions.size()) < cfg.min_converged) {
    throw RunFailure("only " + std::to_string(d.sweep.solutions.size()) + " of " +
                     std::to_string(cfg.reflex_trajectories) + " solves converged; minimum is " +
                     std::to_string(cfg.min_converged));
  }
  if (cfg.extra_trajectories > 0) {
    const auto starts =
        sample_random_states(cfg.model, cfg.extra_trajectories, cfg.random_state_seed(), cfg.random_ranges);
    d.extra = solve_sequence(cfg.model, cfg.cost, cfg.ddp, starts, cfg.warm_start, tagged("extra"));
  }
  d.reflex = build_reflex_dataset(d.sweep.solutions, cfg.split_seed());
  d.policy = build_policy_dataset(d.sweep.solutions, d.extra.solutions, cfg.split_seed());
  return d;
}

struct TrainedNetwork {
  MlpNetwork net;
  TrainHistory history;
};

// The configured schedule for `role` with its seed, batch size capped at the
// training-set size.
inline TrainSchedule effective_schedule(const ExperimentConfig& cfg, NetRole role, const RegressionDataset& data) {
  const bool reflex = role == NetRole::kReflex;
  TrainSchedule s = reflex ? cfg.reflex_schedule : cfg.policy_schedule;
  s.seed = reflex ? cfg.reflex_train_seed() : cfg.policy_train_seed();
  s.batch_size = std::min(s.batch_size, static_cast<int>(data.train_size()));
  return s;
}

// Fresh network of the role's shape, trained on `data`.
inline TrainedNetwork train_network(const ExperimentConfig& cfg, NetRole role, const RegressionDataset& data,
                                    const std::function<void(int, double, double)>& on_epoch = {}) {
  const bool reflex = role == NetRole::kReflex;
  const auto sizes = reflex ? reflex_layer_sizes(cfg.hidden, cfg.ddp.knots()) : policy_layer_sizes(cfg.hidden);
  TrainedNetwork t{make_mlp(sizes, role, reflex ? cfg.reflex_init_seed() : cfg.policy_init_seed()), {}};
  t.net.config_hash = config_hash(cfg);
  t.net.model_hash = model_hash(cfg.model);
  t.history = train(t.net, data, effective_schedule(cfg, role, data), on_epoch);
  return t;
}

// Drop i of an evaluation sweep; noise streams differ per drop.
inline DropOptions drop_options(const ExperimentConfig& cfg, int index) {
  DropOptions o;
  o.dt = cfg.ddp.dt;
  o.knots = cfg.ddp.knots();
  o.simulate_detection = cfg.simulate_detection;
  o.measurement_noise_std = cfg.measurement_noise_std;
  o.noise_seed = cfg.eval_seed() * 1000003ULL + static_cast<std::uint64_t>(index);
  return o;
}

inline DropResult run_drop(const ExperimentConfig& cfg, const MlpNetwork& net, const State& x0, int index) {
  const DropOptions o = drop_options(cfg, index);
  return net.role == NetRole::kReflex ? simulate_reflex_drop(cfg.model, net, cfg.gains, x0, o)
                                      : simulate_policy_drop(cfg.model, net, x0, o);
}

// One drop per configured evaluation pitch, from the standing pose.
inline std::vector<DropResult> evaluate_network(const ExperimentConfig& cfg, const MlpNetwork& net,
                                                const std::function<void(int, const DropResult&)>& on_drop = {}) {
  const auto pitches = cfg.eval_pitches();
  if (pitches.empty()) throw ConfigError("evaluation sweep is empty");
  std::vector<DropResult> out;
  for (std::size_t i = 0; i < pitches.size(); ++i) {
    out.push_back(run_drop(cfg, net, standing_state(cfg.model, pitches[i]), static_cast<int>(i)));
    if (on_drop) on_drop(static_cast<int>(i), out.back());
  }
  return out;
}

}  // namespace reorient
