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

// Experiment driver: solve, gen-data, train, eval, rollout.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "reorient/config.hpp"
#include "reorient/control.hpp"
#include "reorient/datasets.hpp"
#include "reorient/io.hpp"
#include "reorient/mlp.hpp"
#include "reorient/pipeline.hpp"

namespace fs = std::filesystem;
using namespace reorient;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

constexpr double kDeg = std::numbers::pi / 180.0;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string preset;
};

struct Context {
  ExperimentConfig cfg;
  std::string hash;
  fs::path out;
};

Context load(const CommonFlags& f) {
  Context c;
  std::optional<Preset> preset;
  if (!f.preset.empty()) preset = preset_from_name(f.preset);
  c.cfg = load_config(f.config, preset);
  if (f.seed) c.cfg.seed = *f.seed;
  if (!f.out.empty()) c.cfg.output_dir = f.out;
  c.hash = config_hash(c.cfg);
  c.out = c.cfg.output_dir;
  fs::create_directories(c.out);
  return c;
}

void log(const std::string& msg) { std::cerr << msg << std::endl; }

std::string fixed(double v, int digits = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

void progress(const std::string& tag, int i, const DdpSolution& s) {
  log(tag + " " + std::to_string(i) + ": iterations=" + std::to_string(s.iterations_used) +
      " cost=" + fixed(s.total_cost, 3) + " final_pitch_deg=" + fixed(s.trajectory.end_state().theta / kDeg) +
      (s.converged ? "" : " (not converged)"));
}

void write_csv(const fs::path& p, const Context& c, const std::string& csv) {
  write_file_atomic(p, with_hash_comment(c.hash, csv));
}

MlpNetwork load_network(const fs::path& p, const Context& c) {
  if (!fs::exists(p)) throw ConfigError("network file not found: " + p.string());
  MlpNetwork net = network_from_json(read_json(p));
  const std::string expected = model_hash(c.cfg.model);
  if (net.model_hash != expected) {
    throw ConfigError("network " + p.string() + " was trained for model " + net.model_hash +
                      ", config model is " + expected);
  }
  return net;
}

std::string drop_name(int i) {
  std::ostringstream os;
  os << "drop_" << std::setw(4) << std::setfill('0') << i;
  return os.str();
}

int cmd_solve(const CommonFlags& f, double theta_deg) {
  Context c = load(f);
  if (std::abs(theta_deg) > 90.0) throw ConfigError("theta0 must lie in [-90, 90] degrees");
  const State x0 = standing_state(c.cfg.model, theta_deg * kDeg);
  const DdpSolution sol = ddp_solve(c.cfg.model, x0, c.cfg.cost, c.cfg.ddp);
  const State xf = sol.trajectory.end_state();
  log("solve: iterations=" + std::to_string(sol.iterations_used) + " cost=" + fixed(sol.total_cost, 4) +
      " final_pitch_deg=" + fixed(xf.theta / kDeg));
  nlohmann::json j;
  j["config_hash"] = c.hash;
  j["theta0_deg"] = theta_deg;
  j["converged"] = sol.converged;
  j["iterations"] = sol.iterations_used;
  j["cost"] = sol.total_cost;
  j["cost_log"] = sol.cost_log;
  j["diagnostic"] = sol.diagnostic;
  j["final_pitch_deg"] = xf.theta / kDeg;
  const Vector4 err = xf.q - c.cfg.model.q_stand;
  j["final_joint_error_rad"] = std::vector<double>(err.data(), err.data() + kNumJoints);
  write_csv(c.out / "solve.csv", c, trajectory_to_csv(sol.trajectory));
  write_json_atomic(c.out / "solve_log.json", j);
  if (!sol.converged) throw RunFailure("DDP did not converge: " + sol.diagnostic);
  return kExitOk;
}

int cmd_gen_data(const CommonFlags& f) {
  Context c = load(f);
  const auto& cfg = c.cfg;
  log("gen-data: " + std::to_string(cfg.reflex_trajectories) + " reflex trajectories, " +
      std::to_string(cfg.extra_trajectories) + " randomized, config " + c.hash);
  const GeneratedData d = generate_data(cfg, progress);
  const nlohmann::json sweep_index = write_sweep(c.out / "sweep", d.sweep, cfg.sweep_seed(), c.hash);
  const nlohmann::json extra_index = write_sweep(c.out / "extra", d.extra, cfg.random_state_seed(), c.hash);
  const std::string reflex_csv = with_hash_comment(c.hash, dataset_to_csv(d.reflex));
  const std::string policy_csv = with_hash_comment(c.hash, dataset_to_csv(d.policy));
  write_file_atomic(c.out / "reflex_dataset.csv", reflex_csv);
  write_file_atomic(c.out / "policy_dataset.csv", policy_csv);

  nlohmann::json index;
  index["config_hash"] = c.hash;
  index["seed"] = cfg.seed;
  index["reflex_trajectories"] = d.sweep.solutions.size();
  index["extra_trajectories"] = d.extra.solutions.size();
  index["excluded"] = d.sweep.failures.size() + d.extra.failures.size();
  index["files"] = {{"sweep/index.json", json_hash(sweep_index)},
                    {"extra/index.json", json_hash(extra_index)},
                    {"reflex_dataset.csv", fnv1a_hex(reflex_csv)},
                    {"policy_dataset.csv", fnv1a_hex(policy_csv)}};
  write_json_atomic(c.out / "dataset_index.json", index);
  log("gen-data: index hash " + json_hash(index));
  return kExitOk;
}

int cmd_train(const CommonFlags& f, const std::string& role_name_arg, const std::string& data_path) {
  Context c = load(f);
  const NetRole role = role_from_name(role_name_arg);
  const fs::path data = data_path.empty() ? c.out / (role_name(role) + "_dataset.csv") : fs::path(data_path);
  if (!fs::exists(data)) throw ConfigError("dataset not found: " + data.string() + " (run gen-data first)");
  const RegressionDataset ds = dataset_from_csv(read_file(data));
  const TrainSchedule sched = effective_schedule(c.cfg, role, ds);
  log("train " + role_name(role) + ": " + std::to_string(ds.train_size()) + " samples, " +
      std::to_string(sched.epochs) + " epochs, batch " + std::to_string(sched.batch_size));
  const TrainedNetwork t = train_network(c.cfg, role, ds, [&](int epoch, double tr, double va) {
    if ((epoch + 1) % 10 == 0 || epoch + 1 == sched.epochs) {
      log("epoch " + std::to_string(epoch + 1) + " train=" + fixed(tr, 6) + " val=" + fixed(va, 6));
    }
  });
  const TrainHistory& h = t.history;
  std::ostringstream loss;
  loss << "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < h.train_loss.size(); ++e) {
    loss << e + 1 << ",";
    put_double(loss, h.train_loss[e]);
    loss << ",";
    put_double(loss, h.val_loss[e]);
    loss << "\n";
  }
  write_csv(c.out / (role_name(role) + "_loss.csv"), c, loss.str());
  write_json_atomic(c.out / (role_name(role) + "_network.json"), network_to_json(t.net));
  return kExitOk;
}

nlohmann::json eval_network(const Context& c, const MlpNetwork& net, const fs::path& dir,
                            std::vector<DropResult>* results_out) {
  const auto pitches = c.cfg.eval_pitches();
  std::vector<DropResult> results = evaluate_network(c.cfg, net, [&](int i, const DropResult& r) {
    log(role_name(net.role) + " drop " + std::to_string(i) + ": theta0_deg=" + fixed(pitches[i] / kDeg) +
        " final_pitch_deg=" + fixed(r.final_pitch / kDeg) + " joint_error=" + fixed(r.joint_error_norm(), 3));
    write_csv(dir / (drop_name(i) + ".csv"), c, drop_to_csv(r));
  });
  nlohmann::json j;
  j["config_hash"] = c.hash;
  j["network_role"] = role_name(net.role);
  j["network_config_hash"] = net.config_hash;
  j["model_hash"] = net.model_hash;
  j["summary"] = summary_to_json(evaluate_sweep(results));
  write_json_atomic(dir / "summary.json", j);
  if (results_out) *results_out = std::move(results);
  return j;
}

int cmd_eval(const CommonFlags& f, const std::string& network, const std::string& compare) {
  Context c = load(f);
  const MlpNetwork net = load_network(network, c);
  std::vector<DropResult> first;
  const auto j = eval_network(c, net, c.out / ("eval_" + role_name(net.role)), &first);
  log("eval: mean_final_pitch_deg=" + fixed(j["summary"]["mean_final_pitch_deg"].get<double>()) +
      " std_deg=" + fixed(j["summary"]["std_final_pitch_deg"].get<double>()));
  if (!compare.empty()) {
    const MlpNetwork other = load_network(compare, c);
    if (other.role == net.role) throw ConfigError("comparison needs one reflex and one policy network");
    std::vector<DropResult> second;
    const auto k = eval_network(c, other, c.out / ("eval_" + role_name(other.role)), &second);
    nlohmann::json cmp;
    cmp["config_hash"] = c.hash;
    cmp[role_name(net.role)] = j["summary"];
    cmp[role_name(other.role)] = k["summary"];
    write_json_atomic(c.out / "comparison.json", cmp);
    log("eval: mean joint error " + role_name(net.role) + "=" +
        fixed(j["summary"]["mean_joint_error_rad"].get<double>(), 4) + " " + role_name(other.role) + "=" +
        fixed(k["summary"]["mean_joint_error_rad"].get<double>(), 4));
  }
  return kExitOk;
}

int cmd_rollout(const CommonFlags& f, double theta_deg, const std::string& network, bool with_reference) {
  Context c = load(f);
  if (std::abs(theta_deg) > 90.0) throw ConfigError("theta0 must lie in [-90, 90] degrees");
  const State x0 = standing_state(c.cfg.model, theta_deg * kDeg);
  std::optional<DdpSolution> ref;
  if (with_reference || network.empty()) {
    ref = ddp_solve(c.cfg.model, x0, c.cfg.cost, c.cfg.ddp);
    if (!ref->converged) throw RunFailure("reference solve did not converge: " + ref->diagnostic);
  }
  DropResult r;
  if (network.empty()) {
    r = simulate_tracking(c.cfg.model, ref->trajectory, c.cfg.gains, x0, drop_options(c.cfg, 0));
  } else {
    r = run_drop(c.cfg, load_network(network, c), x0, 0);
  }
  if (ref) r.reference = ref->trajectory;
  write_csv(c.out / "rollout.csv", c, drop_to_csv(r));
  nlohmann::json j = drop_to_json(r);
  j["config_hash"] = c.hash;
  j["controller"] = network.empty() ? "tracking" : "network";
  write_json_atomic(c.out / "rollout.json", j);
  log("rollout: final_pitch_deg=" + fixed(r.final_pitch / kDeg) + " joint_error=" + fixed(r.joint_error_norm(), 3) +
      " momentum_drift=" + std::to_string(r.max_momentum_drift()));
  return kExitOk;
}

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config, "Experiment config (JSON with comments)")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", f.seed, "Override the config seed");
  sub->add_option("--out", f.out, "Override the output directory");
  sub->add_option("--preset", f.preset, "Scale preset")->check(CLI::IsMember({"full", "desk"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aerial reorientation experiments"};
  app.require_subcommand(1);
  CommonFlags flags;

  double theta_deg = 0.0;
  auto* solve = app.add_subcommand("solve", "Solve one reorientation problem with DDP");
  add_common(solve, flags);
  solve->add_option("--theta0", theta_deg, "Initial pitch in degrees")->required();

  auto* gen = app.add_subcommand("gen-data", "Generate the solution sweeps and datasets");
  add_common(gen, flags);

  std::string role;
  std::string data;
  auto* tr = app.add_subcommand("train", "Train the reflex or policy network");
  add_common(tr, flags);
  tr->add_option("--role", role, "reflex or policy")->required()->check(CLI::IsMember({"reflex", "policy"}));
  tr->add_option("--data", data, "Dataset CSV (default: <out>/<role>_dataset.csv)");

  std::string network;
  std::string compare;
  auto* ev = app.add_subcommand("eval", "Run the drop sweep for a trained network");
  add_common(ev, flags);
  ev->add_option("--network", network, "Network JSON")->required();
  ev->add_option("--compare", compare, "Second network of the other role, evaluated on the same drops");

  double rollout_theta = 0.0;
  std::string rollout_net;
  bool reference = false;
  auto* ro = app.add_subcommand("rollout", "Simulate one drop; without --network, track a DDP solution");
  add_common(ro, flags);
  ro->add_option("--theta0", rollout_theta, "Initial pitch in degrees")->required();
  ro->add_option("--network", rollout_net, "Network JSON");
  ro->add_flag("--reference", reference, "Also solve DDP and log its joint angles");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*solve) return cmd_solve(flags, theta_deg);
    if (*gen) return cmd_gen_data(flags);
    if (*tr) return cmd_train(flags, role, data);
    if (*ev) return cmd_eval(flags, network, compare);
    if (*ro) return cmd_rollout(flags, rollout_theta, rollout_net, reference);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << std::endl;
    return kExitNumerical;
  } catch (const RunFailure& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << std::endl;
    return kExitValidation;
  } catch (const std::domain_error& e) {
    std::cerr << "validation error: " << e.what() << std::endl;
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitNumerical;
  }
  return kExitValidation;
}
