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

// Fully connected ReLU network with standardized inputs and outputs.
// Parameters are stored as [W0, b0, W1, b1, ...]; batches are column-major
// (one sample per column).

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace reorient {

using ParameterSet = std::vector<Eigen::MatrixXd>;

inline ParameterSet zeros_like(const ParameterSet& p) {
  ParameterSet z;
  z.reserve(p.size());
  for (const auto& t : p) z.push_back(Eigen::MatrixXd::Zero(t.rows(), t.cols()));
  return z;
}

enum class NetRole { kReflex, kPolicy };

inline std::string role_name(NetRole r) { return r == NetRole::kReflex ? "reflex" : "policy"; }
inline NetRole role_from_name(const std::string& s) {
  if (s == "reflex") return NetRole::kReflex;
  if (s == "policy") return NetRole::kPolicy;
  throw std::invalid_argument("unknown network role: " + s);
}

struct Normalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;

  static Normalizer identity(int dim) {
    return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
  }

  // Per-row statistics of the samples (one per column). Constant rows get
  // unit scale.
  static Normalizer fit(const Eigen::MatrixXd& samples) {
    if (samples.cols() == 0) throw std::invalid_argument("cannot fit normalizer on zero samples");
    Normalizer n;
    n.mean = samples.rowwise().mean();
    n.std = ((samples.colwise() - n.mean).array().square().rowwise().mean()).sqrt();
    for (Eigen::Index i = 0; i < n.std.size(); ++i) {
      if (!(n.std[i] > 1e-8)) n.std[i] = 1.0;
    }
    return n;
  }

  Eigen::MatrixXd normalize(const Eigen::MatrixXd& x) const {
    return (x.colwise() - mean).array().colwise() / std.array();
  }
  Eigen::MatrixXd denormalize(const Eigen::MatrixXd& z) const {
    return (z.array().colwise() * std.array()).matrix().colwise() + mean;
  }
};

struct MlpNetwork {
  std::vector<int> layer_sizes;  // input, hidden..., output
  ParameterSet params;
  Normalizer input_norm;
  Normalizer output_norm;
  NetRole role = NetRole::kReflex;
  std::string config_hash;
  std::string model_hash;

  int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  Eigen::MatrixXd& weight(int l) { return params[2 * l]; }
  const Eigen::MatrixXd& weight(int l) const { return params[2 * l]; }
  Eigen::MatrixXd& bias(int l) { return params[2 * l + 1]; }
  const Eigen::MatrixXd& bias(int l) const { return params[2 * l + 1]; }
};

// Glorot-uniform weights, zero biases, identity normalization.
inline MlpNetwork make_mlp(const std::vector<int>& sizes, NetRole role, std::uint64_t seed) {
  if (sizes.size() < 2) throw std::invalid_argument("network needs at least input and output sizes");
  for (int s : sizes) {
    if (s < 1) throw std::invalid_argument("layer sizes must be positive");
  }
  MlpNetwork net;
  net.layer_sizes = sizes;
  net.role = role;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Eigen::MatrixXd w(out, in);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = dist(rng);
    }
    net.params.push_back(std::move(w));
    net.params.push_back(Eigen::MatrixXd::Zero(out, 1));
  }
  net.input_norm = Normalizer::identity(sizes.front());
  net.output_norm = Normalizer::identity(sizes.back());
  return net;
}

inline std::vector<int> reflex_layer_sizes(int hidden, int knots = 500) {
  return {10, hidden, hidden, knots * 14};
}
inline std::vector<int> policy_layer_sizes(int hidden) { return {10, hidden, hidden, 4}; }

namespace detail {

// Pre-activations of every layer for a normalized input batch.
inline std::vector<Eigen::MatrixXd> forward_layers(const MlpNetwork& net, const Eigen::MatrixXd& z0) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(net.num_layers() + 1);
  acts.push_back(z0);
  for (int l = 0; l < net.num_layers(); ++l) {
    Eigen::MatrixXd z = net.weight(l) * acts.back();
    z.colwise() += net.bias(l).col(0);
    if (l + 1 < net.num_layers()) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }
  return acts;
}

inline void check_input(const MlpNetwork& net, const Eigen::MatrixXd& x) {
  if (x.rows() != net.input_dim()) {
    throw std::domain_error("network expects input dimension " + std::to_string(net.input_dim()) + ", got " +
                            std::to_string(x.rows()));
  }
}

}  // namespace detail

// Network output in normalized units, batched.
inline Eigen::MatrixXd mlp_forward_normalized(const MlpNetwork& net, const Eigen::MatrixXd& x) {
  detail::check_input(net, x);
  return detail::forward_layers(net, net.input_norm.normalize(x)).back();
}

inline Eigen::MatrixXd mlp_forward_batch(const MlpNetwork& net, const Eigen::MatrixXd& x) {
  return net.output_norm.denormalize(mlp_forward_normalized(net, x));
}

inline Eigen::VectorXd mlp_forward(const MlpNetwork& net, const Eigen::VectorXd& x) {
  return mlp_forward_batch(net, x);
}

// Mean squared error in normalized output units, averaged over batch and
// output dimension.
inline double mlp_loss(const MlpNetwork& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (x.cols() == 0) throw std::invalid_argument("empty batch");
  const Eigen::MatrixXd err = mlp_forward_normalized(net, x) - net.output_norm.normalize(y);
  return err.squaredNorm() / static_cast<double>(err.size());
}

struct LossAndGradient {
  double loss = 0.0;
  ParameterSet grad;
};

inline LossAndGradient mlp_gradient(const MlpNetwork& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (x.cols() == 0) throw std::invalid_argument("empty batch");
  if (y.rows() != net.output_dim() || y.cols() != x.cols()) throw std::domain_error("target shape mismatch");
  detail::check_input(net, x);
  const auto acts = detail::forward_layers(net, net.input_norm.normalize(x));
  Eigen::MatrixXd delta = acts.back() - net.output_norm.normalize(y);
  LossAndGradient out;
  const double scale = 1.0 / static_cast<double>(delta.size());
  out.loss = delta.squaredNorm() * scale;
  delta *= 2.0 * scale;
  out.grad.resize(net.params.size());
  for (int l = net.num_layers() - 1; l >= 0; --l) {
    out.grad[2 * l] = delta * acts[l].transpose();
    out.grad[2 * l + 1] = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = net.weight(l).transpose() * delta;
      delta = (acts[l].array() > 0.0).select(back, 0.0);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Adam with bias correction. Defaults follow the TensorFlow/Keras optimizer
// defaults (epsilon 1e-7).

struct AdamOptions {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

struct AdamState {
  AdamOptions options;
  ParameterSet m;
  ParameterSet v;
  std::int64_t step = 0;

  static AdamState for_params(const ParameterSet& p, AdamOptions opt = {}) {
    return {opt, zeros_like(p), zeros_like(p), 0};
  }
};

inline void adam_update(AdamState& s, ParameterSet& params, const ParameterSet& grad) {
  if (params.size() != grad.size() || params.size() != s.m.size()) {
    throw std::invalid_argument("Adam: parameter/gradient/state shapes differ");
  }
  ++s.step;
  const auto& o = s.options;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].rows() != grad[i].rows() || params[i].cols() != grad[i].cols()) {
      throw std::invalid_argument("Adam: tensor shape mismatch");
    }
    s.m[i] = o.beta1 * s.m[i] + (1.0 - o.beta1) * grad[i];
    s.v[i] = o.beta2 * s.v[i] + (1.0 - o.beta2) * grad[i].cwiseAbs2();
    params[i].array() -= o.learning_rate * (s.m[i].array() / c1) / ((s.v[i].array() / c2).sqrt() + o.epsilon);
  }
}

// ---------------------------------------------------------------------------
// Versioned JSON. Weight matrices are stored row-major.

inline constexpr int kNetworkFormatVersion = 1;

inline nlohmann::json network_to_json(const MlpNetwork& net) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json j;
  j["format"] = "reorient-mlp";
  j["version"] = kNetworkFormatVersion;
  j["role"] = role_name(net.role);
  j["layer_sizes"] = net.layer_sizes;
  j["activation"] = "relu";
  auto& layers = j["layers"] = nlohmann::json::array();
  for (int l = 0; l < net.num_layers(); ++l) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = net.weight(l);
    layers.push_back({{"weights", std::vector<double>(w.data(), w.data() + w.size())},
                      {"bias", vec(net.bias(l).col(0))}});
  }
  j["input_mean"] = vec(net.input_norm.mean);
  j["input_std"] = vec(net.input_norm.std);
  j["output_mean"] = vec(net.output_norm.mean);
  j["output_std"] = vec(net.output_norm.std);
  j["config_hash"] = net.config_hash;
  j["model_hash"] = net.model_hash;
  return j;
}

inline MlpNetwork network_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "reorient-mlp") throw std::invalid_argument("not a reorient network file");
  if (j.value("version", 0) != kNetworkFormatVersion) throw std::invalid_argument("unsupported network file version");
  auto vec = [](const nlohmann::json& a, std::size_t n) {
    const auto v = a.get<std::vector<double>>();
    if (v.size() != n) throw std::invalid_argument("network file: vector size mismatch");
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  MlpNetwork net;
  net.role = role_from_name(j.at("role").get<std::string>());
  net.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  if (net.layer_sizes.size() < 2) throw std::invalid_argument("network file: too few layers");
  const auto& layers = j.at("layers");
  if (static_cast<int>(layers.size()) != net.num_layers()) throw std::invalid_argument("network file: layer count");
  for (int l = 0; l < net.num_layers(); ++l) {
    const int in = net.layer_sizes[l];
    const int out = net.layer_sizes[l + 1];
    const auto w = layers[l].at("weights").get<std::vector<double>>();
    if (static_cast<int>(w.size()) != in * out) throw std::invalid_argument("network file: weight size mismatch");
    net.params.push_back(
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(w.data(), out, in));
    net.params.push_back(vec(layers[l].at("bias"), out));
  }
  net.input_norm = {vec(j.at("input_mean"), net.input_dim()), vec(j.at("input_std"), net.input_dim())};
  net.output_norm = {vec(j.at("output_mean"), net.output_dim()), vec(j.at("output_std"), net.output_dim())};
  if (!(net.input_norm.std.array() > 0).all() || !(net.output_norm.std.array() > 0).all()) {
    throw std::invalid_argument("network file: normalization std must be positive");
  }
  net.config_hash = j.value("config_hash", "");
  net.model_hash = j.value("model_hash", "");
  return net;
}

}  // namespace reorient
