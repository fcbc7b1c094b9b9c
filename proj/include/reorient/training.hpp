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
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "reorient/datasets.hpp"
#include "reorient/dynamics.hpp"
#include "reorient/mlp.hpp"

namespace reorient {

struct TrainSchedule {
  int epochs = 200;
  int batch_size = 2;
  double learning_rate = 0.001;
  std::uint64_t seed = 0;
};

// Full-scale hyperparameters for the two networks.
inline TrainSchedule reflex_full_schedule() { return {1000, 2, 0.001, 0}; }
inline TrainSchedule policy_full_schedule() { return {400, 500, 0.001, 0}; }

struct TrainHistory {
  std::vector<double> train_loss;  // mean batch loss per epoch
  std::vector<double> val_loss;    // NaN when there is no validation split
};

// Trains in place. The network adopts the dataset's normalization first.
// Minibatches are drawn without replacement from a per-epoch shuffle; a
// trailing partial batch is kept.
inline TrainHistory train(MlpNetwork& net, const RegressionDataset& data, const TrainSchedule& sched,
                          const std::function<void(int, double, double)>& on_epoch = {}) {
  if (data.train_size() == 0) throw std::invalid_argument("training set is empty");
  if (sched.batch_size < 1 || sched.batch_size > data.train_size()) {
    throw std::invalid_argument("batch size must be in [1, training set size]");
  }
  if (sched.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (data.train_x.rows() != net.input_dim() || data.train_y.rows() != net.output_dim()) {
    throw std::invalid_argument("dataset dimensions do not match the network");
  }
  net.input_norm = data.input_norm;
  net.output_norm = data.output_norm;

  AdamOptions aopt;
  aopt.learning_rate = sched.learning_rate;
  AdamState adam = AdamState::for_params(net.params, aopt);
  std::mt19937_64 rng(sched.seed);
  std::vector<int> order(data.train_size());
  std::iota(order.begin(), order.end(), 0);

  TrainHistory hist;
  Eigen::MatrixXd bx, by;
  for (int epoch = 0; epoch < sched.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    int batches = 0;
    for (int start = 0; start < data.train_size(); start += sched.batch_size) {
      const int b = std::min(sched.batch_size, data.train_size() - start);
      bx.resize(data.train_x.rows(), b);
      by.resize(data.train_y.rows(), b);
      for (int i = 0; i < b; ++i) {
        bx.col(i) = data.train_x.col(order[start + i]);
        by.col(i) = data.train_y.col(order[start + i]);
      }
      auto lg = mlp_gradient(net, bx, by);
      if (!std::isfinite(lg.loss)) {
        throw NumericalError("non-finite training loss in epoch " + std::to_string(epoch));
      }
      adam_update(adam, net.params, lg.grad);
      sum += lg.loss;
      ++batches;
    }
    hist.train_loss.push_back(sum / batches);
    const double val = data.val_size() > 0 ? mlp_loss(net, data.val_x, data.val_y)
                                           : std::numeric_limits<double>::quiet_NaN();
    hist.val_loss.push_back(val);
    if (on_epoch) on_epoch(epoch, hist.train_loss.back(), val);
  }
  return hist;
}

}  // namespace reorient
