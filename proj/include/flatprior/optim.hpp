// Copyright 2026 The flatprior Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FLATPRIOR_OPTIM_HPP_
#define FLATPRIOR_OPTIM_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "flatprior/network.hpp"
#include "flatprior/objective.hpp"

namespace flatprior {

enum class OptimizerKind { kSgd, kGd, kMomentum, kAdam, kAdagrad, kRmsProp, kEntropySgd };

std::string_view to_string(OptimizerKind kind);
// Accepts sgd, gd, momentum, adam, adagrad, rmsprop, entropy-sgd (case-insensitive).
OptimizerKind parse_optimizer_kind(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kSgd;
  double learning_rate = 0.01;
  std::size_t batch_size = 32;  // ignored by GD
  double momentum = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double eps = 1e-8;
  double rmsprop_decay = 0.9;
  int entropy_inner_steps = 20;
  double entropy_gamma = 100.0;
  double entropy_sgld_noise = 1e-4;
  double entropy_average = 0.75;  // weight of the newest inner iterate

  // Kind-specific defaults: lr 0.01 for SGD, GD, Momentum and Entropy-SGD;
  // lr 0.001 for Adam, Adagrad and RMSProp; batch 32.
  static OptimizerConfig defaults(OptimizerKind kind);

  double inner_learning_rate() const { return 0.1 * learning_rate; }
  // Throws std::invalid_argument; train_size = 0 skips the batch check.
  void validate(std::size_t train_size = 0) const;
};

// Update rule state for one parameter vector. Entropy-SGD is driven by
// entropy_sgd_step instead and is rejected here.
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& config, Eigen::Index dimension);

  // Applies one update in place. Throws NumericalError on a non-finite gradient.
  void step(Vector& w, const Vector& gradient);

  const OptimizerConfig& config() const { return config_; }
  long long steps_taken() const { return t_; }

 private:
  OptimizerConfig config_;
  Vector first_;
  Vector second_;
  long long t_ = 0;
};

// One outer Entropy-SGD update: an SGLD inner loop on the objective coupled to
// w with strength gamma, exponentially averaged, then
// w <- w - lr * gamma * (w - average). Inner minibatches are drawn from rng.
Vector entropy_sgd_step(const Objective& objective, const Vector& w, const OptimizerConfig& config, Rng& rng);

// The local-entropy gradient estimate gamma * (w - average) used by the step.
Vector local_entropy_gradient(const Objective& objective, const Vector& w, const OptimizerConfig& config, Rng& rng);

enum class TrainStatus { kConverged, kNotConverged, kDiverged };

struct EpochTrace {
  int epoch = 0;
  double train_error = 0.0;
  double train_loss = 0.0;
};

struct TrainOptions {
  int max_epochs = 10000;
  // Epochs to keep training after the first zero-error epoch.
  int overtrain_epochs = 0;
  double divergence_loss = 1e6;
};

struct TrainResult {
  Params params;                   // final parameters (after any overtraining)
  Params params_at_zero_error;     // parameters at the first zero-error epoch
  int epochs_to_zero_error = -1;   // -1 when never reached
  bool converged = false;
  TrainStatus status = TrainStatus::kNotConverged;
  std::string message;
  std::vector<EpochTrace> per_epoch_trace;  // starts with epoch 0 (initial params)
};

// Epoch-at-a-time trainer over a fixed labeled set. Each epoch visits every
// example once in a seed-driven shuffled order; the last partial batch is kept.
class Trainer {
 public:
  Trainer(Params init, const LabeledSet& data, const OptimizerConfig& config, std::uint64_t seed);

  // Runs one epoch and returns the full-data error and loss afterwards.
  // Throws NumericalError when the update produces non-finite values.
  EpochTrace run_epoch();
  EpochTrace evaluate() const;

  const Params& params() const { return params_; }
  // Replaces the parameters (e.g. after a rescaling) and resets optimizer state.
  void set_params(Params params);
  int epoch() const { return epoch_; }

 private:
  Params params_;
  const LabeledSet& data_;
  OptimizerConfig config_;
  NetworkObjective objective_;
  Optimizer optimizer_;
  Rng rng_;
  std::vector<std::size_t> order_;
  int epoch_ = 0;
};

// Trains until classification error on data is exactly zero.
TrainResult train_to_zero_error(const Params& init, const LabeledSet& data, const OptimizerConfig& config,
                                const TrainOptions& options, std::uint64_t seed);

}  // namespace flatprior

#endif  // FLATPRIOR_OPTIM_HPP_
