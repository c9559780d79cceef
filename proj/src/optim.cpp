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

#include "flatprior/optim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "flatprior/errors.hpp"

namespace flatprior {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

void require_finite(const Vector& g, const char* what) {
  if (!g.allFinite()) {
    Eigen::Index bad = 0;
    for (; bad < g.size(); ++bad) {
      if (!std::isfinite(g[bad])) break;
    }
    throw NumericalError(std::string(what) + " has a non-finite entry at index " + std::to_string(bad) + " (value " +
                         std::to_string(g[bad]) + ")");
  }
}

// Indices of a uniformly drawn minibatch without replacement.
std::vector<std::size_t> draw_batch(std::size_t population, std::size_t batch, Rng& rng) {
  std::vector<std::size_t> all(population);
  std::iota(all.begin(), all.end(), 0);
  batch = std::min(batch, population);
  for (std::size_t i = 0; i < batch; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, population - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(batch);
  return all;
}

}  // namespace

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kGd: return "gd";
    case OptimizerKind::kMomentum: return "momentum";
    case OptimizerKind::kAdam: return "adam";
    case OptimizerKind::kAdagrad: return "adagrad";
    case OptimizerKind::kRmsProp: return "rmsprop";
    case OptimizerKind::kEntropySgd: return "entropy-sgd";
  }
  return "unknown";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  const std::string n = lower(name);
  if (n == "sgd") return OptimizerKind::kSgd;
  if (n == "gd") return OptimizerKind::kGd;
  if (n == "momentum") return OptimizerKind::kMomentum;
  if (n == "adam") return OptimizerKind::kAdam;
  if (n == "adagrad") return OptimizerKind::kAdagrad;
  if (n == "rmsprop") return OptimizerKind::kRmsProp;
  if (n == "entropy-sgd" || n == "entropysgd" || n == "entropy_sgd") return OptimizerKind::kEntropySgd;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

OptimizerConfig OptimizerConfig::defaults(OptimizerKind kind) {
  OptimizerConfig c;
  c.kind = kind;
  switch (kind) {
    case OptimizerKind::kAdam:
    case OptimizerKind::kAdagrad:
    case OptimizerKind::kRmsProp:
      c.learning_rate = 0.001;
      break;
    default:
      c.learning_rate = 0.01;
      break;
  }
  return c;
}

void OptimizerConfig::validate(std::size_t train_size) const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (kind != OptimizerKind::kGd && train_size > 0 && batch_size > train_size) {
    throw std::invalid_argument("batch_size " + std::to_string(batch_size) + " exceeds training set size " +
                                std::to_string(train_size));
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (!(rmsprop_decay >= 0.0 && rmsprop_decay < 1.0)) throw std::invalid_argument("rmsprop_decay must lie in [0, 1)");
  if (entropy_inner_steps < 1) throw std::invalid_argument("entropy_inner_steps must be at least 1");
  if (!(entropy_gamma >= 0.0)) throw std::invalid_argument("entropy_gamma must be non-negative");
  if (!(entropy_sgld_noise >= 0.0)) throw std::invalid_argument("entropy_sgld_noise must be non-negative");
  if (!(entropy_average > 0.0 && entropy_average <= 1.0)) throw std::invalid_argument("entropy_average must lie in (0, 1]");
}

Optimizer::Optimizer(const OptimizerConfig& config, Eigen::Index dimension) : config_(config) {
  config_.validate();
  if (config_.kind == OptimizerKind::kEntropySgd) {
    throw std::invalid_argument("Entropy-SGD updates go through entropy_sgd_step");
  }
  first_ = Vector::Zero(dimension);
  second_ = Vector::Zero(dimension);
}

void Optimizer::step(Vector& w, const Vector& gradient) {
  require_finite(gradient, "gradient");
  if (gradient.size() != w.size() || w.size() != first_.size()) throw std::invalid_argument("optimizer state shape mismatch");
  ++t_;
  const double lr = config_.learning_rate;
  switch (config_.kind) {
    case OptimizerKind::kSgd:
    case OptimizerKind::kGd:
      w.noalias() -= lr * gradient;
      break;
    case OptimizerKind::kMomentum:
      first_ = config_.momentum * first_ + gradient;
      w.noalias() -= lr * first_;
      break;
    case OptimizerKind::kAdam: {
      const double b1 = config_.adam_beta1;
      const double b2 = config_.adam_beta2;
      first_ = b1 * first_ + (1.0 - b1) * gradient;
      second_ = b2 * second_ + (1.0 - b2) * gradient.cwiseAbs2();
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
      w.array() -= lr * (first_.array() / c1) / ((second_.array() / c2).sqrt() + config_.eps);
      break;
    }
    case OptimizerKind::kAdagrad:
      second_ += gradient.cwiseAbs2();
      w.array() -= lr * gradient.array() / (second_.array().sqrt() + config_.eps);
      break;
    case OptimizerKind::kRmsProp: {
      const double rho = config_.rmsprop_decay;
      second_ = rho * second_ + (1.0 - rho) * gradient.cwiseAbs2();
      w.array() -= lr * gradient.array() / (second_.array().sqrt() + config_.eps);
      break;
    }
    case OptimizerKind::kEntropySgd:
      throw std::logic_error("unreachable");
  }
  require_finite(w, "parameters after update");
}

Vector local_entropy_gradient(const Objective& objective, const Vector& w, const OptimizerConfig& config, Rng& rng) {
  const double inner_lr = config.inner_learning_rate();
  const double gamma = config.entropy_gamma;
  const double rho = config.entropy_average;
  std::normal_distribution<double> normal(0.0, 1.0);

  Vector inner = w;
  Vector average = w;
  for (int k = 0; k < config.entropy_inner_steps; ++k) {
    const auto rows = draw_batch(objective.example_count(), config.batch_size, rng);
    Vector g = objective.batch_gradient(inner, rows);
    require_finite(g, "inner gradient");
    g.noalias() += gamma * (inner - w);
    inner.noalias() -= inner_lr * g;
    if (config.entropy_sgld_noise > 0.0) {
      for (Eigen::Index i = 0; i < inner.size(); ++i) inner[i] += config.entropy_sgld_noise * normal(rng);
    }
    average = (1.0 - rho) * average + rho * inner;
  }
  return gamma * (w - average);
}

Vector entropy_sgd_step(const Objective& objective, const Vector& w, const OptimizerConfig& config, Rng& rng) {
  const Vector g = local_entropy_gradient(objective, w, config, rng);
  Vector out = w - config.learning_rate * g;
  require_finite(out, "parameters after Entropy-SGD update");
  return out;
}

Trainer::Trainer(Params init, const LabeledSet& data, const OptimizerConfig& config, std::uint64_t seed)
    : params_(std::move(init)),
      data_(data),
      config_(config),
      objective_(params_, data),
      optimizer_(config.kind == OptimizerKind::kEntropySgd ? OptimizerConfig::defaults(OptimizerKind::kSgd) : config,
                 static_cast<Eigen::Index>(params_.size())),
      rng_(seed),
      order_(data.size()) {
  data_.validate();
  config_.validate(data_.size());
  std::iota(order_.begin(), order_.end(), 0);
}

EpochTrace Trainer::evaluate() const {
  return EpochTrace{epoch_, classification_error(params_, data_), loss_ce(params_, data_)};
}

void Trainer::set_params(Params params) {
  params_ = std::move(params);
  optimizer_ = Optimizer(config_.kind == OptimizerKind::kEntropySgd ? OptimizerConfig::defaults(OptimizerKind::kSgd)
                                                                     : config_,
                         static_cast<Eigen::Index>(params_.size()));
}

EpochTrace Trainer::run_epoch() {
  const std::size_t n = data_.size();
  const std::size_t batch = config_.kind == OptimizerKind::kGd ? n : std::min(config_.batch_size, n);
  std::shuffle(order_.begin(), order_.end(), rng_);

  Vector w = params_.flatten();
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t stop = std::min(n, start + batch);
    std::span<const std::size_t> rows(order_.data() + start, stop - start);
    if (config_.kind == OptimizerKind::kEntropySgd) {
      w = entropy_sgd_step(objective_, w, config_, rng_);
    } else {
      optimizer_.step(w, objective_.batch_gradient(w, rows));
    }
  }
  params_.assign(w);
  ++epoch_;
  return evaluate();
}

TrainResult train_to_zero_error(const Params& init, const LabeledSet& data, const OptimizerConfig& config,
                                const TrainOptions& options, std::uint64_t seed) {
  if (options.max_epochs < 1) throw std::invalid_argument("max_epochs must be at least 1");
  Trainer trainer(init, data, config, seed);
  TrainResult result;

  auto record = [&](const EpochTrace& t) {
    result.per_epoch_trace.push_back(t);
    if (!std::isfinite(t.train_loss) || t.train_loss > options.divergence_loss) {
      result.status = TrainStatus::kDiverged;
      result.message = "training loss diverged at epoch " + std::to_string(t.epoch) + " (loss " +
                       std::to_string(t.train_loss) + ")";
      return false;
    }
    return true;
  };

  EpochTrace t = trainer.evaluate();
  bool ok = record(t);
  while (ok) {
    if (t.train_error == 0.0 && result.epochs_to_zero_error < 0) {
      result.epochs_to_zero_error = t.epoch;
      result.params_at_zero_error = trainer.params();
    }
    if (result.epochs_to_zero_error >= 0 && t.epoch >= result.epochs_to_zero_error + options.overtrain_epochs) break;
    if (result.epochs_to_zero_error < 0 && t.epoch >= options.max_epochs) break;
    try {
      t = trainer.run_epoch();
    } catch (const NumericalError& e) {
      result.status = TrainStatus::kDiverged;
      result.message = std::string("diverged at epoch ") + std::to_string(trainer.epoch() + 1) + ": " + e.what();
      ok = false;
      break;
    }
    ok = record(t);
  }

  result.params = trainer.params();
  if (result.status != TrainStatus::kDiverged) {
    result.converged = result.epochs_to_zero_error >= 0;
    result.status = result.converged ? TrainStatus::kConverged : TrainStatus::kNotConverged;
    if (!result.converged) {
      result.message = "no zero-error epoch within " + std::to_string(options.max_epochs) + " epochs";
    }
  }
  if (!result.converged) result.params_at_zero_error = result.params;
  return result;
}

}  // namespace flatprior
