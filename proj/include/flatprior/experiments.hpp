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


#ifndef FLATPRIOR_EXPERIMENTS_HPP_
#define FLATPRIOR_EXPERIMENTS_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "flatprior/data.hpp"
#include "flatprior/flatness.hpp"
#include "flatprior/gpprior.hpp"
#include "flatprior/network.hpp"
#include "flatprior/optim.hpp"
#include "flatprior/records.hpp"

namespace flatprior {

// ---------------------------------------------------------------------------
// Boolean system: sampled prior over all 2^n inputs vs flatness of SGD fits.

struct BooleanConfig {
  NetworkSpec spec{{7, 40, 40, 1}, 1.0, 0.1};
  BooleanEncoding encoding = BooleanEncoding::kZeroOne;
  std::size_t n_samples = 1'000'000;
  std::size_t top_functions = 100;  // most frequent functions used as SGD targets
  std::size_t n_sgd_runs = 100;     // trainings, assigned round-robin to the targets
  OptimizerConfig optimizer = OptimizerConfig::defaults(OptimizerKind::kSgd);
  TrainOptions train{};
  SharpnessConfig sharpness = SharpnessConfig::boolean_defaults();
  bool spectral = true;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct FunctionTally {
  FunctionFingerprint function;
  std::size_t count = 0;
};

// Frequencies of the functions expressed by n_samples random networks on the
// given inputs, sorted by descending count (ties by bit string). The result
// does not depend on the number of jobs.
std::vector<FunctionTally> sample_function_tally(const NetworkSpec& spec, const InputMatrix& inputs,
                                                 std::size_t n_samples, std::uint64_t seed, int jobs = 1);

struct BooleanResult {
  std::vector<BooleanRecord> records;  // one per target that reached zero error
  std::vector<FunctionTally> tally;    // full sampled tally
  std::size_t total_samples = 0;
  std::size_t skipped_runs = 0;        // trainings that never reached zero error
};

BooleanResult run_boolean(const BooleanConfig& config);

// Single-input perceptron sign(w x + b), w, b ~ N(0, 1), on x in {0, 1}.
// Returns empirical probabilities of the fingerprints (00, 11, 01, 10), bit
// order (f(0), f(1)).
std::array<double, 4> run_perceptron_control(std::size_t n_samples, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Attack-set correlation experiment.

enum class KernelKind { kAnalytic, kEmpirical };

struct PriorConfig {
  KernelKind kernel = KernelKind::kAnalytic;
  std::size_t mc_samples = 0;  // 0: 0.1 * (|S| + |E|), at least 1
  EpOptions ep{};
};

struct CorrelationConfig {
  std::size_t train_size = 100;
  std::size_t test_size = 500;
  std::vector<std::size_t> attack_sizes{0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  int repetitions = 3;
  std::vector<int> hidden{40, 40};
  double sigma_w = 1.0;
  double sigma_b = 0.1;
  OptimizerConfig optimizer = OptimizerConfig::defaults(OptimizerKind::kSgd);
  TrainOptions train{};
  SharpnessConfig sharpness = SharpnessConfig::mnist_defaults();
  bool hessian_metrics = true;  // only when the network fits HessianOptions::max_params
  HessianOptions hessian{};
  std::size_t top_k = 50;
  PriorConfig prior{};
  double bound_delta = 0.05;
  // Extra measurements this many epochs after the first zero-error epoch.
  std::vector<int> overtrain_offsets;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct RunStatus {
  std::string run_id;
  std::size_t attack_size = 0;
  int repetition = 0;
  TrainStatus status = TrainStatus::kNotConverged;
  std::string message;
};

struct CorrelationResult {
  std::vector<ExperimentRecord> records;  // converged runs, sorted by (repetition, attack size, epoch)
  std::vector<RunStatus> runs;            // every run, including non-converged ones
};

CorrelationResult run_correlation(const LabeledSet& full, const CorrelationConfig& config);

struct CorrelationSummary {
  std::size_t points = 0;
  std::optional<double> spearman_prior_error;      // Spearman(-log_prior, test_error)
  std::optional<double> pearson_prior_accuracy;    // Pearson(log_prior, 1 - test_error)
  std::optional<double> spearman_sharpness_error;  // Spearman(sharpness, test_error)
  std::optional<double> spearman_flatness_accuracy;  // Spearman(log flatness, 1 - test_error)
};

// Correlations over records measured at the first zero-error epoch.
CorrelationSummary summarize_correlation(const std::vector<ExperimentRecord>& records);

// ---------------------------------------------------------------------------
// Per-epoch trace with an alpha-rescaling event.

struct TemporalConfig {
  std::size_t train_size = 100;
  std::size_t test_size = 500;
  std::size_t attack_size = 0;
  std::vector<int> hidden{40, 40};
  double sigma_w = 1.0;
  double sigma_b = 0.1;
  OptimizerConfig optimizer = OptimizerConfig::defaults(OptimizerKind::kSgd);
  int total_epochs = 300;
  // Rescaling happens at scale_epoch (0: never), or at the first zero-error
  // epoch plus scale_after_zero_error when that is set.
  int scale_epoch = 200;
  std::optional<int> scale_after_zero_error;
  double alpha = 5.9;
  int scale_layer = 1;
  SharpnessConfig sharpness = SharpnessConfig::mnist_defaults();
  bool measure_prior = true;
  // log_prior is evaluated every prior_every epochs and always on the epochs
  // next to the scaling event; other records leave it empty.
  int prior_every = 1;
  PriorConfig prior{};
  std::uint64_t seed = 0;
};

struct TemporalResult {
  std::vector<ExperimentRecord> records;          // epochs 0..total_epochs
  std::vector<FunctionFingerprint> fingerprints;  // on S+E, per record
  int zero_error_epoch = -1;
  int scale_epoch = -1;  // epoch whose record is the rescaled network; -1 if none
  FunctionFingerprint pre_scale_fingerprint;  // on S+E, just before rescaling
};

// Trains epoch by epoch on S + A. At the scaling epoch the epoch's updates run,
// the parameters are rescaled, and the record is measured on the rescaled
// network; training then continues from it.
TemporalResult run_temporal(const LabeledSet& full, const TemporalConfig& config);

// ---------------------------------------------------------------------------

NetworkSpec make_spec(int input_dim, const std::vector<int>& hidden, double sigma_w, double sigma_b);

// Kernel over ordered inputs per the prior configuration.
KernelMatrix prior_kernel(const InputMatrix& inputs, const NetworkSpec& spec, const PriorConfig& config,
                          std::uint64_t seed);

}  // namespace flatprior

#endif  // FLATPRIOR_EXPERIMENTS_HPP_
