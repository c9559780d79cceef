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

#ifndef FLATPRIOR_NETWORK_HPP_
#define FLATPRIOR_NETWORK_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace flatprior {

using Rng = std::mt19937_64;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Example-major input storage: one row per example.
using InputMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Architecture of a fully connected ReLU binary classifier.
struct NetworkSpec {
  std::vector<int> layer_sizes;  // input, hidden..., output (= 1)
  double sigma_w = 1.0;
  double sigma_b = 0.1;

  int input_dim() const { return layer_sizes.front(); }
  int hidden_layers() const { return static_cast<int>(layer_sizes.size()) - 2; }
  int weight_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  std::size_t parameter_count() const;

  // Throws std::invalid_argument when the architecture is not a valid
  // single-output ReLU network with at least one hidden layer.
  void validate() const;
};

// Per-layer weights W_l (fan_out x fan_in) and biases b_l (fan_out).
struct Params {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  std::size_t size() const;
  int weight_layers() const { return static_cast<int>(weights.size()); }
  int input_dim() const { return static_cast<int>(weights.front().cols()); }

  // Flattening order: W_1 (column-major), b_1, W_2, b_2, ...
  Vector flatten() const;
  void assign(const Vector& flat);
  Params with_values(const Vector& flat) const;

  bool all_finite() const;
  bool operator==(const Params& other) const;
};

// Restriction of a classifier to an ordered input list: one label bit per input.
class FunctionFingerprint {
 public:
  FunctionFingerprint() = default;
  explicit FunctionFingerprint(std::size_t length);

  static FunctionFingerprint from_bits(std::span<const std::uint8_t> bits);
  // Accepts a string of '0' and '1' characters; whitespace is skipped.
  static FunctionFingerprint parse(std::string_view text);

  std::size_t size() const { return length_; }
  bool get(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }
  void set(std::size_t i, bool value);
  std::size_t count_ones() const;

  FunctionFingerprint complement() const;
  // First `count` bits.
  FunctionFingerprint prefix(std::size_t count) const;
  std::vector<std::uint8_t> to_bits() const;
  std::string to_string() const;

  bool operator==(const FunctionFingerprint& other) const = default;
  std::size_t hash() const;

 private:
  std::size_t length_ = 0;
  std::vector<std::uint64_t> words_;
};

struct FingerprintHash {
  std::size_t operator()(const FunctionFingerprint& f) const { return f.hash(); }
};

// Inputs (one row per example) with one binary label per row.
struct LabeledSet {
  InputMatrix inputs;
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  int input_dim() const { return static_cast<int>(inputs.cols()); }

  void validate() const;
  LabeledSet subset(std::span<const std::size_t> rows) const;
  static LabeledSet concat(const LabeledSet& a, const LabeledSet& b);
  FunctionFingerprint label_fingerprint() const;
};

inline constexpr double kProbabilityClamp = 1e-12;

// W_l ~ N(0, sigma_w^2 / fan_in), b_l ~ N(0, sigma_b^2); deterministic in seed.
Params init_params(const NetworkSpec& spec, std::uint64_t seed);

// Draws parameters from a caller-owned engine (used by samplers that draw
// many networks from one stream).
Params sample_params(const NetworkSpec& spec, Rng& rng);

Params zero_params(const NetworkSpec& spec);

// Pre-activation of the output unit.
double forward(const Params& params, std::span<const double> x);
// Output pre-activations for every row of `inputs`.
Vector forward_batch(const Params& params, const InputMatrix& inputs);
// Activations of the last hidden layer, one column per input row.
Matrix last_hidden_activations(const Params& params, const InputMatrix& inputs);

double logistic(double z);

// Mean binary cross-entropy with sigma(z) clamped to [1e-12, 1 - 1e-12].
double loss_ce(const Params& params, const LabeledSet& data);
double loss_ce(const Params& params, const LabeledSet& data, std::span<const std::size_t> rows);

// Gradient of loss_ce by backpropagation, over all rows or a minibatch.
Params grad(const Params& params, const LabeledSet& data);
Params grad(const Params& params, const LabeledSet& data, std::span<const std::size_t> rows);

// Label 1 iff output pre-activation z >= 0.
std::vector<std::uint8_t> predict_labels(const Params& params, const InputMatrix& inputs);
FunctionFingerprint fingerprint(const Params& params, const InputMatrix& ordered_inputs);

double classification_error(const Params& params, const LabeledSet& data);
// Fraction of positions where the two equal-length bit vectors differ.
double mismatch_fraction(const FunctionFingerprint& predicted, const FunctionFingerprint& truth);

}  // namespace flatprior

#endif  // FLATPRIOR_NETWORK_HPP_
