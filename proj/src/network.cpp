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

#include "flatprior/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace flatprior {

namespace {

// Column-major copy of the selected rows, one column per example.
Matrix gather_columns(const InputMatrix& inputs, std::span<const std::size_t> rows) {
  Matrix out(inputs.cols(), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = inputs.row(static_cast<Eigen::Index>(rows[j])).transpose();
  }
  return out;
}

void check_input_dim(const Params& params, Eigen::Index dim) {
  if (params.weights.empty()) throw std::invalid_argument("params have no layers");
  if (params.weights.front().cols() != dim) {
    throw std::invalid_argument("input dimension " + std::to_string(dim) + " does not match network input " +
                                std::to_string(params.weights.front().cols()));
  }
}

// Forward pass keeping every layer's pre-activation; columns are examples.
std::vector<Matrix> forward_trace(const Params& params, const Matrix& columns) {
  std::vector<Matrix> pre;
  pre.reserve(params.weights.size());
  const int layers = params.weight_layers();
  Matrix activation = columns;
  for (int l = 0; l < layers; ++l) {
    Matrix z = params.weights[l] * activation;
    z.colwise() += params.biases[l];
    if (l + 1 < layers) activation = z.cwiseMax(0.0);
    pre.push_back(std::move(z));
  }
  return pre;
}

// -log sigma(t) without forming sigma, so tiny losses keep full relative precision.
double softplus_neg(double t) { return t > 0.0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t)); }

double example_loss(double z, std::uint8_t label) {
  // Clamping sigma to [eps, 1 - eps] is the same as clamping the loss to
  // [-log(1 - eps), -log(eps)], since the loss is monotone in sigma.
  static const double lo = -std::log1p(-kProbabilityClamp);
  static const double hi = -std::log(kProbabilityClamp);
  return std::clamp(softplus_neg(label ? z : -z), lo, hi);
}

Params backprop(const Params& params, const Matrix& columns, std::span<const std::uint8_t> labels) {
  const int layers = params.weight_layers();
  const auto count = static_cast<double>(labels.size());
  std::vector<Matrix> pre = forward_trace(params, columns);

  Params g;
  g.weights.resize(layers);
  g.biases.resize(layers);

  // d loss / d z_out. The clamp only bounds the reported loss; the gradient
  // keeps the logistic slope so saturated mistakes still get corrected.
  Matrix delta(1, columns.cols());
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    delta(0, j) = (logistic(pre.back()(0, j)) - labels[static_cast<std::size_t>(j)]) / count;
  }
  for (int l = layers - 1; l >= 0; --l) {
    if (l == 0) {
      g.weights[0].noalias() = delta * columns.transpose();
    } else {
      g.weights[l].noalias() = delta * pre[l - 1].cwiseMax(0.0).transpose();
    }
    g.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      Matrix back = params.weights[l].transpose() * delta;
      delta = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return g;
}

}  // namespace

std::size_t NetworkSpec::parameter_count() const {
  std::size_t total = 0;
  for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
    total += static_cast<std::size_t>(layer_sizes[l]) * (static_cast<std::size_t>(layer_sizes[l - 1]) + 1);
  }
  return total;
}

void NetworkSpec::validate() const {
  if (layer_sizes.size() < 3) throw std::invalid_argument("network needs an input, a hidden and an output layer");
  for (int s : layer_sizes) {
    if (s <= 0) throw std::invalid_argument("layer sizes must be positive");
  }
  if (layer_sizes.back() != 1) throw std::invalid_argument("output layer must have exactly one unit");
  if (!(sigma_w > 0.0)) throw std::invalid_argument("sigma_w must be positive");
  if (!(sigma_b >= 0.0)) throw std::invalid_argument("sigma_b must be non-negative");
}

std::size_t Params::size() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    total += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return total;
}

Vector Params::flatten() const {
  Vector flat(static_cast<Eigen::Index>(size()));
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.segment(at, weights[l].size()) = weights[l].reshaped();
    at += weights[l].size();
    flat.segment(at, biases[l].size()) = biases[l];
    at += biases[l].size();
  }
  return flat;
}

void Params::assign(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != size()) throw std::invalid_argument("flat parameter size mismatch");
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l].reshaped() = flat.segment(at, weights[l].size());
    at += weights[l].size();
    biases[l] = flat.segment(at, biases[l].size());
    at += biases[l].size();
  }
}

Params Params::with_values(const Vector& flat) const {
  Params out = *this;
  out.assign(flat);
  return out;
}

bool Params::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  }
  return true;
}

bool Params::operator==(const Params& other) const {
  if (weights.size() != other.weights.size()) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != other.weights[l].rows() || weights[l].cols() != other.weights[l].cols()) return false;
    if (weights[l] != other.weights[l] || biases[l] != other.biases[l]) return false;
  }
  return true;
}

FunctionFingerprint::FunctionFingerprint(std::size_t length) : length_(length), words_((length + 63) / 64, 0) {}

FunctionFingerprint FunctionFingerprint::from_bits(std::span<const std::uint8_t> bits) {
  FunctionFingerprint f(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] > 1) throw std::invalid_argument("fingerprint bits must be 0 or 1");
    f.set(i, bits[i] != 0);
  }
  return f;
}

FunctionFingerprint FunctionFingerprint::parse(std::string_view text) {
  std::vector<std::uint8_t> bits;
  for (char c : text) {
    if (c == '0' || c == '1') {
      bits.push_back(static_cast<std::uint8_t>(c - '0'));
    } else if (c != ' ' && c != '\n' && c != '\r' && c != '\t') {
      throw std::invalid_argument(std::string("invalid fingerprint character '") + c + "'");
    }
  }
  return from_bits(bits);
}

void FunctionFingerprint::set(std::size_t i, bool value) {
  const std::uint64_t mask = std::uint64_t{1} << (i % 64);
  if (value) {
    words_[i / 64] |= mask;
  } else {
    words_[i / 64] &= ~mask;
  }
}

std::size_t FunctionFingerprint::count_ones() const {
  std::size_t n = 0;
  for (std::uint64_t w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

FunctionFingerprint FunctionFingerprint::complement() const {
  FunctionFingerprint out(length_);
  for (std::size_t i = 0; i < length_; ++i) out.set(i, !get(i));
  return out;
}

FunctionFingerprint FunctionFingerprint::prefix(std::size_t count) const {
  if (count > length_) throw std::invalid_argument("fingerprint prefix longer than fingerprint");
  FunctionFingerprint out(count);
  for (std::size_t i = 0; i < count; ++i) out.set(i, get(i));
  return out;
}

std::vector<std::uint8_t> FunctionFingerprint::to_bits() const {
  std::vector<std::uint8_t> bits(length_);
  for (std::size_t i = 0; i < length_; ++i) bits[i] = get(i) ? 1 : 0;
  return bits;
}

std::string FunctionFingerprint::to_string() const {
  std::string s(length_, '0');
  for (std::size_t i = 0; i < length_; ++i) {
    if (get(i)) s[i] = '1';
  }
  return s;
}

std::size_t FunctionFingerprint::hash() const {
  // splitmix64-style mixing over the packed words
  std::uint64_t h = 0x9e3779b97f4a7c15ull ^ length_;
  for (std::uint64_t w : words_) {
    h ^= w + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
    h ^= h >> 31;
  }
  return static_cast<std::size_t>(h);
}

void LabeledSet::validate() const {
  if (static_cast<std::size_t>(inputs.rows()) != labels.size()) {
    throw std::invalid_argument("input rows (" + std::to_string(inputs.rows()) + ") != label count (" +
                                std::to_string(labels.size()) + ")");
  }
  for (std::uint8_t y : labels) {
    if (y > 1) throw std::invalid_argument("labels must be 0 or 1");
  }
}

LabeledSet LabeledSet::subset(std::span<const std::size_t> rows) const {
  LabeledSet out;
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
  out.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.inputs.row(static_cast<Eigen::Index>(i)) = inputs.row(static_cast<Eigen::Index>(rows[i]));
    out.labels[i] = labels[rows[i]];
  }
  return out;
}

LabeledSet LabeledSet::concat(const LabeledSet& a, const LabeledSet& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.inputs.cols() != b.inputs.cols()) throw std::invalid_argument("cannot concatenate sets of different dimension");
  LabeledSet out;
  out.inputs.resize(a.inputs.rows() + b.inputs.rows(), a.inputs.cols());
  out.inputs << a.inputs, b.inputs;
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

FunctionFingerprint LabeledSet::label_fingerprint() const { return FunctionFingerprint::from_bits(labels); }

Params sample_params(const NetworkSpec& spec, Rng& rng) {
  spec.validate();
  std::normal_distribution<double> normal(0.0, 1.0);
  Params p;
  for (std::size_t l = 1; l < spec.layer_sizes.size(); ++l) {
    const int fan_in = spec.layer_sizes[l - 1];
    const int fan_out = spec.layer_sizes[l];
    const double w_std = spec.sigma_w / std::sqrt(static_cast<double>(fan_in));
    Matrix w(fan_out, fan_in);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = w_std * normal(rng);
    Vector b(fan_out);
    if (spec.sigma_b > 0.0) {
      for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = spec.sigma_b * normal(rng);
    } else {
      b.setZero();
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  return p;
}

Params init_params(const NetworkSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  return sample_params(spec, rng);
}

Params zero_params(const NetworkSpec& spec) {
  spec.validate();
  Params p;
  for (std::size_t l = 1; l < spec.layer_sizes.size(); ++l) {
    p.weights.push_back(Matrix::Zero(spec.layer_sizes[l], spec.layer_sizes[l - 1]));
    p.biases.push_back(Vector::Zero(spec.layer_sizes[l]));
  }
  return p;
}

double forward(const Params& params, std::span<const double> x) {
  check_input_dim(params, static_cast<Eigen::Index>(x.size()));
  Vector a = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
  const int layers = params.weight_layers();
  for (int l = 0; l < layers; ++l) {
    Vector z = params.weights[l] * a + params.biases[l];
    a = (l + 1 < layers) ? Vector(z.cwiseMax(0.0)) : z;
  }
  return a[0];
}

Vector forward_batch(const Params& params, const InputMatrix& inputs) {
  check_input_dim(params, inputs.cols());
  const int layers = params.weight_layers();
  Matrix a = inputs.transpose();
  for (int l = 0; l < layers; ++l) {
    Matrix z = params.weights[l] * a;
    z.colwise() += params.biases[l];
    a = (l + 1 < layers) ? Matrix(z.cwiseMax(0.0)) : std::move(z);
  }
  return a.row(0).transpose();
}

Matrix last_hidden_activations(const Params& params, const InputMatrix& inputs) {
  check_input_dim(params, inputs.cols());
  Matrix a = inputs.transpose();
  for (int l = 0; l + 1 < params.weight_layers(); ++l) {
    Matrix z = params.weights[l] * a;
    z.colwise() += params.biases[l];
    a = z.cwiseMax(0.0);
  }
  return a;
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double loss_ce(const Params& params, const LabeledSet& data) {
  if (data.empty()) throw std::invalid_argument("loss of an empty data set");
  const Vector z = forward_batch(params, data.inputs);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) total += example_loss(z[static_cast<Eigen::Index>(i)], data.labels[i]);
  return total / static_cast<double>(data.size());
}

double loss_ce(const Params& params, const LabeledSet& data, std::span<const std::size_t> rows) {
  if (rows.empty()) throw std::invalid_argument("loss of an empty batch");
  check_input_dim(params, data.inputs.cols());
  const std::vector<Matrix> pre = forward_trace(params, gather_columns(data.inputs, rows));
  double total = 0.0;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    total += example_loss(pre.back()(0, static_cast<Eigen::Index>(j)), data.labels[rows[j]]);
  }
  return total / static_cast<double>(rows.size());
}

Params grad(const Params& params, const LabeledSet& data) {
  if (data.empty()) throw std::invalid_argument("gradient of an empty data set");
  check_input_dim(params, data.inputs.cols());
  return backprop(params, data.inputs.transpose(), data.labels);
}

Params grad(const Params& params, const LabeledSet& data, std::span<const std::size_t> rows) {
  if (rows.empty()) throw std::invalid_argument("gradient of an empty batch");
  check_input_dim(params, data.inputs.cols());
  std::vector<std::uint8_t> labels(rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j) labels[j] = data.labels[rows[j]];
  return backprop(params, gather_columns(data.inputs, rows), labels);
}

std::vector<std::uint8_t> predict_labels(const Params& params, const InputMatrix& inputs) {
  const Vector z = forward_batch(params, inputs);
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) bits[static_cast<std::size_t>(i)] = z[i] >= 0.0 ? 1 : 0;
  return bits;
}

FunctionFingerprint fingerprint(const Params& params, const InputMatrix& ordered_inputs) {
  return FunctionFingerprint::from_bits(predict_labels(params, ordered_inputs));
}

double classification_error(const Params& params, const LabeledSet& data) {
  if (data.empty()) throw std::invalid_argument("classification error of an empty data set");
  return mismatch_fraction(fingerprint(params, data.inputs), data.label_fingerprint());
}

double mismatch_fraction(const FunctionFingerprint& predicted, const FunctionFingerprint& truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("fingerprint length mismatch");
  if (truth.size() == 0) throw std::invalid_argument("empty fingerprint");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) wrong += predicted.get(i) != truth.get(i) ? 1 : 0;
  return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

}  // namespace flatprior
