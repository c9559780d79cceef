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

#ifndef FLATPRIOR_FLATNESS_HPP_
#define FLATPRIOR_FLATNESS_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "flatprior/network.hpp"
#include "flatprior/objective.hpp"

namespace flatprior {

// Box half-size and the projected-ascent schedule used to estimate the
// maximal loss inside the box.
struct SharpnessConfig {
  double zeta = 1e-4;
  double ascent_lr = 1e-3;
  std::size_t ascent_batch = 32;
  int ascent_epochs = 100;

  static SharpnessConfig boolean_defaults() { return {1e-4, 1e-3, 16, 10}; }
  static SharpnessConfig mnist_defaults() { return {1e-4, 1e-3, 32, 100}; }
  static SharpnessConfig cifar_defaults() { return {1e-5, 5e-5, 128, 100}; }

  void validate() const;
};

struct SharpnessResult {
  double sharpness = 0.0;
  double base_loss = 0.0;
  double max_loss = 0.0;
  // Running maximum of the full-data loss after each ascent epoch.
  std::vector<double> running_max;
};

// Keskar sharpness 100 * (max_{w' in C} L(w') - L(w)) / (1 + L(w)) over the box
// C = { w + d : |d_i| <= zeta (|w_i| + 1) }. The maximum is estimated by
// projected minibatch gradient ascent started from a seeded uniform point in
// the box; the start point, w itself and every epoch end are candidates.
SharpnessResult sharpness_ascent(const Objective& objective, const Vector& w, const SharpnessConfig& config,
                                 std::uint64_t seed);
double sharpness(const Objective& objective, const Vector& w, const SharpnessConfig& config, std::uint64_t seed);
double sharpness(const Params& params, const LabeledSet& data, const SharpnessConfig& config, std::uint64_t seed);

// 1 / sharpness; +infinity for zero sharpness. Throws for negative input.
double flatness(double sharpness_value);

struct HessianOptions {
  double step = 1e-5;
  std::size_t max_params = 20000;
  int threads = 1;
};

struct HessianResult {
  Matrix matrix;  // symmetrized (H + H^T) / 2
  // max |H - H^T| / max |H| before symmetrization
  double relative_asymmetry = 0.0;
};

// Dense Hessian assembled column by column from central differences of the
// analytic gradient. Throws std::invalid_argument above max_params.
HessianResult hessian(const Objective& objective, const Vector& w, const HessianOptions& options = {});
HessianResult hessian(const Params& params, const LabeledSet& data, const HessianOptions& options = {});

struct HessianSpectrum {
  std::vector<double> eigenvalues;  // descending
  std::size_t n_params = 0;
};

HessianSpectrum hessian_spectrum(const Matrix& h);

enum class SpectralMethod { kAuto, kDense, kLanczos };

struct SpectralOptions {
  SpectralMethod method = SpectralMethod::kAuto;
  Eigen::Index dense_limit = 2000;  // kAuto uses the dense solver up to this size
  double tolerance = 1e-10;  // Ritz residual relative to |lambda|
  int max_iterations = 5000;
  std::uint64_t seed = 0;
};

// max |lambda| of a symmetric matrix. The Lanczos route throws
// ConvergenceError when the extreme Ritz values have not settled by the cap.
double spectral_norm(const Matrix& h, const SpectralOptions& options = {});

// Extreme eigenvalues (smallest, largest) of a symmetric matrix by Lanczos
// with full reorthogonalization.
struct ExtremeEigenvalues {
  double smallest = 0.0;
  double largest = 0.0;
  int iterations = 0;
};
ExtremeEigenvalues lanczos_extremes(const Matrix& h, double tolerance, int max_iterations, std::uint64_t seed);

struct LogProduct {
  double value = 0.0;
  std::size_t used = 0;  // number of positive eigenvalues summed (<= k)
};

// Sum of ln(lambda_i) over the k largest positive eigenvalues; fewer are used
// when fewer are positive. Throws std::domain_error if none are positive.
LogProduct top_k_log_product(const HessianSpectrum& spectrum, std::size_t k);
LogProduct top_k_log_product(const Matrix& h, std::size_t k);

}  // namespace flatprior

#endif  // FLATPRIOR_FLATNESS_HPP_
