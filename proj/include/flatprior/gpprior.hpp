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

#ifndef FLATPRIOR_GPPRIOR_HPP_
#define FLATPRIOR_GPPRIOR_HPP_

#include <cstddef>
#include <cstdint>

#include "flatprior/network.hpp"

namespace flatprior {

// Covariance of the output pre-activation over a finite ordered input set.
struct KernelMatrix {
  Matrix entries;
  double jitter_applied = 0.0;

  Eigen::Index size() const { return entries.rows(); }
};

// NNGP kernel of a ReLU network with depth hidden layers and weight
// variance sigma_w^2 / fan_in:
//   K0(x, x') = sigma_b^2 + sigma_w^2 x.x' / d
//   K(x, x')  = sigma_b^2 + sigma_w^2 / (2 pi) sqrt(kk') (sin t + (pi - t) cos t)
// applied depth times. No jitter is added. Throws std::invalid_argument for
// a zero-variance diagonal (zero input with sigma_b = 0).
KernelMatrix arccos_kernel(const InputMatrix& inputs, int depth, double sigma_w, double sigma_b);

// Monte Carlo kernel: sigma_w^2 / (M n) sum_m h_m(x_i) . h_m(x_j) + sigma_b^2,
// with h_m the last hidden layer of the m-th freshly sampled network.
KernelMatrix mc_empirical_kernel(const NetworkSpec& spec, const InputMatrix& inputs, std::size_t samples,
                                 std::uint64_t seed, int threads = 1);

// Adds (relative * trace / m) to the diagonal.
KernelMatrix with_jitter(const KernelMatrix& k, double relative = 1e-6);

// Leading count x count block (the training-set kernel in canonical order).
KernelMatrix leading_block(const KernelMatrix& k, Eigen::Index count);

struct EpOptions {
  double tolerance = 1e-6;
  double damping = 0.5;  // weight of the new site value
  int max_sweeps = 200;
  double jitter = 1e-6;  // relative, applied when the kernel has none yet
};

// Expectation Propagation for the Gaussian orthant probability
// P(sign(z_i) = s_i for all i), z ~ N(0, K), s_i = 2 bit_i - 1.
struct EpState {
  Vector site_precisions;  // tau~ >= 0
  Vector site_means;       // nu~ (natural location)
  Vector mean;
  Matrix covariance;
  double log_z = 0.0;
  int sweeps_used = 0;
  bool converged = false;
};

// Sequential damped EP with a Heaviside likelihood. Non-convergence returns the
// last estimate with converged = false; a non-PSD kernel throws std::domain_error.
EpState ep_log_marginal(const KernelMatrix& k, const FunctionFingerprint& bits, const EpOptions& options = {});

// ln P(f): EP log marginal of the fingerprint under the kernel on the same inputs.
double log_prior(const KernelMatrix& k, const FunctionFingerprint& f, const EpOptions& options = {});

// ln P(f | S) = ln P(f) - ln P(S) for a fingerprint on S+E whose first |S|
// bits equal the training labels. Throws std::invalid_argument otherwise.
double log_posterior(const KernelMatrix& k, const FunctionFingerprint& f, const FunctionFingerprint& train_labels,
                     const EpOptions& options = {});

// Same, with ln P(S) precomputed (it is shared by every function on one split).
double log_posterior_given_evidence(double log_prior_value, double log_evidence);

// ln Phi(z), accurate in the far lower tail.
double log_normal_cdf(double z);

}  // namespace flatprior

#endif  // FLATPRIOR_GPPRIOR_HPP_
