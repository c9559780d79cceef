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


#include "flatprior/gpprior.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Cholesky>

namespace flatprior {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // ln sqrt(2 pi)

double log_normal_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

// phi(z) / Phi(z), the inverse Mills ratio of the lower tail.
double pdf_over_cdf(double z) { return std::exp(log_normal_pdf(z) - log_normal_cdf(z)); }

// Posterior moments and cavity quantities from the current site parameters,
// recomputed from scratch through B = I + S^1/2 K S^1/2.
struct Recomputed {
  Matrix covariance;
  Vector mean;
  Eigen::LLT<Matrix> chol;
};

Recomputed recompute(const Matrix& k, const Vector& tau, const Vector& nu) {
  const Eigen::Index m = k.rows();
  const Vector sw = tau.cwiseSqrt();
  Matrix b = sw.asDiagonal() * k * sw.asDiagonal();
  b.diagonal().array() += 1.0;
  Recomputed r;
  r.chol.compute(b);
  if (r.chol.info() != Eigen::Success) throw std::domain_error("EP: I + S^1/2 K S^1/2 is not positive definite");
  Matrix v = sw.asDiagonal() * k;
  r.chol.matrixL().solveInPlace(v);
  r.covariance = k - v.transpose() * v;
  r.covariance = 0.5 * (r.covariance + r.covariance.transpose());
  r.mean = r.covariance * nu;
  (void)m;
  return r;
}

}  // namespace

double log_normal_cdf(double z) {
  if (z > -8.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
  // Asymptotic series Phi(z) ~ phi(z)/(-z) (1 - 1/z^2 + 3/z^4 - 15/z^6 + 105/z^8).
  const double z2 = 1.0 / (z * z);
  const double series = 1.0 - z2 * (1.0 - 3.0 * z2 * (1.0 - 5.0 * z2 * (1.0 - 7.0 * z2)));
  return log_normal_pdf(z) - std::log(-z) + std::log(series);
}

KernelMatrix arccos_kernel(const InputMatrix& inputs, int depth, double sigma_w, double sigma_b) {
  if (inputs.rows() < 1) throw std::invalid_argument("kernel needs at least one input");
  if (depth < 1) throw std::invalid_argument("kernel depth must be at least 1");
  if (!(sigma_w > 0.0) || !(sigma_b >= 0.0)) throw std::invalid_argument("need sigma_w > 0 and sigma_b >= 0");
  const double sw2 = sigma_w * sigma_w;
  const double sb2 = sigma_b * sigma_b;
  const auto d = static_cast<double>(inputs.cols());
  const Eigen::Index m = inputs.rows();

  Matrix k = (sw2 / d) * (inputs * inputs.transpose());
  k.array() += sb2;

  for (int layer = 0; layer < depth; ++layer) {
    const Vector diag = k.diagonal();
    if ((diag.array() <= 0.0).any()) {
      throw std::invalid_argument("kernel diagonal is zero (zero-norm input with sigma_b = 0)");
    }
    Matrix next(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      next(j, j) = sb2 + 0.5 * sw2 * diag[j];
      for (Eigen::Index i = j + 1; i < m; ++i) {
        const double norm = std::sqrt(diag[i] * diag[j]);
        const double c = std::clamp(k(i, j) / norm, -1.0, 1.0);
        const double theta = std::acos(c);
        const double v = sb2 + sw2 / (2.0 * std::numbers::pi) * norm *
                                   (std::sin(theta) + (std::numbers::pi - theta) * c);
        next(i, j) = v;
        next(j, i) = v;
      }
    }
    k = std::move(next);
  }
  if ((k.diagonal().array() <= 0.0).any()) throw std::invalid_argument("kernel diagonal is zero");
  return KernelMatrix{std::move(k), 0.0};
}

KernelMatrix mc_empirical_kernel(const NetworkSpec& spec, const InputMatrix& inputs, std::size_t samples,
                                 std::uint64_t seed, int threads) {
  spec.validate();
  if (samples < 1) throw std::invalid_argument("Monte Carlo kernel needs at least one sample");
  if (inputs.cols() != spec.input_dim()) throw std::invalid_argument("input dimension does not match the network");
  const Eigen::Index m = inputs.rows();
  const auto width = static_cast<double>(spec.layer_sizes[spec.layer_sizes.size() - 2]);

  // Fixed chunking keeps the result independent of the thread count.
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (samples + kChunk - 1) / kChunk;
  std::vector<Matrix> partial(chunks, Matrix::Zero(m, m));

  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t c = first; c < chunks; c += stride) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
      Rng rng(seq);
      const std::size_t stop = std::min(samples, (c + 1) * kChunk);
      for (std::size_t s = c * kChunk; s < stop; ++s) {
        const Matrix h = last_hidden_activations(sample_params(spec, rng), inputs);
        partial[c].noalias() += h.transpose() * h;
      }
    }
  };
  const int t = std::max(1, threads);
  if (t == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < t; ++i) pool.emplace_back(work, static_cast<std::size_t>(i), static_cast<std::size_t>(t));
    for (auto& th : pool) th.join();
  }

  Matrix total = Matrix::Zero(m, m);
  for (const Matrix& p : partial) total += p;
  const double sw2 = spec.sigma_w * spec.sigma_w;
  Matrix k = (sw2 / (static_cast<double>(samples) * width)) * total;
  k.array() += spec.sigma_b * spec.sigma_b;
  k = 0.5 * (k + k.transpose());
  return KernelMatrix{std::move(k), 0.0};
}

KernelMatrix with_jitter(const KernelMatrix& k, double relative) {
  KernelMatrix out = k;
  const double amount = relative * k.entries.trace() / static_cast<double>(std::max<Eigen::Index>(1, k.size()));
  out.entries.diagonal().array() += amount;
  out.jitter_applied += amount;
  return out;
}

KernelMatrix leading_block(const KernelMatrix& k, Eigen::Index count) {
  if (count < 0 || count > k.size()) throw std::invalid_argument("leading block larger than the kernel");
  return KernelMatrix{k.entries.topLeftCorner(count, count), k.jitter_applied};
}

EpState ep_log_marginal(const KernelMatrix& kernel, const FunctionFingerprint& bits, const EpOptions& options) {
  const Eigen::Index m = kernel.size();
  if (kernel.entries.cols() != m) throw std::invalid_argument("kernel must be square");
  if (static_cast<std::size_t>(m) != bits.size()) {
    throw std::invalid_argument("kernel size " + std::to_string(m) + " does not match fingerprint length " +
                                std::to_string(bits.size()));
  }
  EpState state;
  if (m == 0) {
    state.converged = true;
    return state;
  }
  const KernelMatrix jittered = kernel.jitter_applied > 0.0 ? kernel : with_jitter(kernel, options.jitter);
  const Matrix& k = jittered.entries;
  if (Eigen::LLT<Matrix>(k).info() != Eigen::Success) throw std::domain_error("kernel is not positive definite");

  Vector sign(m);
  for (Eigen::Index i = 0; i < m; ++i) sign[i] = bits.get(static_cast<std::size_t>(i)) ? 1.0 : -1.0;

  Vector tau = Vector::Zero(m);
  Vector nu = Vector::Zero(m);
  Matrix sigma = k;
  Vector mu = Vector::Zero(m);
  const double d = options.damping;

  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double tau_cav = 1.0 / sigma(i, i) - tau[i];
      const double nu_cav = mu[i] / sigma(i, i) - nu[i];
      if (!(tau_cav > 0.0)) continue;
      const double var_cav = 1.0 / tau_cav;
      const double sd_cav = std::sqrt(var_cav);
      const double mean_cav = nu_cav * var_cav;

      const double z = sign[i] * mean_cav / sd_cav;
      const double r = pdf_over_cdf(z);
      const double mean_hat = mean_cav + sign[i] * sd_cav * r;
      const double shrink = std::max(1.0 - r * (z + r), 1e-14);
      const double var_hat = var_cav * shrink;

      const double tau_new = std::max(0.0, d * (1.0 / var_hat - tau_cav) + (1.0 - d) * tau[i]);
      const double nu_new = d * (mean_hat / var_hat - nu_cav) + (1.0 - d) * nu[i];
      const double dtau = tau_new - tau[i];
      const double dnu = nu_new - nu[i];
      max_change = std::max({max_change, std::abs(dtau), std::abs(dnu)});
      tau[i] = tau_new;
      nu[i] = nu_new;

      // Rank-one updates of the posterior covariance and mean (mu = sigma nu).
      const Vector si = sigma.col(i);
      const double c = dtau / (1.0 + dtau * si[i]);
      mu += (dnu * (1.0 - c * si[i]) - c * mu[i]) * si;
      sigma.selfadjointView<Eigen::Lower>().rankUpdate(si, -c);
      sigma.triangularView<Eigen::StrictlyUpper>() = sigma.transpose();
    }
    const Recomputed r = recompute(k, tau, nu);
    sigma = r.covariance;
    mu = r.mean;
    state.sweeps_used = sweep + 1;
    if (max_change < options.tolerance) {
      state.converged = true;
      break;
    }
  }

  const Recomputed r = recompute(k, tau, nu);
  const Vector dsig = r.covariance.diagonal();
  const Vector tau_n = dsig.cwiseInverse() - tau;
  const Vector nu_n = r.mean.cwiseQuotient(dsig) - nu;

  double log_l = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) log_l += std::log(r.chol.matrixLLT()(i, i));
  double sum_lz = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) sum_lz += log_normal_cdf(sign[i] * nu_n[i] / std::sqrt(tau_n[i]));

  const double quad = nu.dot(r.covariance * nu);
  const Vector ratio = tau.cwiseQuotient(tau_n);
  const double cross = nu_n.dot((ratio.cwiseProduct(nu_n) - 2.0 * nu).cwiseQuotient(tau_n + tau));
  const double site_norm = nu.cwiseAbs2().cwiseQuotient(tau_n + tau).sum();
  const double log_det_sites = (tau.cwiseQuotient(tau_n).array() + 1.0).log().sum();
  const double neg_log_z = log_l - sum_lz - 0.5 * quad - 0.5 * cross + 0.5 * site_norm - 0.5 * log_det_sites;

  state.site_precisions = tau;
  state.site_means = nu;
  state.mean = r.mean;
  state.covariance = r.covariance;
  state.log_z = -neg_log_z;
  return state;
}

double log_prior(const KernelMatrix& k, const FunctionFingerprint& f, const EpOptions& options) {
  return ep_log_marginal(k, f, options).log_z;
}

double log_posterior(const KernelMatrix& k, const FunctionFingerprint& f, const FunctionFingerprint& train_labels,
                     const EpOptions& options) {
  if (train_labels.size() > f.size()) throw std::invalid_argument("training labels longer than the fingerprint");
  if (f.prefix(train_labels.size()) != train_labels) {
    throw std::invalid_argument("function does not fit the training labels; its posterior is zero");
  }
  if (train_labels.size() == f.size()) return 0.0;
  const KernelMatrix ks = leading_block(k, static_cast<Eigen::Index>(train_labels.size()));
  return log_posterior_given_evidence(log_prior(k, f, options), log_prior(ks, train_labels, options));
}

double log_posterior_given_evidence(double log_prior_value, double log_evidence) {
  return log_prior_value - log_evidence;
}

}  // namespace flatprior
