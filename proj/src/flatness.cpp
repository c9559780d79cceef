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

#include "flatprior/flatness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

#include <Eigen/Eigenvalues>

#include "flatprior/errors.hpp"

namespace flatprior {

void SharpnessConfig::validate() const {
  if (!(zeta > 0.0)) throw std::invalid_argument("zeta must be positive");
  if (!(ascent_lr > 0.0)) throw std::invalid_argument("ascent_lr must be positive");
  if (ascent_batch == 0) throw std::invalid_argument("ascent_batch must be positive");
  if (ascent_epochs < 1) throw std::invalid_argument("ascent_epochs must be positive");
}

SharpnessResult sharpness_ascent(const Objective& objective, const Vector& w, const SharpnessConfig& config,
                                 std::uint64_t seed) {
  config.validate();
  if (w.size() != objective.dimension()) throw std::invalid_argument("parameter vector has the wrong dimension");
  Rng rng(seed);

  const Vector radius = config.zeta * (w.array().abs() + 1.0).matrix();
  const Vector lower = w - radius;
  const Vector upper = w + radius;

  auto checked_loss = [&](const Vector& v) {
    const double l = objective.loss(v);
    if (!std::isfinite(l)) throw NumericalError("non-finite loss during sharpness ascent");
    return l;
  };

  SharpnessResult result;
  result.base_loss = checked_loss(w);
  double best = result.base_loss;

  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vector current(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) current[i] = w[i] + radius[i] * unit(rng);
  best = std::max(best, checked_loss(current));

  const std::size_t n = objective.example_count();
  const std::size_t batch = std::min(config.ascent_batch, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  result.running_max.reserve(static_cast<std::size_t>(config.ascent_epochs));

  for (int epoch = 0; epoch < config.ascent_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      const Vector g = objective.batch_gradient(current, std::span<const std::size_t>(order.data() + start, stop - start));
      if (!g.allFinite()) throw NumericalError("non-finite gradient during sharpness ascent");
      current = (current + config.ascent_lr * g).cwiseMax(lower).cwiseMin(upper);
    }
    best = std::max(best, checked_loss(current));
    result.running_max.push_back(best);
  }

  result.max_loss = best;
  result.sharpness = 100.0 * (best - result.base_loss) / (1.0 + result.base_loss);
  return result;
}

double sharpness(const Objective& objective, const Vector& w, const SharpnessConfig& config, std::uint64_t seed) {
  return sharpness_ascent(objective, w, config, seed).sharpness;
}

double sharpness(const Params& params, const LabeledSet& data, const SharpnessConfig& config, std::uint64_t seed) {
  NetworkObjective objective(params, data);
  return sharpness(objective, params.flatten(), config, seed);
}

double flatness(double sharpness_value) {
  if (std::isnan(sharpness_value) || sharpness_value < 0.0) {
    throw std::invalid_argument("sharpness must be non-negative");
  }
  if (sharpness_value == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / sharpness_value;
}

HessianResult hessian(const Objective& objective, const Vector& w, const HessianOptions& options) {
  const Eigen::Index n = objective.dimension();
  if (static_cast<std::size_t>(n) > options.max_params) {
    throw std::invalid_argument("Hessian of " + std::to_string(n) + " parameters exceeds the cap of " +
                                std::to_string(options.max_params));
  }
  if (!(options.step > 0.0)) throw std::invalid_argument("Hessian step must be positive");
  Matrix raw(n, n);

  auto columns = [&](Eigen::Index begin, Eigen::Index end) {
    Vector probe = w;
    for (Eigen::Index j = begin; j < end; ++j) {
      probe[j] = w[j] + options.step;
      const Vector plus = objective.gradient(probe);
      probe[j] = w[j] - options.step;
      const Vector minus = objective.gradient(probe);
      probe[j] = w[j];
      raw.col(j) = (plus - minus) / (2.0 * options.step);
    }
  };

  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(n)));
  if (threads == 1) {
    columns(0, n);
  } else {
    std::vector<std::thread> pool;
    const Eigen::Index chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const Eigen::Index begin = t * chunk;
      const Eigen::Index end = std::min(n, begin + chunk);
      if (begin < end) pool.emplace_back(columns, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  if (!raw.allFinite()) throw NumericalError("non-finite Hessian entry");

  HessianResult result;
  const double scale = raw.cwiseAbs().maxCoeff();
  const double asym = (raw - raw.transpose()).cwiseAbs().maxCoeff();
  result.relative_asymmetry = scale > 0.0 ? asym / scale : 0.0;
  result.matrix = 0.5 * (raw + raw.transpose());
  return result;
}

HessianResult hessian(const Params& params, const LabeledSet& data, const HessianOptions& options) {
  NetworkObjective objective(params, data);
  return hessian(objective, params.flatten(), options);
}

HessianSpectrum hessian_spectrum(const Matrix& h) {
  if (h.rows() != h.cols()) throw std::invalid_argument("Hessian must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ConvergenceError("dense symmetric eigensolver failed");
  HessianSpectrum spectrum;
  spectrum.n_params = static_cast<std::size_t>(h.rows());
  const Vector& ev = solver.eigenvalues();
  spectrum.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  std::sort(spectrum.eigenvalues.begin(), spectrum.eigenvalues.end(), std::greater<>());
  return spectrum;
}

ExtremeEigenvalues lanczos_extremes(const Matrix& h, double tolerance, int max_iterations, std::uint64_t seed) {
  const Eigen::Index n = h.rows();
  if (n == 0 || h.cols() != n) throw std::invalid_argument("Lanczos needs a non-empty square matrix");
  const Eigen::Index cap = std::min<Eigen::Index>(n, std::max(1, max_iterations));

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector q(n);
  for (Eigen::Index i = 0; i < n; ++i) q[i] = normal(rng);
  q.normalize();

  Matrix basis(n, cap);
  std::vector<double> alpha;
  std::vector<double> beta;
  ExtremeEigenvalues out;

  for (Eigen::Index j = 0; j < cap; ++j) {
    basis.col(j) = q;
    Vector v = h * q;
    alpha.push_back(q.dot(v));
    // Two passes of classical Gram-Schmidt against the whole basis.
    for (int pass = 0; pass < 2; ++pass) {
      const auto active = basis.leftCols(j + 1);
      v.noalias() -= active * (active.transpose() * v);
    }
    const double b = v.norm();

    const auto m = static_cast<Eigen::Index>(alpha.size());
    Vector diag = Eigen::Map<Vector>(alpha.data(), m);
    Vector sub = m > 1 ? Vector(Eigen::Map<Vector>(beta.data(), m - 1)) : Vector();
    Eigen::SelfAdjointEigenSolver<Matrix> tri;
    tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    const Vector& theta = tri.eigenvalues();
    const double lo = theta[0];
    const double hi = theta[m - 1];
    const double res_lo = b * std::abs(tri.eigenvectors()(m - 1, 0));
    const double res_hi = b * std::abs(tri.eigenvectors()(m - 1, m - 1));
    const double scale = std::max({std::abs(lo), std::abs(hi), std::numeric_limits<double>::min()});

    out = {lo, hi, static_cast<int>(j + 1)};
    const bool exhausted = j + 1 == n || b <= std::numeric_limits<double>::epsilon() * scale;
    if (exhausted || (res_lo <= tolerance * scale && res_hi <= tolerance * scale)) return out;

    beta.push_back(b);
    q = v / b;
  }
  throw ConvergenceError("Lanczos did not converge in " + std::to_string(cap) + " iterations");
}

double spectral_norm(const Matrix& h, const SpectralOptions& options) {
  if (h.rows() != h.cols() || h.rows() == 0) throw std::invalid_argument("spectral norm needs a non-empty square matrix");
  const bool dense = options.method == SpectralMethod::kDense ||
                     (options.method == SpectralMethod::kAuto && h.rows() <= options.dense_limit);
  if (dense) {
    const HessianSpectrum s = hessian_spectrum(h);
    return std::max(std::abs(s.eigenvalues.front()), std::abs(s.eigenvalues.back()));
  }
  const ExtremeEigenvalues e = lanczos_extremes(h, options.tolerance, options.max_iterations, options.seed);
  return std::max(std::abs(e.smallest), std::abs(e.largest));
}

LogProduct top_k_log_product(const HessianSpectrum& spectrum, std::size_t k) {
  LogProduct out;
  for (double lambda : spectrum.eigenvalues) {
    if (out.used == k || !(lambda > 0.0)) break;
    out.value += std::log(lambda);
    ++out.used;
  }
  if (out.used == 0) throw std::domain_error("no positive eigenvalues for the log product");
  return out;
}

LogProduct top_k_log_product(const Matrix& h, std::size_t k) { return top_k_log_product(hessian_spectrum(h), k); }

}  // namespace flatprior
