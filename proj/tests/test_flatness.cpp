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


#include <cmath>
#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "flatprior/errors.hpp"
#include "flatprior/flatness.hpp"
#include "oracles.hpp"

using namespace flatprior;

namespace {

Matrix random_symmetric(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = normal(rng);
  return 0.5 * (m + m.transpose());
}

LabeledSet random_set(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  LabeledSet s;
  s.inputs.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) s.inputs(i, j) = normal(rng);
  for (int i = 0; i < n; ++i) s.labels.push_back(static_cast<std::uint8_t>(rng() & 1u));
  return s;
}

SharpnessConfig quad_config(double zeta) { return {zeta, 0.1, 1, 200}; }

}  // namespace

TEST_CASE("sharpness of quadratics at the origin") {
  Matrix one(1, 1);
  one << 2.0;  // L = w^2
  QuadraticObjective q1(one);
  CHECK(sharpness(q1, Vector::Zero(1), quad_config(0.1), 0) == doctest::Approx(1.0).epsilon(1e-9));

  Matrix two = 2.0 * Matrix::Identity(2, 2);  // L = w1^2 + w2^2
  QuadraticObjective q2(two);
  const Vector origin = Vector::Zero(2);
  const double grid = oracle::grid_box_max([&](const Vector& v) { return q2.loss(v); }, origin,
                                           Vector::Constant(2, 0.1), 201);
  const double s = sharpness(q2, origin, quad_config(0.1), 3);
  CHECK(grid == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(s == doctest::Approx(100.0 * grid).epsilon(1e-9));
}

TEST_CASE("box radius scales with |w| + 1") {
  Matrix one(1, 1);
  one << 2.0;
  QuadraticObjective q(one);
  Vector w(1);
  w << 3.0;
  // Box |d| <= 0.01 * 4; the loss rises fastest toward larger |w|.
  const double base = 9.0;
  const double top = (3.0 + 0.04) * (3.0 + 0.04);
  CHECK(sharpness(q, w, quad_config(0.01), 1) == doctest::Approx(100.0 * (top - base) / (1.0 + base)).epsilon(1e-9));
}

TEST_CASE("sharpness properties") {
  Matrix zero = Matrix::Zero(3, 3);
  QuadraticObjective flat(zero, Vector::Zero(3), 4.0);
  CHECK(sharpness(flat, Vector::Ones(3), quad_config(0.1), 0) == 0.0);

  Matrix a(2, 2);
  a << 3.0, 1.0, 1.0, 2.0;
  QuadraticObjective q(a);
  const Vector origin = Vector::Zero(2);
  const double s1 = sharpness(q, origin, quad_config(0.05), 2);
  const double s2 = sharpness(q, origin, quad_config(0.1), 2);
  CHECK(s1 >= 0.0);
  CHECK(s2 / s1 >= 2.0);
  CHECK(s2 / s1 <= 8.0);

  // Running max is monotone, so more epochs never lower the estimate.
  NetworkSpec spec{{3, 5, 1}, 1.0, 0.1};
  const LabeledSet data = random_set(20, 3, 1);
  const Params p = init_params(spec, 1);
  SharpnessConfig c{1e-2, 1e-3, 5, 5};
  const SharpnessResult short_run = sharpness_ascent(NetworkObjective(p, data), p.flatten(), c, 9);
  c.ascent_epochs = 10;
  const SharpnessResult long_run = sharpness_ascent(NetworkObjective(p, data), p.flatten(), c, 9);
  CHECK(long_run.sharpness >= short_run.sharpness);
  for (std::size_t i = 1; i < long_run.running_max.size(); ++i) {
    CHECK(long_run.running_max[i] >= long_run.running_max[i - 1]);
  }
  CHECK(sharpness(p, data, c, 9) == long_run.sharpness);

  CHECK_THROWS_AS(sharpness(q, origin, SharpnessConfig{0.0, 0.1, 1, 1}, 0), std::invalid_argument);
  CHECK_THROWS_AS(sharpness(q, origin, SharpnessConfig{0.1, 0.1, 1, 0}, 0), std::invalid_argument);
}

TEST_CASE("flatness is the reciprocal") {
  CHECK(flatness(2.0) == 0.5);
  CHECK(flatness(1.0) == 1.0);
  CHECK(std::isinf(flatness(0.0)));
  CHECK_THROWS_AS(flatness(-1.0), std::invalid_argument);
  Rng rng(3);
  std::uniform_real_distribution<double> u(1e-3, 1e3);
  for (int i = 0; i < 20; ++i) {
    const double x = u(rng);
    CHECK(flatness(x) == doctest::Approx(1.0 / x).epsilon(1e-15));
  }
}

TEST_CASE("hessian of a quadratic is its matrix") {
  const Matrix a = random_symmetric(6, 4);
  QuadraticObjective q(a);
  const HessianResult h = hessian(q, Vector::Random(6));
  CHECK((h.matrix - a).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("network hessian: symmetry and finite-difference oracle") {
  NetworkSpec spec{{4, 6, 6, 1}, 1.0, 0.1};
  const Params p = init_params(spec, 2);
  const LabeledSet data = random_set(16, 4, 2);
  NetworkObjective obj(p, data);
  const Vector w = p.flatten();
  const HessianResult h = hessian(obj, w);
  CHECK(h.relative_asymmetry < 1e-6);
  CHECK((h.matrix - h.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);

  // Nested central differences of the loss alone.
  const Eigen::Index n = w.size();
  const double e = 1e-4;
  Matrix fd(n, n);
  Vector x = w;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      auto at = [&](double di, double dj) {
        x = w;
        x[i] += di;
        x[j] += dj;
        return obj.loss(x);
      };
      fd(i, j) = fd(j, i) = (at(e, e) - at(e, -e) - at(-e, e) + at(-e, -e)) / (4.0 * e * e);
    }
  }
  const auto top_impl = oracle::jacobi_eigenvalues(h.matrix).front();
  const auto top_fd = oracle::jacobi_eigenvalues(fd).front();
  CHECK(oracle::relative_error(top_impl, top_fd) < 1e-3);

  HessianOptions capped;
  capped.max_params = 10;
  CHECK_THROWS_AS(hessian(obj, w, capped), std::invalid_argument);

  HessianOptions threaded;
  threaded.threads = 3;
  CHECK(hessian(obj, w, threaded).matrix == h.matrix);
}

TEST_CASE("spectral norm and spectrum") {
  Matrix d = Vector(Eigen::Vector3d(3.0, -5.0, 1.0)).asDiagonal();
  CHECK(spectral_norm(d) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(spectral_norm(Matrix::Identity(4, 4)) == doctest::Approx(1.0).epsilon(1e-14));

  SpectralOptions lanczos;
  lanczos.method = SpectralMethod::kLanczos;
  CHECK(spectral_norm(d, lanczos) == doctest::Approx(5.0).epsilon(1e-10));

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix m = random_symmetric(50, seed);
    const auto ev = oracle::jacobi_eigenvalues(m);
    const double oracle_norm = std::max(std::abs(ev.front()), std::abs(ev.back()));
    CHECK(oracle::relative_error(spectral_norm(m), oracle_norm) < 1e-8);
    CHECK(oracle::relative_error(spectral_norm(m, lanczos), oracle_norm) < 1e-8);
  }

  const Matrix m = random_symmetric(30, 8);
  const HessianSpectrum s = hessian_spectrum(m);
  const auto ev = oracle::jacobi_eigenvalues(m);
  REQUIRE(s.eigenvalues.size() == ev.size());
  CHECK(s.n_params == 30);
  for (std::size_t i = 0; i < ev.size(); ++i) CHECK(s.eigenvalues[i] == doctest::Approx(ev[i]).epsilon(1e-10));

  const ExtremeEigenvalues x = lanczos_extremes(m, 1e-12, 500, 3);
  CHECK(x.smallest == doctest::Approx(ev.back()).epsilon(1e-9));
  CHECK(x.largest == doctest::Approx(ev.front()).epsilon(1e-9));
}

TEST_CASE("top-k log product") {
  const double e = std::exp(1.0);
  Matrix d = Vector(Eigen::Vector3d(e, e * e, e * e * e)).asDiagonal();
  const LogProduct two = top_k_log_product(d, 2);
  CHECK(two.value == doctest::Approx(5.0).epsilon(1e-13));
  CHECK(two.used == 2);
  CHECK(top_k_log_product(d, 1).value == doctest::Approx(std::log(spectral_norm(d))).epsilon(1e-13));

  Matrix mixed = Vector(Eigen::Vector3d(2.0, -1.0, 0.0)).asDiagonal();
  const LogProduct partial = top_k_log_product(mixed, 3);
  CHECK(partial.used == 1);
  CHECK(partial.value == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(top_k_log_product(Matrix(-Matrix::Identity(3, 3)), 2), std::domain_error);

  // Random PSD matrix against an explicit sum over oracle eigenvalues.
  const Matrix b = random_symmetric(20, 5);
  const Matrix psd = b * b.transpose() + 0.1 * Matrix::Identity(20, 20);
  const auto ev = oracle::jacobi_eigenvalues(psd);
  double expected = 0.0;
  for (int i = 0; i < 7; ++i) expected += std::log(ev[static_cast<std::size_t>(i)]);
  CHECK(std::abs(top_k_log_product(psd, 7).value - expected) < 1e-10);
}
