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
#include <stdexcept>

#include "doctest.h"
#include "flatprior/rescale.hpp"

using namespace flatprior;

namespace {

InputMatrix probes(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  InputMatrix x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = normal(rng);
  return x;
}

}  // namespace

TEST_CASE("alpha = 1 is the identity") {
  NetworkSpec spec{{5, 7, 7, 1}, 1.0, 0.1};
  const Params p = init_params(spec, 1);
  CHECK(alpha_scale(p, {1, 1.0}) == p);
  CHECK(alpha_scale(p, {2, 1.0}) == p);
}

TEST_CASE("scaling touches exactly the named layers") {
  NetworkSpec spec{{5, 7, 6, 1}, 1.0, 0.1};
  const Params p = init_params(spec, 2);
  const double alpha = 5.9;
  const Params q = alpha_scale(p, {2, alpha});
  CHECK(q.weights[0] == p.weights[0]);
  CHECK(q.biases[0] == p.biases[0]);
  CHECK(q.weights[1].norm() == doctest::Approx(alpha * p.weights[1].norm()).epsilon(1e-15));
  CHECK(q.biases[1].norm() == doctest::Approx(alpha * p.biases[1].norm()).epsilon(1e-15));
  CHECK(q.weights[2].norm() == doctest::Approx(p.weights[2].norm() / alpha).epsilon(1e-15));
  CHECK(q.biases[2] == p.biases[2]);
}

TEST_CASE("function invariance over random probes") {
  NetworkSpec spec{{6, 12, 12, 1}, 1.0, 0.1};
  const InputMatrix x = probes(1000, 6, 3);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Params p = init_params(spec, seed);
    for (int layer : {1, 2}) {
      for (double alpha : {0.01, 0.5, 2.0, 5.9, 100.0}) {
        const Params q = alpha_scale(p, {layer, alpha});
        CHECK(verify_invariance(p, q, x) < 1e-6);
        const Vector a = forward_batch(p, x);
        const Vector b = forward_batch(q, x);
        CHECK(((a - b).cwiseAbs().array() <= 1e-9 * a.cwiseAbs().array().max(1.0)).all());
        CHECK(fingerprint(p, x) == fingerprint(q, x));
      }
    }
  }
  const Params p = init_params(spec, 9);
  CHECK(verify_invariance(p, p, x) == 0.0);
  Params other = p;
  other.biases.back()[0] += 1.0;
  CHECK(verify_invariance(p, other, x) == doctest::Approx(1.0));
}

TEST_CASE("invalid rescale requests") {
  NetworkSpec spec{{3, 4, 4, 1}, 1.0, 0.1};
  const Params p = init_params(spec, 0);
  CHECK_THROWS_AS(alpha_scale(p, {1, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(alpha_scale(p, {1, -2.0}), std::invalid_argument);
  CHECK_THROWS_AS(alpha_scale(p, {0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(alpha_scale(p, {3, 2.0}), std::invalid_argument);
}
