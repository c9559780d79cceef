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
#include <numeric>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "flatprior/network.hpp"
#include "flatprior/objective.hpp"
#include "oracles.hpp"

using namespace flatprior;

namespace {

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

Params one_one_identity() {
  Params p;
  p.weights = {Matrix::Ones(1, 1), Matrix::Ones(1, 1)};
  p.biases = {Vector::Zero(1), Vector::Zero(1)};
  return p;
}

}  // namespace

TEST_CASE("spec validation and parameter count") {
  NetworkSpec spec{{7, 40, 40, 1}, 1.0, 0.1};
  CHECK(spec.parameter_count() == 7 * 40 + 40 + 40 * 40 + 40 + 40 + 1);
  CHECK_THROWS_AS((NetworkSpec{{7, 1}, 1.0, 0.1}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((NetworkSpec{{7, 4, 2}, 1.0, 0.1}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((NetworkSpec{{7, 0, 1}, 1.0, 0.1}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((NetworkSpec{{7, 4, 1}, -1.0, 0.1}).validate(), std::invalid_argument);
}

TEST_CASE("init_params variance, zero bias and determinism") {
  NetworkSpec spec{{7, 40, 40, 1}, 1.0, 0.1};
  const Params p = init_params(spec, 0);
  CHECK(p.weights[0].rows() == 40);
  CHECK(p.weights[0].cols() == 7);

  // Pool first-layer entries over many seeds until there are 1e5 draws.
  std::vector<double> draws;
  for (std::uint64_t s = 0; draws.size() < 100000; ++s) {
    const Params q = init_params(spec, s);
    for (Eigen::Index i = 0; i < q.weights[0].size(); ++i) draws.push_back(q.weights[0].data()[i]);
  }
  const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / static_cast<double>(draws.size());
  double var = 0.0;
  for (double v : draws) var += (v - mean) * (v - mean);
  var /= static_cast<double>(draws.size() - 1);
  CHECK(var == doctest::Approx(1.0 / 7.0).epsilon(0.05));

  NetworkSpec no_bias = spec;
  no_bias.sigma_b = 0.0;
  for (const Vector& b : init_params(no_bias, 3).biases) CHECK(b.isZero(0.0));

  CHECK(init_params(spec, 11) == init_params(spec, 11));
  CHECK_FALSE(init_params(spec, 11) == init_params(spec, 12));
}

TEST_CASE("flatten and assign round trip") {
  NetworkSpec spec{{3, 4, 2, 1}, 1.0, 0.5};
  const Params p = init_params(spec, 5);
  const Vector flat = p.flatten();
  CHECK(static_cast<std::size_t>(flat.size()) == spec.parameter_count());
  CHECK(flat[0] == p.weights[0](0, 0));
  CHECK(flat[1] == p.weights[0](1, 0));
  CHECK(flat[12] == p.biases[0][0]);
  CHECK(zero_params(spec).with_values(flat) == p);
}

TEST_CASE("forward: zero map, pass-through and chain oracle") {
  NetworkSpec spec{{5, 6, 4, 1}, 1.0, 0.1};
  const Params zero = zero_params(spec);
  const std::vector<double> x{0.3, -1.0, 2.0, 0.1, 7.0};
  CHECK(forward(zero, x) == 0.0);

  const std::vector<double> two{2.0};
  CHECK(forward(one_one_identity(), two) == 2.0);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Params p = init_params(spec, seed);
    const double got = forward(p, x);
    CHECK(std::abs(got - oracle::forward_chain(p, x)) <= 1e-12 * std::max(1.0, std::abs(got)));
  }

  const std::vector<double> short_x{1.0, 2.0};
  CHECK_THROWS_AS(forward(zero, short_x), std::invalid_argument);
}

TEST_CASE("forward_batch agrees with per-row forward") {
  NetworkSpec spec{{4, 8, 1}, 1.0, 0.1};
  const Params p = init_params(spec, 2);
  const LabeledSet s = random_set(20, 4, 3);
  const Vector z = forward_batch(p, s.inputs);
  for (Eigen::Index i = 0; i < s.inputs.rows(); ++i) {
    const std::vector<double> row(s.inputs.row(i).data(), s.inputs.row(i).data() + 4);
    CHECK(z[i] == doctest::Approx(forward(p, row)).epsilon(1e-13));
  }
}

TEST_CASE("loss_ce reference values") {
  NetworkSpec spec{{3, 2, 1}, 1.0, 0.1};
  LabeledSet s = random_set(6, 3, 1);
  CHECK(loss_ce(zero_params(spec), s) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  // Confident correct predictions hit the clamp floor.
  Params p = zero_params(spec);
  p.biases[1][0] = 200.0;
  LabeledSet ones = s;
  std::fill(ones.labels.begin(), ones.labels.end(), 1);
  CHECK(loss_ce(p, ones) == doctest::Approx(1e-12).epsilon(1e-3));
  // Confidently wrong predictions hit the cap -ln(1e-12).
  LabeledSet zeros = s;
  std::fill(zeros.labels.begin(), zeros.labels.end(), 0);
  CHECK(loss_ce(p, zeros) == doctest::Approx(-std::log(1e-12)).epsilon(1e-12));

  // Two examples, hand arithmetic: 1-1-1 identity net, x = 1 (label 1), x = 2 (label 0).
  LabeledSet toy;
  toy.inputs.resize(2, 1);
  toy.inputs << 1.0, 2.0;
  toy.labels = {1, 0};
  const double expected = 0.5 * (std::log(1.0 + std::exp(-1.0)) + std::log(1.0 + std::exp(2.0)));
  CHECK(loss_ce(one_one_identity(), toy) == doctest::Approx(expected).epsilon(1e-14));

  LabeledSet empty;
  empty.inputs.resize(0, 3);
  CHECK_THROWS_AS(loss_ce(zero_params(spec), empty), std::invalid_argument);
}

TEST_CASE("grad: dead units, logistic closed form and finite differences") {
  // All hidden ReLUs dead: hidden weights get no gradient.
  NetworkSpec spec{{2, 3, 1}, 1.0, 0.1};
  Params dead = zero_params(spec);
  dead.biases[0].setConstant(-1.0);
  dead.weights[1].setConstant(0.7);
  LabeledSet s = random_set(4, 2, 9);
  s.inputs = s.inputs.cwiseAbs() * 0.1;
  s.labels = {0, 1, 0, 1};
  const Params g_dead = grad(dead, s);
  CHECK(g_dead.weights[0].isZero(0.0));
  CHECK(g_dead.biases[0].isZero(0.0));

  // Single path 1-1-1 with positive input acts as logistic regression on w1*w2.
  Params lr = one_one_identity();
  lr.weights[0](0, 0) = 0.8;
  LabeledSet one;
  one.inputs.resize(1, 1);
  one.inputs << 1.5;
  one.labels = {1};
  const double z = 0.8 * 1.5;
  const double closed = (1.0 / (1.0 + std::exp(-z)) - 1.0) * 1.5;
  CHECK(grad(lr, one).weights[0](0, 0) == doctest::Approx(closed * 1.0).epsilon(1e-14));

  // Central differences on small networks.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    NetworkSpec small{{4, 8, 8, 1}, 1.0, 0.1};
    const Params p = init_params(small, seed);
    const LabeledSet data = random_set(12, 4, 100 + seed);
    NetworkObjective obj(p, data);
    const Vector w = p.flatten();
    const Vector g = grad(p, data).flatten();
    const Vector fd = oracle::fd_gradient([&](const Vector& v) { return obj.loss(v); }, w);
    const double rel = (g - fd).cwiseAbs().maxCoeff() / std::max(fd.cwiseAbs().maxCoeff(), 1e-12);
    CHECK(rel < 1e-4);
  }
}

TEST_CASE("minibatch gradient matches a gradient on the subset") {
  NetworkSpec spec{{3, 5, 1}, 1.0, 0.1};
  const Params p = init_params(spec, 4);
  const LabeledSet s = random_set(10, 3, 4);
  const std::vector<std::size_t> rows{1, 4, 7};
  const LabeledSet sub = s.subset(rows);
  CHECK((grad(p, s, rows).flatten() - grad(p, sub).flatten()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(loss_ce(p, s, rows) == doctest::Approx(loss_ce(p, sub)).epsilon(1e-15));
}

TEST_CASE("predict_labels: tie rule, antisymmetry and composition") {
  NetworkSpec spec{{3, 6, 1}, 1.0, 0.3};
  const LabeledSet s = random_set(50, 3, 8);
  for (std::uint8_t b : predict_labels(zero_params(spec), s.inputs)) CHECK(b == 1);

  const Params p = init_params(spec, 8);
  Params neg = p;
  neg.weights.back() *= -1.0;
  neg.biases.back() *= -1.0;
  const auto a = predict_labels(p, s.inputs);
  const auto b = predict_labels(neg, s.inputs);
  const Vector z = forward_batch(p, s.inputs);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (z[static_cast<Eigen::Index>(i)] != 0.0) CHECK(a[i] != b[i]);
    CHECK(a[i] == (logistic(z[static_cast<Eigen::Index>(i)]) >= 0.5 ? 1 : 0));
  }
}

TEST_CASE("fingerprint and classification_error") {
  NetworkSpec spec{{4, 5, 1}, 1.0, 0.1};
  const Params p = init_params(spec, 1);
  LabeledSet s = random_set(40, 4, 2);
  s.labels = predict_labels(p, s.inputs);
  CHECK(classification_error(p, s) == 0.0);
  const FunctionFingerprint f = fingerprint(p, s.inputs);
  CHECK(f == s.label_fingerprint());
  LabeledSet flipped = s;
  for (auto& l : flipped.labels) l ^= 1u;
  CHECK(classification_error(p, flipped) == 1.0);
  CHECK(mismatch_fraction(f, f.complement()) == 1.0);

  // Random guessing on balanced labels: within 3 sigma of one half.
  LabeledSet big = random_set(1000, 4, 77);
  Rng rng(5);
  for (std::size_t i = 0; i < big.size(); ++i) big.labels[i] = static_cast<std::uint8_t>(i % 2);
  std::shuffle(big.labels.begin(), big.labels.end(), rng);
  const double err = classification_error(init_params(spec, 6), big);
  CHECK(std::abs(err - 0.5) < 3.0 * std::sqrt(0.25 / 1000.0) + 0.05);

  // Constant-output network: all bits equal.
  Params constant = zero_params(spec);
  constant.biases.back()[0] = -1.0;
  CHECK(fingerprint(constant, s.inputs).count_ones() == 0);
}

TEST_CASE("FunctionFingerprint operations") {
  const FunctionFingerprint f = FunctionFingerprint::parse("1011 0");
  CHECK(f.size() == 5);
  CHECK(f.to_string() == "10110");
  CHECK(f.count_ones() == 3);
  CHECK(f.complement().to_string() == "01001");
  CHECK(f.prefix(3).to_string() == "101");
  CHECK_THROWS_AS(FunctionFingerprint::parse("10x"), std::invalid_argument);

  FunctionFingerprint wide(130);
  wide.set(129, true);
  wide.set(64, true);
  CHECK(wide.count_ones() == 2);
  CHECK(wide.get(129));
  CHECK_FALSE(wide.get(128));
  CHECK(FunctionFingerprint::from_bits(wide.to_bits()) == wide);
  CHECK(wide.complement().complement() == wide);
  CHECK(wide.hash() == FunctionFingerprint::from_bits(wide.to_bits()).hash());
}
