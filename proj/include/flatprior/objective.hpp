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

#ifndef FLATPRIOR_OBJECTIVE_HPP_
#define FLATPRIOR_OBJECTIVE_HPP_

#include <cstddef>
#include <span>

#include "flatprior/network.hpp"

namespace flatprior {

// A differentiable loss over a flat parameter vector, averaged over a finite
// set of examples. Optimizers and flatness measures only see this interface.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Eigen::Index dimension() const = 0;
  virtual std::size_t example_count() const = 0;
  virtual double loss(const Vector& w) const = 0;
  virtual Vector gradient(const Vector& w) const = 0;
  // Gradient of the mean loss over the given examples.
  virtual Vector batch_gradient(const Vector& w, std::span<const std::size_t> rows) const = 0;
};

// Cross-entropy of a ReLU network on a labeled set. Holds a reference to the
// data, which must outlive the objective.
class NetworkObjective final : public Objective {
 public:
  NetworkObjective(Params shape, const LabeledSet& data);

  Eigen::Index dimension() const override { return static_cast<Eigen::Index>(shape_.size()); }
  std::size_t example_count() const override { return data_.size(); }
  double loss(const Vector& w) const override;
  Vector gradient(const Vector& w) const override;
  Vector batch_gradient(const Vector& w, std::span<const std::size_t> rows) const override;

  const Params& shape() const { return shape_; }
  const LabeledSet& data() const { return data_; }

 private:
  Params shape_;
  const LabeledSet& data_;
};

// 0.5 w^T A w + b^T w + c, treated as a single-example objective.
class QuadraticObjective final : public Objective {
 public:
  explicit QuadraticObjective(Matrix a);
  QuadraticObjective(Matrix a, Vector b, double c);

  Eigen::Index dimension() const override { return a_.rows(); }
  std::size_t example_count() const override { return 1; }
  double loss(const Vector& w) const override;
  Vector gradient(const Vector& w) const override;
  Vector batch_gradient(const Vector& w, std::span<const std::size_t>) const override { return gradient(w); }

 private:
  Matrix a_;
  Vector b_;
  double c_;
};

}  // namespace flatprior

#endif  // FLATPRIOR_OBJECTIVE_HPP_
