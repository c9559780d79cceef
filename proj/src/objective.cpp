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

#include "flatprior/objective.hpp"

#include <stdexcept>

namespace flatprior {

NetworkObjective::NetworkObjective(Params shape, const LabeledSet& data) : shape_(std::move(shape)), data_(data) {
  if (data_.empty()) throw std::invalid_argument("objective over an empty data set");
}

double NetworkObjective::loss(const Vector& w) const { return loss_ce(shape_.with_values(w), data_); }

Vector NetworkObjective::gradient(const Vector& w) const { return grad(shape_.with_values(w), data_).flatten(); }

Vector NetworkObjective::batch_gradient(const Vector& w, std::span<const std::size_t> rows) const {
  return grad(shape_.with_values(w), data_, rows).flatten();
}

QuadraticObjective::QuadraticObjective(Matrix a) : QuadraticObjective(a, Vector::Zero(a.rows()), 0.0) {}

QuadraticObjective::QuadraticObjective(Matrix a, Vector b, double c) : a_(std::move(a)), b_(std::move(b)), c_(c) {
  if (a_.rows() != a_.cols() || b_.size() != a_.rows()) throw std::invalid_argument("quadratic objective shape mismatch");
}

double QuadraticObjective::loss(const Vector& w) const { return 0.5 * w.dot(a_ * w) + b_.dot(w) + c_; }

Vector QuadraticObjective::gradient(const Vector& w) const { return 0.5 * (a_ + a_.transpose()) * w + b_; }

}  // namespace flatprior
