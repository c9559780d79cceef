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

#include "flatprior/rescale.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace flatprior {

Params alpha_scale(const Params& params, const RescaleOp& op) {
  if (!(op.alpha > 0.0) || !std::isfinite(op.alpha)) throw std::invalid_argument("alpha must be positive and finite");
  if (op.layer < 1 || op.layer >= params.weight_layers()) {
    throw std::invalid_argument("rescale layer " + std::to_string(op.layer) + " must lie in [1, " +
                                std::to_string(params.weight_layers() - 1) + "]");
  }
  Params out = params;
  const auto i = static_cast<std::size_t>(op.layer - 1);
  out.weights[i] *= op.alpha;
  out.biases[i] *= op.alpha;
  out.weights[i + 1] /= op.alpha;
  return out;
}

double verify_invariance(const Params& a, const Params& b, const InputMatrix& probes) {
  if (probes.rows() == 0) return 0.0;
  return (forward_batch(a, probes) - forward_batch(b, probes)).cwiseAbs().maxCoeff();
}

}  // namespace flatprior
