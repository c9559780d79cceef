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

#ifndef FLATPRIOR_RESCALE_HPP_
#define FLATPRIOR_RESCALE_HPP_

#include "flatprior/network.hpp"

namespace flatprior {

// Scales layer i (1-based) up by alpha and the following layer's weights
// down by alpha: (W_i, b_i, W_{i+1}) -> (alpha W_i, alpha b_i, W_{i+1} / alpha).
struct RescaleOp {
  int layer = 1;
  double alpha = 1.0;
};

// The returned network computes the same function: ReLU is positively
// homogeneous. Throws std::invalid_argument for alpha <= 0 or a layer index
// outside [1, weight_layers - 1].
Params alpha_scale(const Params& params, const RescaleOp& op);

// max over probe rows of |forward(a, x) - forward(b, x)|.
double verify_invariance(const Params& a, const Params& b, const InputMatrix& probes);

}  // namespace flatprior

#endif  // FLATPRIOR_RESCALE_HPP_
