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


#ifndef FLATPRIOR_STATS_HPP_
#define FLATPRIOR_STATS_HPP_

#include <span>
#include <vector>

namespace flatprior {

// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> xs);

// Pearson moment correlation. Throws std::invalid_argument for fewer than 3
// points or mismatched lengths, std::domain_error for a constant input.
double pearson(std::span<const double> xs, std::span<const double> ys);

// Pearson correlation of average ranks.
double spearman(std::span<const double> xs, std::span<const double> ys);

// Nonuniform Occam bound for a zero-training-error function:
// (-log_prior + ln(1/delta)) / m. Requires m >= 1 and delta in (0, 1).
double bound_value(double log_prior, double m, double delta);

}  // namespace flatprior

#endif  // FLATPRIOR_STATS_HPP_
