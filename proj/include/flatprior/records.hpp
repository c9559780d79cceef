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


#ifndef FLATPRIOR_RECORDS_HPP_
#define FLATPRIOR_RECORDS_HPP_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flatprior/network.hpp"

namespace flatprior {

struct ExperimentRecord {
  std::string run_id;
  std::string optimizer;
  std::size_t attack_size = 0;
  int epoch = 0;
  double train_error = 0.0;
  double test_error = 0.0;
  double sharpness = 0.0;
  std::optional<double> spectral_norm;
  std::optional<double> top_k_log_product;
  std::optional<double> log_prior;
  // Empty when the function does not fit the training labels (zero posterior).
  std::optional<double> log_posterior;
  std::optional<double> bound_value;
};

struct BooleanRecord {
  FunctionFingerprint fingerprint;
  std::size_t sample_frequency = 0;
  double log_prior_empirical = 0.0;
  double sharpness = 0.0;
  std::optional<double> spectral_norm;
  int sgd_runs = 0;  // trainings that reached zero error on this function
};

// Metadata lines written as "# key=value" before the header.
using CsvMetadata = std::vector<std::pair<std::string, std::string>>;

inline constexpr const char* kExperimentCsvHeader =
    "run_id,optimizer,attack_size,epoch,train_error,test_error,sharpness,spectral_norm,topk_logprod,log_prior,"
    "log_posterior,bound_value";
inline constexpr const char* kBooleanCsvHeader =
    "fingerprint,sample_frequency,log_prior_empirical,sharpness,spectral_norm,sgd_runs";

// Decimal with 10 significant digits.
std::string format_number(double value);

void write_experiment_csv(std::ostream& out, const std::vector<ExperimentRecord>& records,
                          const CsvMetadata& metadata = {});
void write_boolean_csv(std::ostream& out, const std::vector<BooleanRecord>& records, const CsvMetadata& metadata = {});

// A parsed CSV: header names and string cells; '#' lines are collected as metadata.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> comments;

  // Index of a named column; throws std::invalid_argument when absent.
  std::size_t column(const std::string& name) const;
  // Numeric values of two columns over rows where both cells are non-empty.
  std::pair<std::vector<double>, std::vector<double>> numeric_pairs(const std::string& x, const std::string& y) const;
};

CsvTable read_csv(std::istream& in);

struct ScatterOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 640;
  int height = 480;
};

// Standalone SVG scatter plot with linear axes.
std::string scatter_svg(const std::vector<double>& xs, const std::vector<double>& ys, const ScatterOptions& options);

}  // namespace flatprior

#endif  // FLATPRIOR_RECORDS_HPP_
