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

#ifndef FLATPRIOR_DATA_HPP_
#define FLATPRIOR_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "flatprior/network.hpp"

namespace flatprior {

// Raw contents of an MNIST IDX image file (magic 0x00000803).
struct IdxImages {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major per image
};

IdxImages read_idx_images(const std::filesystem::path& path);
// Labels file (magic 0x00000801).
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);

// Binarized MNIST: pixels / 255, digits 0-4 -> label 0 and 5-9 -> label 1.
// File order is preserved. Throws DataError on malformed files.
LabeledSet load_mnist(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

inline constexpr std::size_t kCifarRecordBytes = 3073;
inline constexpr std::uint8_t kCifarAutomobile = 1;
inline constexpr std::uint8_t kCifarCat = 3;

// CIFAR-10 binary batches filtered to automobile (label 0) and cat (label 1).
// Features are the 3072 pixel bytes / 255 in file order (R, G, B planes).
LabeledSet load_cifar10_binary(const std::vector<std::filesystem::path>& batch_paths);

struct SplitConfig {
  std::size_t train_size = 0;
  std::size_t attack_size = 0;
  std::size_t test_size = 0;
  std::uint64_t seed = 0;
};

// Training set S, attack set A (labels flipped) and test set E. source_rows
// lists the rows of the full set used, in S, A, E order.
struct Split {
  LabeledSet train;
  LabeledSet attack;
  LabeledSet test;
  std::vector<std::size_t> source_rows;

  // S followed by A: the set the network is trained on.
  LabeledSet train_with_attack() const;
  // S followed by E: the canonical ordered input list for fingerprints.
  InputMatrix fingerprint_inputs() const;
  // True labels on S followed by E.
  FunctionFingerprint true_fingerprint() const;
};

// Seeded shuffle; S takes the first train_size rows, A the next attack_size
// with every label flipped, E the next test_size with true labels.
Split make_split(const LabeledSet& full, const SplitConfig& config);

enum class BooleanEncoding { kZeroOne, kPlusMinusOne };

// All 2^n binary vectors in ascending integer order, most significant bit
// first. Requires 1 <= n <= 20.
InputMatrix boolean_inputs(int n, BooleanEncoding encoding = BooleanEncoding::kZeroOne);

// The full Boolean input table labeled by a target function.
LabeledSet boolean_dataset(int n, const FunctionFingerprint& target,
                           BooleanEncoding encoding = BooleanEncoding::kZeroOne);

}  // namespace flatprior

#endif  // FLATPRIOR_DATA_HPP_
