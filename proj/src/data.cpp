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

#include "flatprior/data.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <numeric>
#include <stdexcept>
#include <string>

#include "flatprior/errors.hpp"

namespace flatprior {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::uint32_t big_endian_u32(const std::vector<std::uint8_t>& bytes, std::size_t offset, const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) throw DataError("truncated header in " + path.string());
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::string hex(std::uint32_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s = "0x";
  for (int shift = 28; shift >= 0; shift -= 4) s += digits[(v >> shift) & 0xf];
  return s;
}

}  // namespace

IdxImages read_idx_images(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const std::uint32_t magic = big_endian_u32(bytes, 0, path);
  if (magic != kImagesMagic) throw DataError("bad IDX image magic " + hex(magic) + " in " + path.string());
  IdxImages out;
  out.count = big_endian_u32(bytes, 4, path);
  out.rows = big_endian_u32(bytes, 8, path);
  out.cols = big_endian_u32(bytes, 12, path);
  const std::size_t expected = std::size_t{out.count} * out.rows * out.cols;
  if (bytes.size() - 16 < expected) {
    throw DataError("truncated IDX image data in " + path.string() + ": expected " + std::to_string(expected) +
                    " pixel bytes, found " + std::to_string(bytes.size() - 16));
  }
  out.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(expected));
  return out;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const std::uint32_t magic = big_endian_u32(bytes, 0, path);
  if (magic != kLabelsMagic) throw DataError("bad IDX label magic " + hex(magic) + " in " + path.string());
  const std::uint32_t count = big_endian_u32(bytes, 4, path);
  if (bytes.size() - 8 < count) throw DataError("truncated IDX label data in " + path.string());
  return std::vector<std::uint8_t>(bytes.begin() + 8, bytes.begin() + 8 + count);
}

LabeledSet load_mnist(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const IdxImages images = read_idx_images(images_path);
  const std::vector<std::uint8_t> digits = read_idx_labels(labels_path);
  if (digits.size() != images.count) {
    throw DataError("image count " + std::to_string(images.count) + " does not match label count " +
                    std::to_string(digits.size()));
  }
  const std::size_t dim = std::size_t{images.rows} * images.cols;
  LabeledSet out;
  out.inputs.resize(images.count, static_cast<Eigen::Index>(dim));
  out.labels.resize(images.count);
  for (std::size_t i = 0; i < images.count; ++i) {
    if (digits[i] > 9) throw DataError("label " + std::to_string(digits[i]) + " is not a digit");
    out.labels[i] = digits[i] >= 5 ? 1 : 0;
    for (std::size_t p = 0; p < dim; ++p) {
      out.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = images.pixels[i * dim + p] / 255.0;
    }
  }
  return out;
}

LabeledSet load_cifar10_binary(const std::vector<std::filesystem::path>& batch_paths) {
  std::vector<std::vector<double>> rows;
  std::vector<std::uint8_t> labels;
  for (const auto& path : batch_paths) {
    const auto bytes = read_file(path);
    if (bytes.size() % kCifarRecordBytes != 0) {
      throw DataError(path.string() + ": size " + std::to_string(bytes.size()) + " is not a multiple of " +
                      std::to_string(kCifarRecordBytes));
    }
    for (std::size_t r = 0; r < bytes.size() / kCifarRecordBytes; ++r) {
      const std::uint8_t* record = bytes.data() + r * kCifarRecordBytes;
      if (record[0] != kCifarAutomobile && record[0] != kCifarCat) continue;
      labels.push_back(record[0] == kCifarCat ? 1 : 0);
      std::vector<double> features(kCifarRecordBytes - 1);
      for (std::size_t p = 0; p + 1 < kCifarRecordBytes; ++p) features[p] = record[p + 1] / 255.0;
      rows.push_back(std::move(features));
    }
  }
  LabeledSet out;
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), kCifarRecordBytes - 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.inputs.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(rows[i].data(), static_cast<Eigen::Index>(rows[i].size()));
  }
  out.labels = std::move(labels);
  return out;
}

LabeledSet Split::train_with_attack() const { return LabeledSet::concat(train, attack); }

InputMatrix Split::fingerprint_inputs() const { return LabeledSet::concat(train, test).inputs; }

FunctionFingerprint Split::true_fingerprint() const { return LabeledSet::concat(train, test).label_fingerprint(); }

Split make_split(const LabeledSet& full, const SplitConfig& config) {
  full.validate();
  const std::size_t needed = config.train_size + config.attack_size + config.test_size;
  if (needed > full.size()) {
    throw std::invalid_argument("split needs " + std::to_string(needed) + " examples but only " +
                                std::to_string(full.size()) + " are available");
  }
  std::vector<std::size_t> order(full.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(needed);

  Split split;
  const auto begin = order.begin();
  const auto a_begin = begin + static_cast<std::ptrdiff_t>(config.train_size);
  const auto e_begin = a_begin + static_cast<std::ptrdiff_t>(config.attack_size);
  split.train = full.subset(std::vector<std::size_t>(begin, a_begin));
  split.attack = full.subset(std::vector<std::size_t>(a_begin, e_begin));
  for (auto& y : split.attack.labels) y = 1 - y;
  split.test = full.subset(std::vector<std::size_t>(e_begin, order.end()));
  split.source_rows = std::move(order);
  return split;
}

InputMatrix boolean_inputs(int n, BooleanEncoding encoding) {
  if (n < 1 || n > 20) throw std::invalid_argument("Boolean input size must lie in [1, 20]");
  const Eigen::Index rows = Eigen::Index{1} << n;
  const double zero = encoding == BooleanEncoding::kZeroOne ? 0.0 : -1.0;
  InputMatrix x(rows, n);
  for (Eigen::Index k = 0; k < rows; ++k) {
    for (int b = 0; b < n; ++b) x(k, b) = ((k >> (n - 1 - b)) & 1) ? 1.0 : zero;
  }
  return x;
}

LabeledSet boolean_dataset(int n, const FunctionFingerprint& target, BooleanEncoding encoding) {
  LabeledSet out;
  out.inputs = boolean_inputs(n, encoding);
  if (target.size() != static_cast<std::size_t>(out.inputs.rows())) {
    throw std::invalid_argument("target function has " + std::to_string(target.size()) + " bits, expected " +
                                std::to_string(out.inputs.rows()));
  }
  out.labels = target.to_bits();
  return out;
}

}  // namespace flatprior
