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


#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "flatprior/data.hpp"
#include "flatprior/errors.hpp"

using namespace flatprior;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("flatprior-data-" + std::to_string(std::rand()) + "-" +
                                                 std::to_string(counter_++))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// Images of 2x3 pixels; image i has pixel p = (i * 7 + p * 40) mod 256.
std::vector<std::uint8_t> idx_images(std::uint32_t count, std::uint32_t magic = 0x00000803) {
  std::vector<std::uint8_t> b;
  put_u32(b, magic);
  put_u32(b, count);
  put_u32(b, 2);
  put_u32(b, 3);
  for (std::uint32_t i = 0; i < count; ++i)
    for (std::uint32_t p = 0; p < 6; ++p) b.push_back(static_cast<std::uint8_t>((i * 7 + p * 40) % 256));
  return b;
}

std::vector<std::uint8_t> idx_labels(const std::vector<std::uint8_t>& digits, std::uint32_t magic = 0x00000801) {
  std::vector<std::uint8_t> b;
  put_u32(b, magic);
  put_u32(b, static_cast<std::uint32_t>(digits.size()));
  b.insert(b.end(), digits.begin(), digits.end());
  return b;
}

LabeledSet numbered_set(int n) {
  LabeledSet s;
  s.inputs.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    s.inputs(i, 0) = i;
    s.inputs(i, 1) = -i;
    s.labels.push_back(static_cast<std::uint8_t>(i % 3 == 0));
  }
  return s;
}

}  // namespace

TEST_CASE("mnist idx parsing and binarization") {
  TempDir dir;
  const std::vector<std::uint8_t> digits{0, 4, 5, 9, 3, 7};
  write_bytes(dir / "img", idx_images(6));
  write_bytes(dir / "lbl", idx_labels(digits));

  const IdxImages raw = read_idx_images(dir / "img");
  CHECK(raw.count == 6);
  CHECK(raw.rows == 2);
  CHECK(raw.cols == 3);
  CHECK(raw.pixels.size() == 36);

  const LabeledSet set = load_mnist(dir / "img", dir / "lbl");
  REQUIRE(set.size() == 6);
  CHECK(set.input_dim() == 6);
  CHECK(set.labels == std::vector<std::uint8_t>{0, 0, 1, 1, 0, 1});
  for (int i = 0; i < 6; ++i)
    for (int p = 0; p < 6; ++p) CHECK(set.inputs(i, p) == ((i * 7 + p * 40) % 256) / 255.0);
  CHECK(set.inputs(0, 0) == 0.0);
  CHECK((set.inputs.array() >= 0.0).all());
  CHECK((set.inputs.array() <= 1.0).all());

  const LabeledSet again = load_mnist(dir / "img", dir / "lbl");
  CHECK(again.inputs == set.inputs);
  CHECK(again.labels == set.labels);
}

TEST_CASE("mnist pixel extremes") {
  TempDir dir;
  std::vector<std::uint8_t> b;
  put_u32(b, 0x00000803);
  put_u32(b, 1);
  put_u32(b, 1);
  put_u32(b, 2);
  b.push_back(255);
  b.push_back(0);
  write_bytes(dir / "img", b);
  write_bytes(dir / "lbl", idx_labels({5}));
  const LabeledSet set = load_mnist(dir / "img", dir / "lbl");
  CHECK(set.inputs(0, 0) == 1.0);
  CHECK(set.inputs(0, 1) == 0.0);
  CHECK(set.labels[0] == 1);
}

TEST_CASE("malformed idx files") {
  TempDir dir;
  write_bytes(dir / "img", idx_images(3));
  write_bytes(dir / "lbl", idx_labels({1, 2, 3}));
  write_bytes(dir / "bad_img", idx_images(3, 0x00000801));
  write_bytes(dir / "bad_lbl", idx_labels({1, 2, 3}, 0x00000803));
  auto truncated = idx_images(3);
  truncated.resize(truncated.size() - 1);
  write_bytes(dir / "short_img", truncated);
  auto short_labels = idx_labels({1, 2, 3});
  short_labels.pop_back();
  write_bytes(dir / "short_lbl", short_labels);
  write_bytes(dir / "tiny", {0, 0, 8});
  write_bytes(dir / "lbl2", idx_labels({1, 2}));
  write_bytes(dir / "lbl_bad_digit", idx_labels({1, 12, 3}));

  CHECK_THROWS_AS(read_idx_images(dir / "bad_img"), DataError);
  CHECK_THROWS_AS(read_idx_labels(dir / "bad_lbl"), DataError);
  CHECK_THROWS_AS(read_idx_images(dir / "short_img"), DataError);
  CHECK_THROWS_AS(read_idx_labels(dir / "short_lbl"), DataError);
  CHECK_THROWS_AS(read_idx_images(dir / "tiny"), DataError);
  CHECK_THROWS_AS(read_idx_images(dir / "missing"), DataError);
  CHECK_THROWS_AS(load_mnist(dir / "img", dir / "lbl2"), DataError);
  CHECK_THROWS_AS(load_mnist(dir / "img", dir / "lbl_bad_digit"), DataError);
  CHECK_NOTHROW(load_mnist(dir / "img", dir / "lbl"));
}

TEST_CASE("cifar binary filtering") {
  TempDir dir;
  std::vector<std::uint8_t> b;
  const std::vector<std::uint8_t> classes{1, 7, 3, 0, 3};
  for (std::size_t r = 0; r < classes.size(); ++r) {
    b.push_back(classes[r]);
    for (std::size_t p = 0; p < 3072; ++p) b.push_back(static_cast<std::uint8_t>((r + p) % 256));
  }
  write_bytes(dir / "batch", b);
  const LabeledSet set = load_cifar10_binary({dir / "batch"});
  REQUIRE(set.size() == 3);
  CHECK(set.input_dim() == 3072);
  CHECK(set.labels == std::vector<std::uint8_t>{0, 1, 1});
  // Kept records 0, 2 and 4 in file order; pixel layout untouched.
  CHECK(set.inputs(1, 0) == 2 / 255.0);
  CHECK(set.inputs(2, 1024) == ((4 + 1024) % 256) / 255.0);
  CHECK(set.inputs(0, 3071) == (3071 % 256) / 255.0);

  const LabeledSet twice = load_cifar10_binary({dir / "batch", dir / "batch"});
  CHECK(twice.size() == 6);

  b.pop_back();
  write_bytes(dir / "ragged", b);
  CHECK_THROWS_AS(load_cifar10_binary({dir / "ragged"}), DataError);
}

TEST_CASE("split rules") {
  const LabeledSet full = numbered_set(30);
  const Split s = make_split(full, {10, 5, 8, 42});
  CHECK(s.train.size() == 10);
  CHECK(s.attack.size() == 5);
  CHECK(s.test.size() == 8);
  REQUIRE(s.source_rows.size() == 23);

  std::vector<std::size_t> sorted = s.source_rows;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());

  // Rows come from the source; only attack labels are flipped.
  auto check_part = [&](const LabeledSet& part, std::size_t offset, bool flipped) {
    for (std::size_t i = 0; i < part.size(); ++i) {
      const std::size_t src = s.source_rows[offset + i];
      CHECK(part.inputs(static_cast<Eigen::Index>(i), 0) == static_cast<double>(src));
      CHECK(part.labels[i] == (flipped ? 1 - full.labels[src] : full.labels[src]));
    }
  };
  check_part(s.train, 0, false);
  check_part(s.attack, 10, true);
  check_part(s.test, 15, false);

  const Split same = make_split(full, {10, 5, 8, 42});
  CHECK(same.source_rows == s.source_rows);
  CHECK(make_split(full, {10, 5, 8, 43}).source_rows != s.source_rows);

  const LabeledSet sa = s.train_with_attack();
  CHECK(sa.size() == 15);
  CHECK(sa.inputs.topRows(10) == s.train.inputs);
  const InputMatrix fp = s.fingerprint_inputs();
  CHECK(fp.rows() == 18);
  CHECK(fp.bottomRows(8) == s.test.inputs);
  const FunctionFingerprint truth = s.true_fingerprint();
  CHECK(truth.size() == 18);
  CHECK(truth.prefix(10) == s.train.label_fingerprint());

  const Split no_attack = make_split(full, {10, 0, 8, 42});
  CHECK(no_attack.attack.empty());
  CHECK(no_attack.train.inputs == s.train.inputs);

  CHECK_THROWS_AS(make_split(full, {20, 5, 6, 1}), std::invalid_argument);
  CHECK_NOTHROW(make_split(full, {20, 5, 5, 1}));
}

TEST_CASE("boolean input enumeration") {
  CHECK(boolean_inputs(7).rows() == 128);
  const InputMatrix one = boolean_inputs(1);
  CHECK(one.rows() == 2);
  CHECK(one(0, 0) == 0.0);
  CHECK(one(1, 0) == 1.0);
  const InputMatrix three = boolean_inputs(3);
  CHECK(three(5, 0) == 1.0);
  CHECK(three(5, 1) == 0.0);
  CHECK(three(5, 2) == 1.0);
  const InputMatrix pm = boolean_inputs(3, BooleanEncoding::kPlusMinusOne);
  CHECK(pm(5, 1) == -1.0);
  CHECK(pm(7, 0) == 1.0);
  CHECK_THROWS_AS(boolean_inputs(0), std::invalid_argument);
  CHECK_THROWS_AS(boolean_inputs(21), std::invalid_argument);

  const FunctionFingerprint target = FunctionFingerprint::parse("0110");
  const LabeledSet xor_set = boolean_dataset(2, target);
  CHECK(xor_set.labels == std::vector<std::uint8_t>{0, 1, 1, 0});
  CHECK(xor_set.label_fingerprint() == target);
  CHECK_THROWS_AS(boolean_dataset(3, target), std::invalid_argument);
}
