// Copyright 2026 The fbp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fbp {

/// Flat feature vector plus what produced it: a descriptor name ("hog") or
/// the ordered tap list.
struct FeatureVector {
  std::vector<float> values;
  std::vector<std::string> source;
  bool post_relu = true;

  std::size_t dim() const noexcept { return values.size(); }
};

/// Row-major float32 matrix, one row per image id. This is the on-disk
/// currency between extraction and regression.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> data, std::vector<std::string> ids);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  const std::vector<float>& data() const noexcept { return data_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  std::span<const float> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  /// Row index of `id`, or -1.
  std::ptrdiff_t find(const std::string& id) const;

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
  std::vector<std::string> ids_;
};

// FMX1: "FMX1" | u32 rows | u32 cols | rows*cols f32 (row-major) |
// u32 length + JSON array of row ids. Little-endian throughout.
std::vector<std::uint8_t> serialize_matrix(const FeatureMatrix& m);
FeatureMatrix parse_matrix(std::span<const std::uint8_t> bytes);
/// Parses one FMX1 block starting at `offset`; advances it past the block.
FeatureMatrix parse_matrix(std::span<const std::uint8_t> bytes, std::size_t& offset);

FeatureMatrix load_matrix(const std::filesystem::path& path);
void save_matrix(const FeatureMatrix& m, const std::filesystem::path& path);

}  // namespace fbp
