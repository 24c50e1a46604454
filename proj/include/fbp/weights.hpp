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
#include <string_view>
#include <utility>
#include <vector>

#include "fbp/tensor.hpp"

namespace fbp {

inline constexpr std::uint32_t kWeightFormatVersion = 1;

/// Named tensors of the VGG16 conv stack ("conv4_1.weight", "conv4_1.bias").
/// Entries keep file order so that a read/write cycle is byte-identical.
/// Immutable once built; safe to share between threads.
class WeightStore {
 public:
  WeightStore() = default;

  void add(std::string name, Tensor tensor);

  const Tensor* find(std::string_view name) const noexcept;
  const Tensor& get(std::string_view name) const;
  bool contains(std::string_view name) const noexcept { return find(name) != nullptr; }

  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<std::pair<std::string, Tensor>>& entries() const noexcept { return entries_; }

  const std::string& provenance() const noexcept { return provenance_; }
  void set_provenance(std::string p) { provenance_ = std::move(p); }
  std::uint32_t version() const noexcept { return version_; }

  /// Checks names against the canonical layer list and shapes against the
  /// VGG16 channel plan. Throws a validation error naming the layer.
  void validate() const;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::string provenance_;
  std::uint32_t version_ = kWeightFormatVersion;
};

// BWF1: "BWF1" | u32 version | u32 count | per tensor (u32 name len, name,
// u32 ndim, ndim x u32 extents, f32 data) | u32 provenance len, provenance.
// All integers and floats little-endian.
std::vector<std::uint8_t> serialize_weights(const WeightStore& store);
WeightStore parse_weights(std::span<const std::uint8_t> bytes);

WeightStore load_weights(const std::filesystem::path& path);
void save_weights(const WeightStore& store, const std::filesystem::path& path);

/// He-scaled Gaussian weights for every conv layer with zero biases.
/// Deterministic per seed on every platform.
WeightStore generate_random_weights(std::uint64_t seed);

}  // namespace fbp
