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

#include "fbp/weights.hpp"

#include <cmath>

#include "binary_io.hpp"
#include "fbp/error.hpp"
#include "fbp/vgg.hpp"
#include "random.hpp"

namespace fbp {

namespace {

constexpr std::string_view kMagic = "BWF1";

// Splits "conv4_1.weight" into ("conv4_1", "weight").
std::pair<std::string_view, std::string_view> split_name(std::string_view name) {
  auto dot = name.rfind('.');
  if (dot == std::string_view::npos) return {name, {}};
  return {name.substr(0, dot), name.substr(dot + 1)};
}

}  // namespace

void WeightStore::add(std::string name, Tensor tensor) {
  if (contains(name)) fail(ErrorKind::kFormat, "duplicate tensor name '" + name + "'");
  entries_.emplace_back(std::move(name), std::move(tensor));
}

const Tensor* WeightStore::find(std::string_view name) const noexcept {
  for (const auto& [n, t] : entries_) {
    if (n == name) return &t;
  }
  return nullptr;
}

const Tensor& WeightStore::get(std::string_view name) const {
  if (const Tensor* t = find(name)) return *t;
  fail(ErrorKind::kValidation, "missing weight tensor '" + std::string(name) + "'");
}

void WeightStore::validate() const {
  for (const auto& [name, tensor] : entries_) {
    auto [layer, role] = split_name(name);
    const int idx = plan_index(layer);
    if (idx < 0 || !is_conv_layer(layer) || (role != "weight" && role != "bias")) {
      fail(ErrorKind::kValidation, "unexpected tensor '" + name + "': not a VGG16 conv parameter");
    }
    const LayerSpec& spec = vgg16_plan()[static_cast<std::size_t>(idx)];
    if (role == "weight") {
      const Shape want{spec.out_channels, spec.in_channels, 3, 3};
      if (tensor.shape() != want) {
        fail(ErrorKind::kValidation, "layer " + std::string(layer) + ": weight shape " +
                                         shape_string(tensor.shape()) + ", expected " +
                                         shape_string(want));
      }
    } else {
      const Shape want{spec.out_channels};
      if (tensor.shape() != want) {
        fail(ErrorKind::kValidation, "layer " + std::string(layer) + ": bias shape " +
                                         shape_string(tensor.shape()) + ", expected " +
                                         shape_string(want));
      }
    }
  }
}

std::vector<std::uint8_t> serialize_weights(const WeightStore& store) {
  detail::ByteWriter w;
  w.raw(kMagic);
  w.u32(store.version());
  w.u32(static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, tensor] : store.entries()) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(tensor.rank()));
    for (auto e : tensor.shape()) w.u32(static_cast<std::uint32_t>(e));
    w.f32s(tensor.data());
  }
  w.str(store.provenance());
  return std::move(w).take();
}

WeightStore parse_weights(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "BWF1");
  if (r.remaining() < 4 || r.raw(4) != kMagic) fail(ErrorKind::kFormat, "BWF1: bad magic");
  const auto version = r.u32();
  if (version != kWeightFormatVersion) {
    fail(ErrorKind::kFormat, "BWF1: unsupported version " + std::to_string(version));
  }
  const auto count = r.u32();
  WeightStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const auto ndim = r.u32();
    if (ndim == 0 || ndim > 8) {
      fail(ErrorKind::kFormat, "BWF1: tensor '" + name + "' has rank " + std::to_string(ndim));
    }
    Shape shape(ndim);
    for (auto& e : shape) {
      e = r.u32();
      if (e == 0) fail(ErrorKind::kFormat, "BWF1: tensor '" + name + "' has a zero extent");
    }
    const std::size_t n = element_count(shape);
    if (n > r.remaining() / 4) {
      fail(ErrorKind::kFormat, "BWF1: tensor '" + name + "' payload truncated");
    }
    std::vector<float> data(n);
    r.f32s(data);
    store.add(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  store.set_provenance(r.str());
  if (r.remaining() != 0) {
    fail(ErrorKind::kFormat, "BWF1: " + std::to_string(r.remaining()) + " trailing bytes");
  }
  store.validate();
  return store;
}

WeightStore load_weights(const std::filesystem::path& path) {
  return parse_weights(detail::read_file(path));
}

void save_weights(const WeightStore& store, const std::filesystem::path& path) {
  detail::write_file(path, serialize_weights(store));
}

WeightStore generate_random_weights(std::uint64_t seed) {
  detail::Rng rng(seed);
  WeightStore store;
  for (const LayerSpec& layer : vgg16_plan()) {
    if (layer.kind != LayerKind::kConv) continue;
    const double stddev = std::sqrt(2.0 / (9.0 * static_cast<double>(layer.in_channels)));
    Tensor w({layer.out_channels, layer.in_channels, 3, 3});
    for (auto& v : w.data()) v = static_cast<float>(rng.normal() * stddev);
    store.add(layer.name + ".weight", std::move(w));
    store.add(layer.name + ".bias", Tensor({layer.out_channels}));
  }
  store.set_provenance("random he-normal seed=" + std::to_string(seed) + "; channel order RGB");
  return store;
}

}  // namespace fbp
