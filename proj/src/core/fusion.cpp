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

#include "fbp/fusion.hpp"

#include "binary_io.hpp"
#include "fbp/error.hpp"
#include "json.hpp"

namespace fbp {

FeatureVector fuse_taps(const TapList& taps, bool post_relu) {
  if (taps.empty()) fail(ErrorKind::kConfig, "fuse_taps: at least one tap is required");
  std::size_t total = 0;
  for (const auto& [name, t] : taps) total += t.size();
  FeatureVector out;
  out.post_relu = post_relu;
  out.values.reserve(total);
  for (const auto& [name, t] : taps) {
    out.values.insert(out.values.end(), t.values().begin(), t.values().end());
    out.source.push_back(name);
  }
  return out;
}

std::size_t fused_dim(std::span<const std::string> taps) {
  std::size_t total = 0;
  for (const auto& t : taps) total += element_count(tap_shape(t));
  return total;
}

LayerSweep layer_sweep_features(std::span<const Tensor> images, const WeightStore& weights,
                                std::span<const std::string> layers, const TapOptions& options) {
  LayerSweep sweep;
  if (layers.empty()) return sweep;
  for (const auto& l : layers) sweep.emplace_back(l, std::vector<FeatureVector>{});
  for (const Tensor& image : images) {
    TapList taps = forward_taps(image, weights, layers, options);
    for (std::size_t i = 0; i < taps.size(); ++i) {
      TapList single;
      single.push_back(std::move(taps[i]));
      sweep[i].second.push_back(fuse_taps(single, options.post_relu));
    }
  }
  return sweep;
}

// ---- FMX1 -----------------------------------------------------------------

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<float> data,
                             std::vector<std::string> ids)
    : rows_(rows), cols_(cols), data_(std::move(data)), ids_(std::move(ids)) {
  if (data_.size() != rows_ * cols_) fail(ErrorKind::kShape, "feature matrix data does not match rows x cols");
  if (ids_.size() != rows_) fail(ErrorKind::kShape, "feature matrix needs one id per row");
}

std::ptrdiff_t FeatureMatrix::find(const std::string& id) const {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] == id) return static_cast<std::ptrdiff_t>(i);
  }
  return -1;
}

namespace {
constexpr std::string_view kMatrixMagic = "FMX1";
}

std::vector<std::uint8_t> serialize_matrix(const FeatureMatrix& m) {
  detail::ByteWriter w;
  w.raw(kMatrixMagic);
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  w.f32s(m.data());
  w.str(nlohmann::json(m.ids()).dump());
  return std::move(w).take();
}

FeatureMatrix parse_matrix(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  if (offset > bytes.size()) fail(ErrorKind::kFormat, "FMX1: offset past end");
  detail::ByteReader r(bytes.subspan(offset), "FMX1");
  if (r.remaining() < 4 || r.raw(4) != kMatrixMagic) fail(ErrorKind::kFormat, "FMX1: bad magic");
  const std::size_t rows = r.u32();
  const std::size_t cols = r.u32();
  if (rows != 0 && cols > r.remaining() / 4 / rows) fail(ErrorKind::kFormat, "FMX1: payload truncated");
  std::vector<float> data(rows * cols);
  r.f32s(data);
  const std::string ids_json = r.str();
  std::vector<std::string> ids;
  try {
    ids = nlohmann::json::parse(ids_json).get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("FMX1: bad id list: ") + e.what());
  }
  if (ids.size() != rows) {
    fail(ErrorKind::kFormat, "FMX1: " + std::to_string(ids.size()) + " ids for " + std::to_string(rows) + " rows");
  }
  offset += r.position();
  return FeatureMatrix(rows, cols, std::move(data), std::move(ids));
}

FeatureMatrix parse_matrix(std::span<const std::uint8_t> bytes) {
  std::size_t offset = 0;
  FeatureMatrix m = parse_matrix(bytes, offset);
  if (offset != bytes.size()) fail(ErrorKind::kFormat, "FMX1: trailing bytes");
  return m;
}

FeatureMatrix load_matrix(const std::filesystem::path& path) { return parse_matrix(detail::read_file(path)); }

void save_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
  detail::write_file(path, serialize_matrix(m));
}

}  // namespace fbp
