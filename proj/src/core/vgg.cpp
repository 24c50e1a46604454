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

#include "fbp/vgg.hpp"

#include <Eigen/Core>
#include <algorithm>

#include "fbp/error.hpp"
#include "fbp/weights.hpp"

namespace fbp {

namespace {

using RowMatrixXf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<LayerSpec> build_plan() {
  std::vector<LayerSpec> plan;
  const std::size_t widths[] = {64, 128, 256, 512, 512};
  const int convs_per_block[] = {2, 2, 3, 3, 3};
  std::size_t in = 3;
  for (int b = 0; b < 5; ++b) {
    for (int c = 0; c < convs_per_block[b]; ++c) {
      plan.push_back({"conv" + std::to_string(b + 1) + "_" + std::to_string(c + 1),
                      LayerKind::kConv, in, widths[b]});
      in = widths[b];
    }
    plan.push_back({"pool" + std::to_string(b + 1), LayerKind::kPool, in, in});
  }
  return plan;
}

// Upper bound on im2col scratch, in floats.
constexpr std::size_t kColumnBudget = std::size_t{1} << 22;

}  // namespace

const std::vector<LayerSpec>& vgg16_plan() {
  static const std::vector<LayerSpec> plan = build_plan();
  return plan;
}

int plan_index(std::string_view name) {
  const auto& plan = vgg16_plan();
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (plan[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

bool is_conv_layer(std::string_view name) {
  const int i = plan_index(name);
  return i >= 0 && vgg16_plan()[static_cast<std::size_t>(i)].kind == LayerKind::kConv;
}

bool is_tap_name(std::string_view name) { return plan_index(name) >= 0; }

Shape tap_shape(std::string_view tap) {
  const int idx = plan_index(tap);
  if (idx < 0) fail(ErrorKind::kConfig, "unknown tap '" + std::string(tap) + "'");
  std::size_t side = kInputSide;
  const auto& plan = vgg16_plan();
  for (int i = 0; i <= idx; ++i) {
    if (plan[static_cast<std::size_t>(i)].kind == LayerKind::kPool) side /= 2;
  }
  return {plan[static_cast<std::size_t>(idx)].out_channels, side, side};
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  if (input.rank() != 3) fail(ErrorKind::kShape, "conv2d: input must be C x H x W, got " + shape_string(input.shape()));
  if (weight.rank() != 4 || weight.extent(2) != 3 || weight.extent(3) != 3) {
    fail(ErrorKind::kShape, "conv2d: weight must be O x C x 3 x 3, got " + shape_string(weight.shape()));
  }
  const std::size_t channels = input.extent(0), height = input.extent(1), width = input.extent(2);
  const std::size_t out_channels = weight.extent(0);
  if (weight.extent(1) != channels) {
    fail(ErrorKind::kShape, "conv2d: input has " + std::to_string(channels) +
                                " channels, weight expects " + std::to_string(weight.extent(1)));
  }
  if (bias.size() != out_channels) {
    fail(ErrorKind::kShape, "conv2d: bias length " + std::to_string(bias.size()) +
                                " != out channels " + std::to_string(out_channels));
  }

  const std::size_t k = channels * 9;
  const std::size_t plane = height * width;
  Tensor output({out_channels, height, width});

  // O x (C*9) row-major is exactly the O x C x 3 x 3 layout.
  Eigen::Map<const RowMatrixXf> kernel(weight.data().data(), static_cast<Eigen::Index>(out_channels),
                                       static_cast<Eigen::Index>(k));
  const float* in = input.data().data();
  float* out = output.data().data();

  const std::size_t band_rows = std::clamp<std::size_t>(kColumnBudget / (k * width), 1, height);
  RowMatrixXf columns(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(band_rows * width));

  for (std::size_t y0 = 0; y0 < height; y0 += band_rows) {
    const std::size_t rows = std::min(band_rows, height - y0);
    const std::size_t pixels = rows * width;
    for (std::size_t c = 0; c < channels; ++c) {
      const float* src = in + c * plane;
      for (std::size_t dy = 0; dy < 3; ++dy) {
        for (std::size_t dx = 0; dx < 3; ++dx) {
          float* dst = columns.data() + (c * 9 + dy * 3 + dx) * static_cast<std::size_t>(columns.cols());
          for (std::size_t r = 0; r < rows; ++r) {
            const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y0 + r + dy) - 1;
            float* row = dst + r * width;
            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(height)) {
              std::fill(row, row + width, 0.0f);
              continue;
            }
            const float* srow = src + static_cast<std::size_t>(sy) * width;
            // x + dx - 1 in [0, width)
            if (dx == 0) {
              row[0] = 0.0f;
              std::copy(srow, srow + width - 1, row + 1);
            } else if (dx == 1) {
              std::copy(srow, srow + width, row);
            } else {
              std::copy(srow + 1, srow + width, row);
              row[width - 1] = 0.0f;
            }
          }
        }
      }
    }
    Eigen::Map<RowMatrixXf, 0, Eigen::OuterStride<>> result(
        out + y0 * width, static_cast<Eigen::Index>(out_channels), static_cast<Eigen::Index>(pixels),
        Eigen::OuterStride<>(static_cast<Eigen::Index>(plane)));
    result.noalias() = kernel * columns.leftCols(static_cast<Eigen::Index>(pixels));
  }

  for (std::size_t o = 0; o < out_channels; ++o) {
    const float b = bias.data()[o];
    float* p = out + o * plane;
    for (std::size_t i = 0; i < plane; ++i) p[i] += b;
  }
  return output;
}

Tensor relu(Tensor input) {
  for (auto& v : input.data()) v = std::max(v, 0.0f);
  return input;
}

Tensor maxpool2(const Tensor& input) {
  if (input.rank() != 3) fail(ErrorKind::kShape, "maxpool2: input must be C x H x W, got " + shape_string(input.shape()));
  const std::size_t channels = input.extent(0), height = input.extent(1), width = input.extent(2);
  if (height % 2 != 0 || width % 2 != 0) {
    fail(ErrorKind::kShape, "maxpool2: spatial extents must be even, got " + shape_string(input.shape()));
  }
  Tensor output({channels, height / 2, width / 2});
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < height / 2; ++y) {
      for (std::size_t x = 0; x < width / 2; ++x) {
        output.at(c, y, x) = std::max(std::max(input.at(c, 2 * y, 2 * x), input.at(c, 2 * y, 2 * x + 1)),
                                      std::max(input.at(c, 2 * y + 1, 2 * x), input.at(c, 2 * y + 1, 2 * x + 1)));
      }
    }
  }
  return output;
}

TapList forward_taps(const Tensor& image, const WeightStore& weights,
                     std::span<const std::string> taps, const TapOptions& options) {
  int deepest = -1;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const int idx = plan_index(taps[i]);
    if (idx < 0) fail(ErrorKind::kConfig, "unknown tap '" + taps[i] + "'");
    for (std::size_t j = 0; j < i; ++j) {
      if (taps[j] == taps[i]) fail(ErrorKind::kConfig, "duplicate tap '" + taps[i] + "'");
    }
    deepest = std::max(deepest, idx);
  }
  if (image.shape() != Shape{3, kInputSide, kInputSide}) {
    fail(ErrorKind::kShape, "forward_taps: input must be 3 x 224 x 224, got " + shape_string(image.shape()));
  }
  const auto& plan = vgg16_plan();
  for (int i = 0; i <= deepest; ++i) {
    const LayerSpec& layer = plan[static_cast<std::size_t>(i)];
    if (layer.kind != LayerKind::kConv) continue;
    weights.get(layer.name + ".weight");
    weights.get(layer.name + ".bias");
  }

  TapList result;
  result.reserve(taps.size());
  for (const auto& t : taps) result.emplace_back(t, Tensor{});

  auto capture = [&](const std::string& name, const Tensor& value) {
    for (auto& [tap, tensor] : result) {
      if (tap == name) tensor = value;
    }
  };

  Tensor x = image;
  for (int i = 0; i <= deepest; ++i) {
    const LayerSpec& layer = plan[static_cast<std::size_t>(i)];
    if (layer.kind == LayerKind::kConv) {
      x = conv2d(x, weights.get(layer.name + ".weight"), weights.get(layer.name + ".bias"));
      if (!options.post_relu) capture(layer.name, x);
      x = relu(std::move(x));
      if (options.post_relu) capture(layer.name, x);
    } else {
      x = maxpool2(x);
      capture(layer.name, x);
    }
  }
  return result;
}

}  // namespace fbp
