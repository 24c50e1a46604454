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

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fbp/tensor.hpp"

namespace fbp {

class WeightStore;

/// Side length of the network input.
inline constexpr std::size_t kInputSide = 224;

enum class LayerKind { kConv, kPool };

struct LayerSpec {
  std::string name;
  LayerKind kind;
  std::size_t in_channels;
  std::size_t out_channels;
};

/// The VGG16 convolutional stack: 13 convs (each followed by ReLU) and five
/// 2x2 max pools. Fully-connected layers are not part of the plan.
const std::vector<LayerSpec>& vgg16_plan();

/// Index of `name` in vgg16_plan(), or -1.
int plan_index(std::string_view name);

bool is_conv_layer(std::string_view name);
bool is_tap_name(std::string_view name);

/// Shape of a tap's activation for a 3 x 224 x 224 input.
Shape tap_shape(std::string_view tap);

// Layer primitives. Stride 1, zero padding 1 for conv; 2x2 stride 2 for pool.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias);
Tensor relu(Tensor input);
Tensor maxpool2(const Tensor& input);

struct TapOptions {
  /// Conv taps are taken after the ReLU unless this is false.
  bool post_relu = true;
};

using TapList = std::vector<std::pair<std::string, Tensor>>;

/// Runs the stack up to the deepest requested tap and returns the tapped
/// activations in the order requested.
TapList forward_taps(const Tensor& image, const WeightStore& weights,
                     std::span<const std::string> taps, const TapOptions& options = {});

}  // namespace fbp
