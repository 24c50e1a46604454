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

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fbp/features.hpp"
#include "fbp/vgg.hpp"

namespace fbp {

/// Tap presets: low+high fusion for cropped portraits, and the two deepest
/// conv maps for in-the-wild faces.
inline const std::vector<std::string> kPortraitTaps = {"conv4_1", "conv5_1"};
inline const std::vector<std::string> kWildTaps = {"conv5_2", "conv5_3"};

/// Flattens each tap (channel-major) and concatenates them in list order.
FeatureVector fuse_taps(const TapList& taps, bool post_relu = true);

/// Sum of tap element counts for a 224 x 224 input.
std::size_t fused_dim(std::span<const std::string> taps);

using LayerSweep = std::vector<std::pair<std::string, std::vector<FeatureVector>>>;

/// One forward pass per image with every listed layer tapped; returns one
/// single-tap feature set per layer, in list order.
LayerSweep layer_sweep_features(std::span<const Tensor> images, const WeightStore& weights,
                                std::span<const std::string> layers, const TapOptions& options = {});

}  // namespace fbp
