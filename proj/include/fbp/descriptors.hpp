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

#include <string_view>

#include "fbp/features.hpp"
#include "fbp/image.hpp"

namespace fbp {

// Hand-crafted baselines. All expect a single-channel 224 x 224 image.

enum class DescriptorKind { kHog, kLbp, kGray };

DescriptorKind parse_descriptor(std::string_view s);
std::string_view to_string(DescriptorKind k);

inline constexpr std::size_t kHogLength = 27 * 27 * 36;
inline constexpr std::size_t kLbpLength = 14 * 14 * 59;
inline constexpr std::size_t kGrayLength = 224 * 224;

/// Dalal-Triggs HOG: [-1, 0, 1] gradients, 9 unsigned orientation bins
/// (centres at 0, 20, ..., 160 degrees) with linear vote interpolation,
/// 8 x 8 cells, 2 x 2-cell blocks at 1-cell stride, L2-Hys (clip 0.2).
FeatureVector hog(const ImageBuffer& gray);

/// Uniform LBP(8, 1): neighbour >= centre sets the bit, neighbours taken
/// clockwise from the top-left; 58 uniform bins + 1 catch-all, raw counts
/// per 16 x 16 block over interior pixels.
FeatureVector lbp(const ImageBuffer& gray);

/// Row-major pixels standardised per image (zeros for a constant image).
FeatureVector gray_flatten(const ImageBuffer& gray);

FeatureVector describe(DescriptorKind kind, const ImageBuffer& gray);

/// Bin index (0..58) of an 8-bit LBP code.
int uniform_lbp_bin(unsigned code);

}  // namespace fbp
