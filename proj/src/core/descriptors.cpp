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

#include "fbp/descriptors.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <numbers>

#include "fbp/error.hpp"
#include "fbp/vgg.hpp"

namespace fbp {

namespace {

constexpr std::size_t kSide = kInputSide;
constexpr std::size_t kOrientations = 9;
constexpr std::size_t kCell = 8;
constexpr std::size_t kCells = kSide / kCell;  // 28
constexpr std::size_t kBlocks = kCells - 1;    // 27
constexpr double kHysClip = 0.2;
constexpr double kHysEps2 = 1e-12;

constexpr std::size_t kLbpBlock = 16;
constexpr std::size_t kLbpBlocks = kSide / kLbpBlock;  // 14
constexpr std::size_t kLbpBins = 59;

void require_gray_224(const ImageBuffer& img, const char* who) {
  if (img.channels() != 1 || img.height() != kSide || img.width() != kSide) {
    fail(ErrorKind::kShape, std::string(who) + ": expected a 1 x 224 x 224 gray image, got " +
                                std::to_string(img.channels()) + " x " + std::to_string(img.height()) +
                                " x " + std::to_string(img.width()));
  }
}

std::array<int, 256> build_uniform_table() {
  std::array<int, 256> table{};
  int next = 0;
  for (unsigned code = 0; code < 256; ++code) {
    const unsigned rotated = ((code << 1) | (code >> 7)) & 0xFFu;
    const int transitions = std::popcount(code ^ rotated);
    table[code] = transitions <= 2 ? next++ : 58;
  }
  return table;
}

void l2_hys(std::span<float> block) {
  auto renorm = [&] {
    double ss = 0.0;
    for (float v : block) ss += static_cast<double>(v) * v;
    const double inv = 1.0 / std::sqrt(ss + kHysEps2);
    for (auto& v : block) v = static_cast<float>(v * inv);
  };
  renorm();
  for (auto& v : block) v = std::min(v, static_cast<float>(kHysClip));
  renorm();
}

}  // namespace

DescriptorKind parse_descriptor(std::string_view s) {
  if (s == "hog") return DescriptorKind::kHog;
  if (s == "lbp") return DescriptorKind::kLbp;
  if (s == "gray") return DescriptorKind::kGray;
  fail(ErrorKind::kConfig, "unknown descriptor '" + std::string(s) + "' (hog, lbp, gray)");
}

std::string_view to_string(DescriptorKind k) {
  switch (k) {
    case DescriptorKind::kHog: return "hog";
    case DescriptorKind::kLbp: return "lbp";
    case DescriptorKind::kGray: return "gray";
  }
  return "?";
}

int uniform_lbp_bin(unsigned code) {
  static const std::array<int, 256> table = build_uniform_table();
  return table[code & 0xFFu];
}

FeatureVector hog(const ImageBuffer& gray) {
  require_gray_224(gray, "hog");
  std::vector<double> cells(kCells * kCells * kOrientations, 0.0);
  for (std::size_t y = 0; y < kSide; ++y) {
    for (std::size_t x = 0; x < kSide; ++x) {
      double gx = 0.0, gy = 0.0;
      if (x > 0 && x + 1 < kSide) gx = static_cast<double>(gray.at(0, y, x + 1)) - gray.at(0, y, x - 1);
      if (y > 0 && y + 1 < kSide) gy = static_cast<double>(gray.at(0, y + 1, x)) - gray.at(0, y - 1, x);
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
      if (angle < 0.0) angle += 180.0;
      if (angle >= 180.0) angle -= 180.0;
      const double pos = angle / (180.0 / kOrientations);
      const double lower = std::floor(pos);
      const double frac = pos - lower;
      const std::size_t b0 = static_cast<std::size_t>(lower) % kOrientations;
      const std::size_t b1 = (b0 + 1) % kOrientations;
      double* cell = &cells[((y / kCell) * kCells + x / kCell) * kOrientations];
      cell[b0] += mag * (1.0 - frac);
      cell[b1] += mag * frac;
    }
  }

  FeatureVector out;
  out.source = {"hog"};
  out.values.resize(kHogLength);
  constexpr std::size_t block_len = 4 * kOrientations;
  for (std::size_t by = 0; by < kBlocks; ++by) {
    for (std::size_t bx = 0; bx < kBlocks; ++bx) {
      std::span<float> block(out.values.data() + (by * kBlocks + bx) * block_len, block_len);
      std::size_t k = 0;
      for (std::size_t cy = by; cy < by + 2; ++cy) {
        for (std::size_t cx = bx; cx < bx + 2; ++cx) {
          for (std::size_t o = 0; o < kOrientations; ++o) {
            block[k++] = static_cast<float>(cells[(cy * kCells + cx) * kOrientations + o]);
          }
        }
      }
      l2_hys(block);
    }
  }
  return out;
}

FeatureVector lbp(const ImageBuffer& gray) {
  require_gray_224(gray, "lbp");
  static constexpr int kDy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
  static constexpr int kDx[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
  FeatureVector out;
  out.source = {"lbp"};
  out.values.assign(kLbpLength, 0.0f);
  for (std::size_t y = 1; y + 1 < kSide; ++y) {
    for (std::size_t x = 1; x + 1 < kSide; ++x) {
      const float centre = gray.at(0, y, x);
      unsigned code = 0;
      for (unsigned i = 0; i < 8; ++i) {
        const float n = gray.at(0, static_cast<std::size_t>(static_cast<int>(y) + kDy[i]),
                                static_cast<std::size_t>(static_cast<int>(x) + kDx[i]));
        if (n >= centre) code |= 1u << i;
      }
      const std::size_t block = (y / kLbpBlock) * kLbpBlocks + x / kLbpBlock;
      out.values[block * kLbpBins + static_cast<std::size_t>(uniform_lbp_bin(code))] += 1.0f;
    }
  }
  return out;
}

FeatureVector gray_flatten(const ImageBuffer& gray) {
  require_gray_224(gray, "gray_flatten");
  const auto& px = gray.pixels();
  double sum = 0.0;
  for (float v : px) sum += v;
  const double mean = sum / static_cast<double>(px.size());
  double ss = 0.0;
  for (float v : px) ss += (v - mean) * (v - mean);
  const double stddev = std::sqrt(ss / static_cast<double>(px.size()));
  FeatureVector out;
  out.source = {"gray"};
  out.values.assign(px.size(), 0.0f);
  if (stddev >= 1e-8) {
    for (std::size_t i = 0; i < px.size(); ++i) out.values[i] = static_cast<float>((px[i] - mean) / stddev);
  }
  return out;
}

FeatureVector describe(DescriptorKind kind, const ImageBuffer& gray) {
  switch (kind) {
    case DescriptorKind::kHog: return hog(gray);
    case DescriptorKind::kLbp: return lbp(gray);
    case DescriptorKind::kGray: return gray_flatten(gray);
  }
  fail(ErrorKind::kConfig, "unknown descriptor");
}

}  // namespace fbp
