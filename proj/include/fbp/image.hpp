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

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fbp/tensor.hpp"

namespace fbp {

/// Decoded raster, channels-first, values in [0, 255].
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(std::size_t channels, std::size_t height, std::size_t width, float fill = 0.0f);
  ImageBuffer(std::size_t channels, std::size_t height, std::size_t width, std::vector<float> pixels);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  bool empty() const noexcept { return pixels_.empty(); }

  float& at(std::size_t c, std::size_t y, std::size_t x) { return pixels_[(c * height_ + y) * width_ + x]; }
  float at(std::size_t c, std::size_t y, std::size_t x) const { return pixels_[(c * height_ + y) * width_ + x]; }

  std::vector<float>& pixels() noexcept { return pixels_; }
  const std::vector<float>& pixels() const noexcept { return pixels_; }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<float> pixels_;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct BoundingBox {
  double left = 0.0;
  double top = 0.0;
  double width = 0.0;
  double height = 0.0;
};

/// Externally detected face geometry for one image. Every part is optional.
struct FaceAnnotation {
  std::optional<BoundingBox> bbox;
  std::vector<Point> landmarks;  // empty or exactly 68
  std::optional<Point> left_eye;   // image-left
  std::optional<Point> right_eye;  // image-right
};

enum class SquareMode { kCrop, kWarp, kPadding };
enum class Alignment { kNone, kEyes };

struct PreprocessConfig {
  SquareMode mode = SquareMode::kCrop;
  Alignment alignment = Alignment::kNone;
};

SquareMode parse_square_mode(std::string_view s);
Alignment parse_alignment(std::string_view s);
std::string_view to_string(SquareMode m);
std::string_view to_string(Alignment a);

/// 8-bit PNG/JPEG (or anything OpenCV reads), as 1 or 3 channels RGB.
ImageBuffer decode_image(const std::filesystem::path& path);
/// Writes an 8-bit PNG, rounding and clamping to [0, 255].
void write_png(const ImageBuffer& img, const std::filesystem::path& path);

ImageBuffer gray_to_rgb(const ImageBuffer& img);
/// ITU-R 601 luma; single-channel input is returned as is.
ImageBuffer to_gray(const ImageBuffer& img);

/// Half-pixel-centred bilinear resampling, source taps clamped to the border.
ImageBuffer resize_bilinear(const ImageBuffer& img, std::size_t new_height, std::size_t new_width);

/// Square region around the face box (side = longer box side, clamped to the
/// image), or the centred min(H, W) square without a box; resized to 224.
ImageBuffer square_crop(const ImageBuffer& img, const FaceAnnotation* ann);
ImageBuffer square_warp(const ImageBuffer& img);
/// Longer side to 224, shorter side zero-padded; the trailing side takes the
/// odd pixel.
ImageBuffer square_pad(const ImageBuffer& img);

/// Rotation about the image centre by `radians` (image coordinates, y down),
/// inverse-mapped with bilinear sampling and zero fill.
ImageBuffer rotate(const ImageBuffer& img, double radians);
/// Where rotate() sends `p`.
Point rotate_point(Point p, std::size_t height, std::size_t width, double radians);

/// Angle of the eye line to the horizontal, atan2(dy, dx), in radians.
double eye_angle(Point left_eye, Point right_eye);

struct AlignedFace {
  ImageBuffer image;
  FaceAnnotation annotation;  // geometry moved along with the pixels
  double angle = 0.0;         // eye angle that was removed
};

/// Levels the eye line. Without both eyes the input comes back untouched.
AlignedFace rotate_align(const ImageBuffer& img, const FaceAnnotation& ann);

/// Per-image standardisation over all pixels and channels (population std).
/// A near-constant image (std < 1e-8) maps to zeros.
Tensor normalize(const ImageBuffer& img);

/// Squared, 224 x 224, 3-channel image before standardisation.
ImageBuffer preprocess_square(const ImageBuffer& img, const FaceAnnotation* ann, const PreprocessConfig& config);
/// Network input: preprocess_square followed by normalize.
Tensor preprocess(const ImageBuffer& img, const FaceAnnotation* ann, const PreprocessConfig& config);

}  // namespace fbp
