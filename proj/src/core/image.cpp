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

#include "fbp/image.hpp"

#include <algorithm>
#include <cmath>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "fbp/error.hpp"
#include "fbp/vgg.hpp"

namespace fbp {

ImageBuffer::ImageBuffer(std::size_t channels, std::size_t height, std::size_t width, float fill)
    : ImageBuffer(channels, height, width, std::vector<float>(channels * height * width, fill)) {}

ImageBuffer::ImageBuffer(std::size_t channels, std::size_t height, std::size_t width,
                         std::vector<float> pixels)
    : channels_(channels), height_(height), width_(width), pixels_(std::move(pixels)) {
  if (channels != 1 && channels != 3) {
    fail(ErrorKind::kShape, "image must have 1 or 3 channels, got " + std::to_string(channels));
  }
  if (height == 0 || width == 0) fail(ErrorKind::kShape, "image extents must be >= 1");
  if (pixels_.size() != channels * height * width) {
    fail(ErrorKind::kShape, "image pixel count does not match its extents");
  }
}

SquareMode parse_square_mode(std::string_view s) {
  if (s == "crop") return SquareMode::kCrop;
  if (s == "warp") return SquareMode::kWarp;
  if (s == "padding") return SquareMode::kPadding;
  fail(ErrorKind::kConfig, "unknown preprocessing mode '" + std::string(s) + "' (crop, warp, padding)");
}

Alignment parse_alignment(std::string_view s) {
  if (s == "none") return Alignment::kNone;
  if (s == "eyes") return Alignment::kEyes;
  fail(ErrorKind::kConfig, "unknown alignment '" + std::string(s) + "' (none, eyes)");
}

std::string_view to_string(SquareMode m) {
  switch (m) {
    case SquareMode::kCrop: return "crop";
    case SquareMode::kWarp: return "warp";
    case SquareMode::kPadding: return "padding";
  }
  return "?";
}

std::string_view to_string(Alignment a) { return a == Alignment::kEyes ? "eyes" : "none"; }

ImageBuffer decode_image(const std::filesystem::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) fail(ErrorKind::kIngestion, "cannot decode image " + path.string());
  if (m.depth() == CV_16U) {
    m.convertTo(m, CV_8U, 1.0 / 257.0);
  } else if (m.depth() != CV_8U) {
    fail(ErrorKind::kIngestion, "unsupported pixel depth in " + path.string());
  }
  const int src_channels = m.channels();
  if (src_channels != 1 && src_channels != 3 && src_channels != 4) {
    fail(ErrorKind::kIngestion, "unsupported channel count in " + path.string());
  }
  const std::size_t h = static_cast<std::size_t>(m.rows), w = static_cast<std::size_t>(m.cols);
  const std::size_t channels = src_channels == 1 ? 1 : 3;
  ImageBuffer img(channels, h, w);
  for (std::size_t y = 0; y < h; ++y) {
    const std::uint8_t* row = m.ptr<std::uint8_t>(static_cast<int>(y));
    for (std::size_t x = 0; x < w; ++x) {
      const std::uint8_t* px = row + x * static_cast<std::size_t>(src_channels);
      if (channels == 1) {
        img.at(0, y, x) = px[0];
      } else {
        // OpenCV stores BGR(A).
        img.at(0, y, x) = px[2];
        img.at(1, y, x) = px[1];
        img.at(2, y, x) = px[0];
      }
    }
  }
  return img;
}

void write_png(const ImageBuffer& img, const std::filesystem::path& path) {
  const int type = img.channels() == 1 ? CV_8UC1 : CV_8UC3;
  cv::Mat m(static_cast<int>(img.height()), static_cast<int>(img.width()), type);
  for (std::size_t y = 0; y < img.height(); ++y) {
    std::uint8_t* row = m.ptr<std::uint8_t>(static_cast<int>(y));
    for (std::size_t x = 0; x < img.width(); ++x) {
      for (std::size_t c = 0; c < img.channels(); ++c) {
        const float v = std::clamp(std::round(img.at(c, y, x)), 0.0f, 255.0f);
        const std::size_t dst_c = img.channels() == 1 ? 0 : 2 - c;
        row[x * img.channels() + dst_c] = static_cast<std::uint8_t>(v);
      }
    }
  }
  if (!cv::imwrite(path.string(), m)) fail(ErrorKind::kIo, "cannot write image " + path.string());
}

ImageBuffer gray_to_rgb(const ImageBuffer& img) {
  if (img.channels() == 3) return img;
  std::vector<float> px;
  px.reserve(3 * img.pixels().size());
  for (int c = 0; c < 3; ++c) px.insert(px.end(), img.pixels().begin(), img.pixels().end());
  return ImageBuffer(3, img.height(), img.width(), std::move(px));
}

ImageBuffer to_gray(const ImageBuffer& img) {
  if (img.channels() == 1) return img;
  ImageBuffer out(1, img.height(), img.width());
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      out.at(0, y, x) = 0.299f * img.at(0, y, x) + 0.587f * img.at(1, y, x) + 0.114f * img.at(2, y, x);
    }
  }
  return out;
}

namespace {

struct Tap {
  std::size_t lo;
  std::size_t hi;
  float frac;
};

std::vector<Tap> sampling_taps(std::size_t src, std::size_t dst) {
  std::vector<Tap> taps(dst);
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  for (std::size_t i = 0; i < dst; ++i) {
    double s = (static_cast<double>(i) + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    const auto lo = static_cast<std::size_t>(std::floor(s));
    const std::size_t hi = std::min(lo + 1, src - 1);
    taps[i] = {lo, hi, static_cast<float>(s - static_cast<double>(lo))};
  }
  return taps;
}

// Integer-pixel sub-rectangle.
ImageBuffer extract_region(const ImageBuffer& img, std::size_t top, std::size_t left,
                           std::size_t height, std::size_t width) {
  ImageBuffer out(img.channels(), height, width);
  for (std::size_t c = 0; c < img.channels(); ++c) {
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) out.at(c, y, x) = img.at(c, top + y, left + x);
    }
  }
  return out;
}

float sample_zero_fill(const ImageBuffer& img, std::size_t c, double sx, double sy) {
  const double fx0 = std::floor(sx), fy0 = std::floor(sy);
  const double fx = sx - fx0, fy = sy - fy0;
  const auto x0 = static_cast<std::ptrdiff_t>(fx0), y0 = static_cast<std::ptrdiff_t>(fy0);
  const auto w = static_cast<std::ptrdiff_t>(img.width()), h = static_cast<std::ptrdiff_t>(img.height());
  auto px = [&](std::ptrdiff_t x, std::ptrdiff_t y) -> double {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0.0;
    return img.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
  };
  const double top = px(x0, y0) * (1.0 - fx) + px(x0 + 1, y0) * fx;
  const double bottom = px(x0, y0 + 1) * (1.0 - fx) + px(x0 + 1, y0 + 1) * fx;
  return static_cast<float>(top * (1.0 - fy) + bottom * fy);
}

}  // namespace

ImageBuffer resize_bilinear(const ImageBuffer& img, std::size_t new_height, std::size_t new_width) {
  if (new_height == 0 || new_width == 0) fail(ErrorKind::kShape, "resize target extents must be >= 1");
  if (new_height == img.height() && new_width == img.width()) return img;
  const auto ys = sampling_taps(img.height(), new_height);
  const auto xs = sampling_taps(img.width(), new_width);
  ImageBuffer out(img.channels(), new_height, new_width);
  for (std::size_t c = 0; c < img.channels(); ++c) {
    for (std::size_t y = 0; y < new_height; ++y) {
      const Tap& ty = ys[y];
      for (std::size_t x = 0; x < new_width; ++x) {
        const Tap& tx = xs[x];
        const float top = img.at(c, ty.lo, tx.lo) * (1.0f - tx.frac) + img.at(c, ty.lo, tx.hi) * tx.frac;
        const float bottom = img.at(c, ty.hi, tx.lo) * (1.0f - tx.frac) + img.at(c, ty.hi, tx.hi) * tx.frac;
        out.at(c, y, x) = top * (1.0f - ty.frac) + bottom * ty.frac;
      }
    }
  }
  return out;
}

ImageBuffer square_crop(const ImageBuffer& img, const FaceAnnotation* ann) {
  const std::size_t h = img.height(), w = img.width();
  const std::size_t max_side = std::min(h, w);
  std::size_t side = max_side;
  std::size_t left = (w - side) / 2;
  std::size_t top = (h - side) / 2;
  if (ann && ann->bbox && ann->bbox->width > 0 && ann->bbox->height > 0) {
    const BoundingBox& b = *ann->bbox;
    const double cx = b.left + b.width / 2.0;
    const double cy = b.top + b.height / 2.0;
    const double want = std::round(std::max(b.width, b.height));
    side = static_cast<std::size_t>(std::clamp(want, 1.0, static_cast<double>(max_side)));
    const double l = std::round(cx - static_cast<double>(side) / 2.0);
    const double t = std::round(cy - static_cast<double>(side) / 2.0);
    left = static_cast<std::size_t>(std::clamp(l, 0.0, static_cast<double>(w - side)));
    top = static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(h - side)));
  }
  return resize_bilinear(gray_to_rgb(extract_region(img, top, left, side, side)), kInputSide, kInputSide);
}

ImageBuffer square_warp(const ImageBuffer& img) {
  return resize_bilinear(gray_to_rgb(img), kInputSide, kInputSide);
}

ImageBuffer square_pad(const ImageBuffer& img) {
  const std::size_t h = img.height(), w = img.width();
  const std::size_t longer = std::max(h, w);
  auto scaled = [&](std::size_t extent) {
    const double v = std::round(static_cast<double>(extent) * static_cast<double>(kInputSide) /
                                static_cast<double>(longer));
    return static_cast<std::size_t>(std::clamp(v, 1.0, static_cast<double>(kInputSide)));
  };
  const std::size_t nh = scaled(h), nw = scaled(w);
  const ImageBuffer resized = resize_bilinear(gray_to_rgb(img), nh, nw);
  const std::size_t top = (kInputSide - nh) / 2;
  const std::size_t left = (kInputSide - nw) / 2;
  ImageBuffer out(3, kInputSide, kInputSide);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < nh; ++y) {
      for (std::size_t x = 0; x < nw; ++x) out.at(c, top + y, left + x) = resized.at(c, y, x);
    }
  }
  return out;
}

Point rotate_point(Point p, std::size_t height, std::size_t width, double radians) {
  const double cx = (static_cast<double>(width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(height) - 1.0) / 2.0;
  const double c = std::cos(radians), s = std::sin(radians);
  const double dx = p.x - cx, dy = p.y - cy;
  return {cx + c * dx - s * dy, cy + s * dx + c * dy};
}

ImageBuffer rotate(const ImageBuffer& img, double radians) {
  if (radians == 0.0) return img;
  const double cx = (static_cast<double>(img.width()) - 1.0) / 2.0;
  const double cy = (static_cast<double>(img.height()) - 1.0) / 2.0;
  const double c = std::cos(radians), s = std::sin(radians);
  ImageBuffer out(img.channels(), img.height(), img.width());
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      // inverse of the forward rotation
      const double sx = cx + c * dx + s * dy;
      const double sy = cy - s * dx + c * dy;
      for (std::size_t ch = 0; ch < img.channels(); ++ch) out.at(ch, y, x) = sample_zero_fill(img, ch, sx, sy);
    }
  }
  return out;
}

double eye_angle(Point left_eye, Point right_eye) {
  return std::atan2(right_eye.y - left_eye.y, right_eye.x - left_eye.x);
}

AlignedFace rotate_align(const ImageBuffer& img, const FaceAnnotation& ann) {
  if (!ann.left_eye || !ann.right_eye) return {img, ann, 0.0};
  const double theta = eye_angle(*ann.left_eye, *ann.right_eye);
  if (theta == 0.0) return {img, ann, 0.0};
  const double phi = -theta;
  AlignedFace out{rotate(img, phi), ann, theta};
  auto move = [&](Point p) { return rotate_point(p, img.height(), img.width(), phi); };
  out.annotation.left_eye = move(*ann.left_eye);
  out.annotation.right_eye = move(*ann.right_eye);
  for (auto& p : out.annotation.landmarks) p = move(p);
  if (ann.bbox) {
    const BoundingBox& b = *ann.bbox;
    const Point centre = move({b.left + b.width / 2.0, b.top + b.height / 2.0});
    out.annotation.bbox = BoundingBox{centre.x - b.width / 2.0, centre.y - b.height / 2.0, b.width, b.height};
  }
  return out;
}

Tensor normalize(const ImageBuffer& img) {
  const auto& px = img.pixels();
  const double n = static_cast<double>(px.size());
  double sum = 0.0;
  for (float v : px) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (float v : px) ss += (v - mean) * (v - mean);
  const double stddev = std::sqrt(ss / n);
  std::vector<float> out(px.size(), 0.0f);
  if (stddev >= 1e-8) {
    for (std::size_t i = 0; i < px.size(); ++i) out[i] = static_cast<float>((px[i] - mean) / stddev);
  }
  return Tensor({img.channels(), img.height(), img.width()}, std::move(out));
}

ImageBuffer preprocess_square(const ImageBuffer& img, const FaceAnnotation* ann, const PreprocessConfig& config) {
  const ImageBuffer rgb = gray_to_rgb(img);
  const ImageBuffer* source = &rgb;
  const FaceAnnotation* geometry = ann;
  AlignedFace aligned;
  if (config.alignment == Alignment::kEyes && ann) {
    aligned = rotate_align(rgb, *ann);
    source = &aligned.image;
    geometry = &aligned.annotation;
  }
  switch (config.mode) {
    case SquareMode::kCrop: return square_crop(*source, geometry);
    case SquareMode::kWarp: return square_warp(*source);
    case SquareMode::kPadding: return square_pad(*source);
  }
  fail(ErrorKind::kConfig, "unknown preprocessing mode");
}

Tensor preprocess(const ImageBuffer& img, const FaceAnnotation* ann, const PreprocessConfig& config) {
  return normalize(preprocess_square(img, ann, config));
}

}  // namespace fbp
