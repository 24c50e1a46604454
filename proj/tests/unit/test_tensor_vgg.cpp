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

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "fbp/fusion.hpp"
#include "fbp/tensor.hpp"
#include "fbp/vgg.hpp"
#include "fbp/weights.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using fbp::ErrorKind;
using fbp::Shape;
using fbp::Tensor;

namespace {

double max_abs_diff(std::span<const float> a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

Tensor random_tensor(std::mt19937_64& rng, Shape shape, float lo = -1.0f, float hi = 1.0f) {
  const auto n = fbp::element_count(shape);
  return Tensor(std::move(shape), oracle::random_floats(rng, n, lo, hi));
}

// One shared random network; generation is the expensive part.
const fbp::WeightStore& network() {
  static const fbp::WeightStore store = fbp::generate_random_weights(7);
  return store;
}

Tensor random_image(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_tensor(rng, {3, fbp::kInputSide, fbp::kInputSide});
}

}  // namespace

TEST_CASE("tensor construction validates shape and data length") {
  CHECK(Tensor({2, 3, 4}).size() == 24);
  CHECK(fbp::shape_string({512, 28, 28}) == "(512,28,28)");
  CHECK_THROWS_KIND(Tensor({2, 0, 4}), ErrorKind::kShape);
  CHECK_THROWS_KIND(Tensor({2, 2}, std::vector<float>(3)), ErrorKind::kShape);
}

TEST_CASE("conv2d matches the nested-loop oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t c = 1 + rng() % 6, o = 1 + rng() % 6, h = 1 + rng() % 8, w = 1 + rng() % 8;
    const auto in = random_tensor(rng, {c, h, w});
    const auto k = random_tensor(rng, {o, c, 3, 3});
    const auto b = random_tensor(rng, {o});
    const auto got = fbp::conv2d(in, k, b);
    REQUIRE(got.shape() == Shape{o, h, w});
    const auto want = oracle::conv3x3(in.values(), c, h, w, k.values(), b.values(), o);
    CHECK(max_abs_diff(got.data(), want) < 1e-5);
  }
}

TEST_CASE("conv2d with a centre-only kernel is a per-pixel channel mix") {
  // Kernel with only the centre tap set: out[o] = sum_c k[o][c] * in[c] + b[o].
  Tensor in({2, 2, 2}, {1, 2, 3, 4, 10, 20, 30, 40});
  Tensor k({1, 2, 3, 3});
  k.data()[4] = 2.0f;       // channel 0 centre
  k.data()[9 + 4] = -1.0f;  // channel 1 centre
  const auto out = fbp::conv2d(in, k, Tensor({1}, {0.5f}));
  CHECK(out.values() == std::vector<float>{2 - 10 + 0.5f, 4 - 20 + 0.5f, 6 - 30 + 0.5f, 8 - 40 + 0.5f});
}

TEST_CASE("conv2d zero padding: all-ones kernel sums the 3x3 neighbourhood") {
  Tensor in({1, 3, 3}, std::vector<float>(9, 1.0f));
  Tensor k({1, 1, 3, 3}, std::vector<float>(9, 1.0f));
  const auto out = fbp::conv2d(in, k, Tensor({1}));
  CHECK(out.values() == std::vector<float>{4, 6, 4, 6, 9, 6, 4, 6, 4});
}

TEST_CASE("conv2d rejects mismatched shapes") {
  CHECK_THROWS_KIND(fbp::conv2d(Tensor({2, 4, 4}), Tensor({1, 3, 3, 3}), Tensor({1})), ErrorKind::kShape);
  CHECK_THROWS_KIND(fbp::conv2d(Tensor({2, 4, 4}), Tensor({1, 2, 3, 3}), Tensor({2})), ErrorKind::kShape);
  CHECK_THROWS_KIND(fbp::conv2d(Tensor({2, 4, 4}), Tensor({1, 2, 5, 5}), Tensor({1})), ErrorKind::kShape);
}

TEST_CASE("conv2d is linear in its input when the bias is zero") {
  std::mt19937_64 rng(3);
  const auto a = random_tensor(rng, {4, 6, 5});
  const auto b = random_tensor(rng, {4, 6, 5});
  const auto k = random_tensor(rng, {3, 4, 3, 3});
  const Tensor zero({3});
  std::vector<float> mix(a.size());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 2.0f * a.values()[i] - 0.5f * b.values()[i];
  const auto lhs = fbp::conv2d(Tensor(a.shape(), mix), k, zero);
  const auto ya = fbp::conv2d(a, k, zero), yb = fbp::conv2d(b, k, zero);
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    CHECK(lhs.values()[i] == doctest::Approx(2.0 * ya.values()[i] - 0.5 * yb.values()[i]).epsilon(1e-5));
  }
}

TEST_CASE("maxpool2 matches the oracle and rejects odd extents") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t c = 1 + rng() % 6, h = 2 * (1 + rng() % 4), w = 2 * (1 + rng() % 4);
    const auto in = random_tensor(rng, {c, h, w});
    const auto got = fbp::maxpool2(in);
    REQUIRE(got.shape() == Shape{c, h / 2, w / 2});
    CHECK(max_abs_diff(got.data(), oracle::maxpool2(in.values(), c, h, w)) == 0.0);
  }
  CHECK_THROWS_KIND(fbp::maxpool2(Tensor({1, 3, 4})), ErrorKind::kShape);
}

TEST_CASE("relu clamps negatives only") {
  const auto out = fbp::relu(Tensor({1, 1, 4}, {-2.0f, -0.0f, 0.5f, 3.0f}));
  CHECK(out.values() == std::vector<float>{0.0f, 0.0f, 0.5f, 3.0f});
}

TEST_CASE("plan has 13 convs and 5 pools with the VGG16 channel progression") {
  const auto& plan = fbp::vgg16_plan();
  CHECK(plan.size() == 18);
  int convs = 0;
  for (const auto& l : plan) convs += l.kind == fbp::LayerKind::kConv;
  CHECK(convs == 13);
  CHECK(fbp::tap_shape("conv1_1") == Shape{64, 224, 224});
  CHECK(fbp::tap_shape("pool1") == Shape{64, 112, 112});
  CHECK(fbp::tap_shape("conv3_3") == Shape{256, 56, 56});
  CHECK(fbp::tap_shape("conv4_1") == Shape{512, 28, 28});
  CHECK(fbp::tap_shape("pool4") == Shape{512, 14, 14});
  CHECK(fbp::tap_shape("conv5_3") == Shape{512, 14, 14});
  CHECK(fbp::tap_shape("pool5") == Shape{512, 7, 7});
  CHECK_FALSE(fbp::is_tap_name("fc6"));
  CHECK(fbp::is_conv_layer("conv2_2"));
  CHECK_FALSE(fbp::is_conv_layer("pool2"));
}

TEST_CASE("fused dimensions of the two presets") {
  CHECK(fbp::fused_dim(fbp::kPortraitTaps) == 501760);
  CHECK(fbp::fused_dim(fbp::kWildTaps) == 200704);
}

TEST_CASE("forward_taps: shapes, order and determinism") {
  const auto img = random_image(1);
  const std::vector<std::string> taps = {"conv5_1", "conv4_1"};
  const auto a = fbp::forward_taps(img, network(), taps);
  REQUIRE(a.size() == 2);
  CHECK(a[0].first == "conv5_1");
  CHECK(a[0].second.shape() == Shape{512, 14, 14});
  CHECK(a[1].first == "conv4_1");
  CHECK(a[1].second.shape() == Shape{512, 28, 28});
  const auto b = fbp::forward_taps(img, network(), taps);
  CHECK(a == b);
}

TEST_CASE("forward_taps first layer equals the conv oracle") {
  const auto img = random_image(2);
  const std::vector<std::string> taps = {"conv1_1"};
  const auto pre = fbp::forward_taps(img, network(), taps, {.post_relu = false});
  const auto& w = network().get("conv1_1.weight");
  const auto& b = network().get("conv1_1.bias");
  const auto want = oracle::conv3x3(img.values(), 3, 224, 224, w.values(), b.values(), 64);
  CHECK(max_abs_diff(pre[0].second.data(), want) < 1e-4);

  const auto post = fbp::forward_taps(img, network(), taps);
  CHECK(post[0].second == fbp::relu(pre[0].second));
}

TEST_CASE("forward_taps composes the primitives") {
  const auto img = random_image(3);
  const std::vector<std::string> taps = {"pool1"};
  const auto& s = network();
  auto x = fbp::relu(fbp::conv2d(img, s.get("conv1_1.weight"), s.get("conv1_1.bias")));
  x = fbp::relu(fbp::conv2d(x, s.get("conv1_2.weight"), s.get("conv1_2.bias")));
  CHECK(fbp::forward_taps(img, s, taps)[0].second == fbp::maxpool2(x));
}

TEST_CASE("forward_taps rejects bad requests") {
  const auto img = random_image(4);
  const std::vector<std::string> unknown = {"fc7"};
  CHECK_THROWS_KIND_WITH(fbp::forward_taps(img, network(), unknown), ErrorKind::kConfig, "fc7");
  const std::vector<std::string> dup = {"conv4_1", "conv4_1"};
  CHECK_THROWS_KIND(fbp::forward_taps(img, network(), dup), ErrorKind::kConfig);
  const std::vector<std::string> ok = {"conv1_1"};
  CHECK_THROWS_KIND(fbp::forward_taps(Tensor({3, 100, 100}), network(), ok), ErrorKind::kShape);
  CHECK_THROWS_KIND(fbp::forward_taps(img, fbp::WeightStore{}, ok), ErrorKind::kValidation);
}
