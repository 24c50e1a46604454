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

#include "fbp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fbp/error.hpp"

namespace fbp {

namespace {

void check_lengths(std::span<const double> pred, std::span<const double> truth, std::size_t min_len,
                   const char* who) {
  if (pred.size() != truth.size()) {
    fail(ErrorKind::kShape, std::string(who) + ": length mismatch (" + std::to_string(pred.size()) + " vs " +
                                std::to_string(truth.size()) + ")");
  }
  if (pred.size() < min_len) {
    fail(ErrorKind::kShape, std::string(who) + ": need at least " + std::to_string(min_len) + " values");
  }
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v, double m) {
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth, 1, "rmse");
  double ss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) ss += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return std::sqrt(ss / static_cast<double>(pred.size()));
}

double mae(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth, 1, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - truth[i]);
  return s / static_cast<double>(pred.size());
}

double pearson(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth, 2, "pearson");
  const double mp = mean(pred), mt = mean(truth);
  const double sp = sample_std(pred, mp), st = sample_std(truth, mt);
  if (!(sp > 0.0) || !(st > 0.0)) fail(ErrorKind::kValidation, "pearson: correlation undefined for a constant input");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += ((pred[i] - mp) / sp) * ((truth[i] - mt) / st);
  return std::clamp(acc / static_cast<double>(pred.size() - 1), -1.0, 1.0);
}

}  // namespace fbp
