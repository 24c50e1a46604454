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

namespace fbp {

/// sqrt(mean((pred - truth)^2))
double rmse(std::span<const double> pred, std::span<const double> truth);

/// mean(|pred - truth|)
double mae(std::span<const double> pred, std::span<const double> truth);

/// Pearson correlation as the (n - 1)-normalised sum of products of sample
/// z-scores, clamped to [-1, 1]. Throws if either input is constant.
double pearson(std::span<const double> pred, std::span<const double> truth);

}  // namespace fbp
