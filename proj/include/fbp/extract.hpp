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

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fbp/annotations.hpp"
#include "fbp/dataset.hpp"
#include "fbp/descriptors.hpp"
#include "fbp/experiment.hpp"
#include "fbp/image.hpp"
#include "fbp/weights.hpp"

namespace fbp {

/// Deep taps or a hand-crafted descriptor, never both.
struct ExtractConfig {
  PreprocessConfig preprocess;
  std::vector<std::string> taps;
  std::optional<DescriptorKind> descriptor;
  bool post_relu = true;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const;
};

struct Exclusion {
  std::string id;
  std::string reason;
};

struct ExtractResult {
  FeatureMatrix features;        // rows in manifest order, excluded ids dropped
  std::vector<Exclusion> excluded;
};

/// Decodes, preprocesses and featurises every manifest image. Undecodable
/// images are excluded rather than fatal. Output does not depend on the
/// thread count. `weights` may be null for descriptor extraction.
ExtractResult extract_features(const DatasetManifest& manifest, const AnnotationSet* annotations,
                               const WeightStore* weights, const ExtractConfig& config);

/// One forward pass per image feeding one single-tap matrix per layer.
std::vector<std::pair<std::string, ExtractResult>> extract_layer_sweep(const DatasetManifest& manifest,
                                                                       const AnnotationSet* annotations,
                                                                       const WeightStore& weights,
                                                                       const ExtractConfig& base,
                                                                       const std::vector<std::string>& layers);

/// Ablation variant syntax: "mode:<crop|warp|padding>", "descriptor:<hog|lbp|gray>",
/// "layer:<tap>" or "taps:<a+b+...>". Applied on top of `base`.
ExtractConfig apply_variant(const ExtractConfig& base, const std::string& variant);

/// Extracts per variant (one shared forward pass when every variant is a
/// single layer) and runs the experiment on each.
/// Images that fail to decode are dropped before the splits are drawn, so
/// every variant sees the same rows and the same rounds.
AblationTable run_ablation(const DatasetManifest& manifest, const AnnotationSet* annotations,
                           const WeightStore* weights, const ExtractConfig& base,
                           const std::vector<std::string>& variants, const SplitProtocol& protocol,
                           const Regressor& regressor);

}  // namespace fbp
