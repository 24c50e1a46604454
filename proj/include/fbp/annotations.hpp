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

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "fbp/image.hpp"

namespace fbp {

using AnnotationSet = std::map<std::string, FaceAnnotation, std::less<>>;

/// Sidecar document: { "<image id>": { "bbox": [l, t, w, h],
/// "landmarks": [[x, y] x 68], "left_eye": [x, y], "right_eye": [x, y] } }.
/// When eye centres are absent but landmarks are present, they are taken as
/// the means of the 68-point eye contours (points 36-41 and 42-47).
AnnotationSet parse_annotations(std::string_view json_text);
AnnotationSet load_annotations(const std::filesystem::path& path);

const FaceAnnotation* find_annotation(const AnnotationSet& set, std::string_view id);

}  // namespace fbp
