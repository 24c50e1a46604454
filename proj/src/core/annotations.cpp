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

#include "fbp/annotations.hpp"

#include <fstream>
#include <sstream>

#include "fbp/error.hpp"
#include "json.hpp"

namespace fbp {

namespace {

using nlohmann::json;

Point parse_point(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    fail(ErrorKind::kValidation, where + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

Point mean_of(const std::vector<Point>& pts, std::size_t first, std::size_t last) {
  Point m;
  for (std::size_t i = first; i <= last; ++i) {
    m.x += pts[i].x;
    m.y += pts[i].y;
  }
  const double n = static_cast<double>(last - first + 1);
  return {m.x / n, m.y / n};
}

FaceAnnotation parse_one(const std::string& id, const json& j) {
  if (!j.is_object()) fail(ErrorKind::kValidation, "annotation '" + id + "' is not an object");
  FaceAnnotation ann;
  if (auto it = j.find("bbox"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != 4) fail(ErrorKind::kValidation, "annotation '" + id + "': bbox must be [l, t, w, h]");
    for (const auto& v : *it) {
      if (!v.is_number()) fail(ErrorKind::kValidation, "annotation '" + id + "': bbox must be numeric");
    }
    ann.bbox = BoundingBox{(*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>(),
                           (*it)[3].get<double>()};
  }
  if (auto it = j.find("landmarks"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != 68) {
      fail(ErrorKind::kValidation, "annotation '" + id + "': expected exactly 68 landmarks");
    }
    for (const auto& p : *it) ann.landmarks.push_back(parse_point(p, "annotation '" + id + "' landmark"));
  }
  if (auto it = j.find("left_eye"); it != j.end() && !it->is_null()) {
    ann.left_eye = parse_point(*it, "annotation '" + id + "' left_eye");
  }
  if (auto it = j.find("right_eye"); it != j.end() && !it->is_null()) {
    ann.right_eye = parse_point(*it, "annotation '" + id + "' right_eye");
  }
  if (!ann.landmarks.empty()) {
    if (!ann.left_eye) ann.left_eye = mean_of(ann.landmarks, 36, 41);
    if (!ann.right_eye) ann.right_eye = mean_of(ann.landmarks, 42, 47);
  }
  return ann;
}

}  // namespace

AnnotationSet parse_annotations(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kFormat, std::string("annotation sidecar: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::kFormat, "annotation sidecar must be a JSON object keyed by image id");
  AnnotationSet set;
  for (auto it = doc.begin(); it != doc.end(); ++it) set.emplace(it.key(), parse_one(it.key(), it.value()));
  return set;
}

AnnotationSet load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open annotations " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_annotations(ss.str());
}

const FaceAnnotation* find_annotation(const AnnotationSet& set, std::string_view id) {
  auto it = set.find(id);
  return it == set.end() ? nullptr : &it->second;
}

}  // namespace fbp
