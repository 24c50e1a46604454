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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fbp {

struct ManifestRow {
  std::string id;
  std::filesystem::path path;  // resolved against the manifest's directory
  double score = 0.0;
};

/// CSV `id,path,score` with a header line. Ids are unique, scores finite.
struct DatasetManifest {
  std::string name;
  std::vector<ManifestRow> rows;

  const ManifestRow* find(std::string_view id) const;
};

DatasetManifest parse_manifest(std::string_view csv, const std::filesystem::path& base_dir, std::string name = {});
DatasetManifest load_manifest(const std::filesystem::path& path);

struct SplitPlan {
  std::size_t round = 0;  // 1-based
  std::vector<std::string> train;
  std::vector<std::string> test;
  std::optional<std::uint64_t> seed;  // absent for predefined splits
};

enum class SplitKind {
  kScut,        // 400 train / 100 test drawn per seed; needs >= 500 rows
  kRandom,      // test_fraction of the rows held out per seed
  kPredefined,  // train_<k>.txt / test_<k>.txt, k = 1..5, read verbatim
};

struct SplitProtocol {
  SplitKind kind = SplitKind::kScut;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  double test_fraction = 0.2;
  std::filesystem::path split_dir;
};

inline constexpr std::size_t kScutTrain = 400;
inline constexpr std::size_t kScutTest = 100;
inline constexpr std::size_t kPredefinedRounds = 5;

SplitKind parse_split_kind(std::string_view s);
std::string_view to_string(SplitKind k);

std::vector<SplitPlan> make_splits(const DatasetManifest& manifest, const SplitProtocol& protocol);

/// Writes train_<round>.txt / test_<round>.txt, one id per line.
void write_split_files(const std::vector<SplitPlan>& plans, const std::filesystem::path& dir);

}  // namespace fbp
