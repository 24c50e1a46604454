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

#include "fbp/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "fbp/error.hpp"
#include "random.hpp"

namespace fbp {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Comma-separated fields; a field may be wrapped in double quotes ("" escapes).
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.emplace_back(trim(cur));
  return fields;
}

std::vector<std::string> read_id_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIngestion, "missing split file " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (!t.empty()) ids.emplace_back(t);
  }
  return ids;
}

}  // namespace

const ManifestRow* DatasetManifest::find(std::string_view id) const {
  for (const auto& r : rows) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

DatasetManifest parse_manifest(std::string_view csv, const std::filesystem::path& base_dir, std::string name) {
  DatasetManifest m;
  m.name = std::move(name);
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() != 3 || fields[0] != "id" || fields[1] != "path" || fields[2] != "score") {
        fail(ErrorKind::kIngestion, "manifest: header must be 'id,path,score'");
      }
      continue;
    }
    if (fields.size() != 3) {
      fail(ErrorKind::kIngestion, "manifest line " + std::to_string(line_no) + ": expected 3 fields");
    }
    double score = 0.0;
    const auto& s = fields[2];
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), score);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(score)) {
      fail(ErrorKind::kIngestion, "manifest line " + std::to_string(line_no) + ": bad score '" + s + "'");
    }
    if (fields[0].empty()) fail(ErrorKind::kIngestion, "manifest line " + std::to_string(line_no) + ": empty id");
    if (!seen.insert(fields[0]).second) {
      fail(ErrorKind::kIngestion, "manifest: duplicate id '" + fields[0] + "'");
    }
    std::filesystem::path p(fields[1]);
    if (p.is_relative()) p = base_dir / p;
    m.rows.push_back({fields[0], p, score});
  }
  if (!header_seen) fail(ErrorKind::kIngestion, "manifest: missing header 'id,path,score'");
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path(), path.stem().string());
}

SplitKind parse_split_kind(std::string_view s) {
  if (s == "scut") return SplitKind::kScut;
  if (s == "random") return SplitKind::kRandom;
  if (s == "hotornot" || s == "predefined") return SplitKind::kPredefined;
  fail(ErrorKind::kConfig, "unknown split protocol '" + std::string(s) + "' (scut, random, hotornot)");
}

std::string_view to_string(SplitKind k) {
  switch (k) {
    case SplitKind::kScut: return "scut";
    case SplitKind::kRandom: return "random";
    case SplitKind::kPredefined: return "hotornot";
  }
  return "?";
}

std::vector<SplitPlan> make_splits(const DatasetManifest& manifest, const SplitProtocol& protocol) {
  std::vector<SplitPlan> plans;
  const std::size_t n = manifest.rows.size();

  if (protocol.kind == SplitKind::kPredefined) {
    for (std::size_t k = 1; k <= kPredefinedRounds; ++k) {
      SplitPlan plan;
      plan.round = k;
      plan.train = read_id_file(protocol.split_dir / ("train_" + std::to_string(k) + ".txt"));
      plan.test = read_id_file(protocol.split_dir / ("test_" + std::to_string(k) + ".txt"));
      std::set<std::string_view> train_set(plan.train.begin(), plan.train.end());
      for (const auto* list : {&plan.train, &plan.test}) {
        for (const auto& id : *list) {
          if (!manifest.find(id)) {
            fail(ErrorKind::kIngestion, "split " + std::to_string(k) + ": id '" + id + "' not in manifest");
          }
        }
      }
      for (const auto& id : plan.test) {
        if (train_set.count(id)) {
          fail(ErrorKind::kIngestion, "split " + std::to_string(k) + ": id '" + id + "' in both train and test");
        }
      }
      if (plan.train.size() < 2 || plan.test.empty()) {
        fail(ErrorKind::kIngestion, "split " + std::to_string(k) + ": needs >= 2 train and >= 1 test ids");
      }
      plans.push_back(std::move(plan));
    }
    return plans;
  }

  if (protocol.seeds.empty()) fail(ErrorKind::kConfig, "split protocol needs at least one seed");
  std::size_t train_n = 0, test_n = 0;
  if (protocol.kind == SplitKind::kScut) {
    if (n < kScutTrain + kScutTest) {
      fail(ErrorKind::kIngestion, "scut protocol needs >= 500 rows, manifest has " + std::to_string(n));
    }
    train_n = kScutTrain;
    test_n = kScutTest;
  } else {
    if (!(protocol.test_fraction > 0.0 && protocol.test_fraction < 1.0)) {
      fail(ErrorKind::kConfig, "test fraction must lie in (0, 1)");
    }
    test_n = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(protocol.test_fraction * static_cast<double>(n))));
    if (n < test_n + 2) fail(ErrorKind::kIngestion, "random protocol needs at least 3 rows");
    train_n = n - test_n;
  }

  std::vector<std::string> ids;
  ids.reserve(n);
  for (const auto& r : manifest.rows) ids.push_back(r.id);
  for (std::size_t k = 0; k < protocol.seeds.size(); ++k) {
    std::vector<std::string> order = ids;
    detail::Rng rng(protocol.seeds[k]);
    rng.shuffle(order);
    SplitPlan plan;
    plan.round = k + 1;
    plan.seed = protocol.seeds[k];
    plan.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_n));
    plan.test.assign(order.begin() + static_cast<std::ptrdiff_t>(train_n),
                     order.begin() + static_cast<std::ptrdiff_t>(train_n + test_n));
    plans.push_back(std::move(plan));
  }
  return plans;
}

void write_split_files(const std::vector<SplitPlan>& plans, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& plan : plans) {
    for (auto [prefix, list] : {std::pair{"train_", &plan.train}, std::pair{"test_", &plan.test}}) {
      const auto path = dir / (std::string(prefix) + std::to_string(plan.round) + ".txt");
      std::ofstream out(path);
      if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
      for (const auto& id : *list) out << id << '\n';
    }
  }
}

}  // namespace fbp
