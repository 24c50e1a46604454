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

// Drives the fbp executable as a subprocess.

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fbp.h"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Run fbp_cli(const oracle::TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string("'") + FBP_CLI_PATH + "' " + args + " >'" + out.string() + "' 2>'" +
                          err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

void write_ppm(const fs::path& p, int w, int h, std::mt19937_64& rng) {
  std::ofstream out(p, std::ios::binary);
  out << "P6\n" << w << " " << h << "\n255\n";
  for (int i = 0; i < w * h * 3; ++i) out.put(static_cast<char>(rng() % 256));
}

// n random images plus one unreadable entry.
fs::path image_manifest(const oracle::TempDir& dir, int n) {
  std::mt19937_64 rng(8);
  std::string csv = "id,path,score\n";
  for (int i = 0; i < n; ++i) {
    write_ppm(dir / ("i" + std::to_string(i) + ".ppm"), 140, 120 + 3 * i, rng);
    csv += "i" + std::to_string(i) + ",i" + std::to_string(i) + ".ppm," + std::to_string(1.0 + 0.5 * i) + "\n";
  }
  std::ofstream(dir / "broken.ppm") << "P6 nonsense";
  csv += "broken,broken.ppm,3.0\n";
  std::ofstream(dir / "images.csv") << csv;
  return dir / "images.csv";
}

// Manifest plus an FMX1 matrix whose first columns are the score plus small noise.
std::pair<fs::path, fs::path> linear_features(const oracle::TempDir& dir, std::size_t n, std::size_t d) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  std::string csv = "id,path,score\n";
  std::vector<float> x(n * d);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = u(rng);
    names.push_back("s" + std::to_string(i));
    csv += names.back() + ",none.png," + std::to_string(y) + "\n";
    for (std::size_t j = 0; j < d; ++j) x[i * d + j] = static_cast<float>(j < 4 ? y + 0.02 * g(rng) : g(rng));
  }
  std::vector<const char*> ids;
  for (auto& s : names) ids.push_back(s.c_str());
  fbp_matrix* m = nullptr;
  REQUIRE(fbp_matrix_create(n, d, x.data(), ids.data(), &m) == FBP_OK);
  REQUIRE(fbp_matrix_save(m, (dir / "lin.fmx").string().c_str()) == FBP_OK);
  fbp_matrix_free(m);
  std::ofstream(dir / "lin.csv") << csv;
  return {dir / "lin.csv", dir / "lin.fmx"};
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("usage errors exit with the configuration code") {
  oracle::TempDir dir("cli_usage");
  CHECK(fbp_cli(dir, "--help").code == 0);
  CHECK(fbp_cli(dir, "").code == 1);
  CHECK(fbp_cli(dir, "frobnicate").code == 1);
  CHECK(fbp_cli(dir, "extract --out x").code == 1);
  CHECK(fbp_cli(dir, "extract --manifest " + q(dir / "nope.csv") + " --out " + q(dir / "o")).code == 1);
  const auto m = image_manifest(dir, 2);
  auto r = fbp_cli(dir, "extract --manifest " + q(m) + " --taps conv4_1 --descriptor hog --out " + q(dir / "o"));
  CHECK(r.code == 1);
  CHECK(r.err.find("mutually exclusive") != std::string::npos);
  // Deep taps need weights; checked before any image is read.
  CHECK(fbp_cli(dir, "extract --manifest " + q(m) + " --out " + q(dir / "o")).code == 1);
  CHECK(fbp_cli(dir, "extract --manifest " + q(m) + " --mode stretch --descriptor hog --out " + q(dir / "o")).code ==
        1);
}

TEST_CASE("gen-weights is deterministic") {
  oracle::TempDir dir("cli_gen");
  REQUIRE(fbp_cli(dir, "gen-weights --seed 4 --out " + q(dir / "a")).code == 0);
  REQUIRE(fbp_cli(dir, "gen-weights --seed 4 --out " + q(dir / "b")).code == 0);
  const auto a = slurp(dir / "a" / "weights.bwf");
  CHECK(a.size() > 50'000'000);
  CHECK(a == slurp(dir / "b" / "weights.bwf"));
  CHECK(a.rfind("BWF1", 0) == 0);
}

TEST_CASE("extract: deep taps and descriptors, with exclusions") {
  oracle::TempDir dir("cli_extract");
  const auto m = image_manifest(dir, 3);
  REQUIRE(fbp_cli(dir, "gen-weights --seed 1 --out " + q(dir / "w")).code == 0);
  auto r = fbp_cli(dir, "extract --manifest " + q(m) + " --weights " + q(dir / "w" / "weights.bwf") +
                            " --taps conv4_1,conv5_1 --threads 1 --out " + q(dir / "deep"));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("rows 3 dim 501760 excluded 1") != std::string::npos);
  CHECK(r.err.find("broken") != std::string::npos);
  CHECK(slurp(dir / "deep" / "excluded.txt").find("broken") != std::string::npos);
  CHECK(fs::file_size(dir / "deep" / "features.fmx") > 3 * 501760 * 4);
  const auto config = slurp(dir / "deep" / "config.json");
  CHECK(config.find("conv4_1,conv5_1") != std::string::npos);

  r = fbp_cli(dir, "extract --manifest " + q(m) + " --descriptor gray --out " + q(dir / "gray"));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("rows 3 dim 50176") != std::string::npos);
}

TEST_CASE("extract: an empty manifest succeeds with a warning") {
  oracle::TempDir dir("cli_empty");
  std::ofstream(dir / "e.csv") << "id,path,score\n";
  const auto r = fbp_cli(dir, "extract --manifest " + q(dir / "e.csv") + " --descriptor hog --out " + q(dir / "o"));
  CHECK(r.code == 0);
  CHECK(r.out.find("rows 0") != std::string::npos);
  CHECK(r.err.find("warning") != std::string::npos);
}

TEST_CASE("experiment on synthetic linear features") {
  oracle::TempDir dir("cli_exp");
  const auto [m, f] = linear_features(dir, 40, 30);
  const std::string args = "experiment --manifest " + q(m) + " --features " + q(f) +
                           " --protocol random --seeds 1,2,3,4,5 --out ";
  const auto r = fbp_cli(dir, args + q(dir / "a"));
  REQUIRE(r.code == 0);
  const auto summary = slurp(dir / "a" / "summary.csv");
  CHECK(count_lines(summary) == 1 + 5 + 1);
  const auto avg = summary.substr(summary.find("\navg,") + 1);
  const double pc = std::stod(avg.substr(avg.rfind(',') + 1));
  CHECK(pc > 0.99);
  CHECK(fs::exists(dir / "a" / "report.json"));
  CHECK(count_lines(slurp(dir / "a" / "predictions.csv")) == 1 + 40);

  REQUIRE(fbp_cli(dir, args + q(dir / "b")).code == 0);
  CHECK(slurp(dir / "b" / "summary.csv") == summary);

  // The default protocol needs 500 rows.
  CHECK(fbp_cli(dir, "experiment --manifest " + q(m) + " --features " + q(f) + " --out " + q(dir / "c")).code == 2);
  CHECK(fbp_cli(dir, "experiment --manifest " + q(m) + " --features " + q(f) + " --protocol hotornot --out " +
                         q(dir / "c"))
            .code == 1);
}

TEST_CASE("experiment extracting on the fly, then errors and ablation") {
  oracle::TempDir dir("cli_full");
  const auto m = image_manifest(dir, 8);
  auto r = fbp_cli(dir, "experiment --manifest " + q(m) +
                            " --descriptor hog --protocol random --seeds 3,4 --test-fraction 0.25 --out " +
                            q(dir / "exp"));
  REQUIRE(r.code == 0);
  CHECK(slurp(dir / "exp" / "config.json").find("\"descriptor\": \"hog\"") != std::string::npos);
  CHECK(count_lines(slurp(dir / "exp" / "summary.csv")) == 1 + 2 + 1);

  r = fbp_cli(dir, "errors --report " + q(dir / "exp" / "report.json") + " --out " + q(dir / "err"));
  REQUIRE(r.code == 0);
  CHECK(slurp(dir / "err" / "errors.csv").rfind("# tau1=2.75 tau2=0.02\n", 0) == 0);
  CHECK(fbp_cli(dir, "errors --report " + q(dir / "exp" / "report.json") + " --tau1 0.1 --tau2 0.5 --out " +
                         q(dir / "err2"))
            .code == 1);

  r = fbp_cli(dir, "ablate --manifest " + q(m) +
                       " --descriptor gray --variants descriptor:gray,descriptor:lbp --protocol random --seeds 3,4 "
                       "--out " +
                       q(dir / "abl"));
  REQUIRE(r.code == 0);
  const auto table = slurp(dir / "abl" / "ablation.csv");
  CHECK(count_lines(table) == 3);
  CHECK(table.rfind("variant,mae,rmse,pc,best\n", 0) == 0);
  CHECK(count_lines(slurp(dir / "abl" / "ablation_series.csv")) == 3);
  CHECK(fbp_cli(dir, "ablate --manifest " + q(m) + " --descriptor gray --variants shape:round --protocol random "
                                                   "--out " +
                         q(dir / "abl2"))
            .code == 1);
}

TEST_CASE("train and predict") {
  oracle::TempDir dir("cli_train");
  const auto [m, f] = linear_features(dir, 30, 10);
  REQUIRE(fbp_cli(dir, "train --manifest " + q(m) + " --features " + q(f) + " --out " + q(dir / "t")).code == 0);
  REQUIRE(fs::exists(dir / "t" / "model.bin"));
  const auto r =
      fbp_cli(dir, "predict --model " + q(dir / "t" / "model.bin") + " --features " + q(f) + " --out " + q(dir / "p"));
  REQUIRE(r.code == 0);
  std::istringstream csv(slurp(dir / "p" / "predictions.csv"));
  std::istringstream truth(slurp(m));
  std::string pl, tl;
  std::getline(csv, pl);
  std::getline(truth, tl);
  CHECK(pl == "id,prediction");
  int rows = 0;
  while (std::getline(csv, pl) && std::getline(truth, tl)) {
    const double p = std::stod(pl.substr(pl.find(',') + 1));
    const double t = std::stod(tl.substr(tl.rfind(',') + 1));
    CHECK(std::abs(p - t) < 0.1);
    ++rows;
  }
  CHECK(rows == 30);
  CHECK(fbp_cli(dir, "predict --model " + q(f) + " --features " + q(f) + " --out " + q(dir / "p2")).code == 2);
}
