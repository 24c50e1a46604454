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

// Exercises the shared library through fbp.h only.

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "fbp.h"
#include "oracles.hpp"

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Binary PPM, which the image decoder reads like any other format.
void write_ppm(const std::filesystem::path& p, int w, int h, std::mt19937_64& rng) {
  std::ofstream out(p, std::ios::binary);
  out << "P6\n" << w << " " << h << "\n255\n";
  for (int i = 0; i < w * h * 3; ++i) out.put(static_cast<char>(rng() % 256));
}

std::filesystem::path write_dataset(const oracle::TempDir& dir, int n) {
  std::mt19937_64 rng(3);
  std::string csv = "id,path,score\n";
  for (int i = 0; i < n; ++i) {
    write_ppm(dir / ("p" + std::to_string(i) + ".ppm"), 120 + i, 100, rng);
    csv += "p" + std::to_string(i) + ",p" + std::to_string(i) + ".ppm," + std::to_string(1 + i % 4) + "\n";
  }
  std::ofstream(dir / "m.csv") << csv;
  return dir / "m.csv";
}

}  // namespace

TEST_CASE("status strings and version") {
  CHECK(std::string(fbp_version()).size() > 0);
  CHECK(std::string(fbp_status_string(FBP_OK)) == "ok");
  CHECK(std::string(fbp_status_string(FBP_ERROR_CONFIG)).size() > 0);
  CHECK(fbp_default_tau1() == 2.75);
  CHECK(fbp_default_tau2() == 0.02);
}

TEST_CASE("null arguments are rejected, not dereferenced") {
  fbp_weights* w = nullptr;
  CHECK(fbp_weights_load(nullptr, &w) == FBP_ERROR_ARGUMENT);
  CHECK(fbp_weights_load("x", nullptr) == FBP_ERROR_ARGUMENT);
  CHECK(std::string(fbp_last_error()).size() > 0);
  CHECK(fbp_matrix_rows(nullptr) == 0);
  CHECK(fbp_matrix_id(nullptr, 0) == nullptr);
  fbp_weights_free(nullptr);
  fbp_matrix_free(nullptr);
  fbp_model_free(nullptr);
  fbp_report_free(nullptr);
}

TEST_CASE("weights: fixture load, random generation, save") {
  fbp_weights* w = nullptr;
  REQUIRE(fbp_weights_load(FBP_FIXTURE_DIR "/conv1_1.bwf", &w) == FBP_OK);
  CHECK(fbp_weights_tensor_count(w) == 2);
  CHECK(std::string(fbp_weights_provenance(w)).find("RGB") != std::string::npos);
  fbp_weights_free(w);

  CHECK(fbp_weights_load(FBP_FIXTURE_DIR "/bad_kernel.bwf", &w) == FBP_ERROR_VALIDATION);
  CHECK(std::string(fbp_last_error()).find("conv1_1") != std::string::npos);
  CHECK(fbp_weights_load("/nonexistent.bwf", &w) == FBP_ERROR_IO);

  oracle::TempDir dir("capi_w");
  REQUIRE(fbp_weights_generate_random(9, &w) == FBP_OK);
  CHECK(fbp_weights_tensor_count(w) == 26);
  const std::string a = (dir / "a.bwf").string(), b = (dir / "b.bwf").string();
  CHECK(fbp_weights_save(w, a.c_str()) == FBP_OK);
  fbp_weights_free(w);
  REQUIRE(fbp_weights_generate_random(9, &w) == FBP_OK);
  CHECK(fbp_weights_save(w, b.c_str()) == FBP_OK);
  fbp_weights_free(w);
  CHECK(slurp(a) == slurp(b));
}

TEST_CASE("matrix, ridge and metrics through the C API") {
  // y = 2 x0 - x1 + 1 exactly.
  const size_t n = 8, d = 2;
  std::vector<float> x;
  std::vector<double> y;
  std::vector<std::string> names;
  for (size_t i = 0; i < n; ++i) {
    const float a = static_cast<float>(i), b = static_cast<float>((i * 3) % 5);
    x.insert(x.end(), {a, b});
    y.push_back(2.0 * a - b + 1.0);
    names.push_back("r" + std::to_string(i));
  }
  std::vector<const char*> ids;
  for (auto& s : names) ids.push_back(s.c_str());

  fbp_matrix* m = nullptr;
  REQUIRE(fbp_matrix_create(n, d, x.data(), ids.data(), &m) == FBP_OK);
  CHECK(fbp_matrix_rows(m) == n);
  CHECK(fbp_matrix_cols(m) == d);
  CHECK(std::string(fbp_matrix_id(m, 3)) == "r3");
  CHECK(fbp_matrix_id(m, 99) == nullptr);
  CHECK(fbp_matrix_excluded_count(m) == 0);

  oracle::TempDir dir("capi_m");
  const std::string path = (dir / "x.fmx").string();
  CHECK(fbp_matrix_save(m, path.c_str()) == FBP_OK);
  fbp_matrix* back = nullptr;
  REQUIRE(fbp_matrix_load(path.c_str(), &back) == FBP_OK);
  CHECK(std::memcmp(fbp_matrix_data(back), x.data(), x.size() * sizeof(float)) == 0);
  fbp_matrix_free(back);

  fbp_model* model = nullptr;
  REQUIRE(fbp_ridge_fit(m, y.data(), n, &model) == FBP_OK);
  fbp_model_info info{};
  CHECK(fbp_model_get_info(model, &info) == FBP_OK);
  CHECK(info.dim == 2);
  CHECK(info.alpha > 1e3);
  std::vector<double> pred(n);
  CHECK(fbp_ridge_predict(model, m, pred.data(), n) == FBP_OK);
  for (size_t i = 0; i < n; ++i) CHECK(pred[i] == doctest::Approx(y[i]).epsilon(1e-3));
  CHECK(fbp_ridge_predict(model, m, pred.data(), n - 1) == FBP_ERROR_SHAPE);
  CHECK(fbp_ridge_fit(m, y.data(), n - 1, &model) == FBP_ERROR_SHAPE);

  const std::string mpath = (dir / "model.bin").string();
  CHECK(fbp_model_save(model, mpath.c_str()) == FBP_OK);
  fbp_model* loaded = nullptr;
  REQUIRE(fbp_model_load(mpath.c_str(), &loaded) == FBP_OK);
  fbp_model_info info2{};
  fbp_model_get_info(loaded, &info2);
  CHECK(info2.alpha == info.alpha);
  CHECK(info2.intercept == info.intercept);
  fbp_model_free(loaded);
  fbp_model_free(model);
  fbp_matrix_free(m);

  fbp_metrics mt{};
  const double p2[] = {1, 2}, t2[] = {2, 4};
  REQUIRE(fbp_metrics_compute(p2, t2, 2, &mt) == FBP_OK);
  CHECK(mt.mae == 1.5);
  CHECK(mt.rmse == doctest::Approx(std::sqrt(2.5)));
  CHECK(mt.pc == doctest::Approx(1.0));
  const double flat[] = {3, 3, 3}, t3[] = {1, 2, 3};
  CHECK(fbp_metrics_compute(flat, t3, 3, &mt) == FBP_ERROR_VALIDATION);
}

TEST_CASE("dataset, extraction, experiment, error analysis and ablation") {
  oracle::TempDir dir("capi_e2e");
  const auto manifest = write_dataset(dir, 10);
  std::ofstream(manifest, std::ios::app) << "ghost,missing.ppm,2.0\n";

  fbp_dataset* ds = nullptr;
  REQUIRE(fbp_dataset_open(manifest.string().c_str(), nullptr, &ds) == FBP_OK);
  CHECK(fbp_dataset_size(ds) == 11);
  CHECK(std::string(fbp_dataset_id(ds, 10)) == "ghost");

  fbp_extract_options opts;
  fbp_extract_options_init(&opts);
  CHECK(std::string(opts.mode) == "crop");
  CHECK(std::string(opts.taps) == "conv4_1,conv5_1");
  opts.taps = nullptr;
  opts.descriptor = "hog";
  opts.threads = 1;
  fbp_matrix* feats = nullptr;
  REQUIRE(fbp_extract(ds, nullptr, &opts, &feats) == FBP_OK);
  CHECK(fbp_matrix_rows(feats) == 10);
  CHECK(fbp_matrix_cols(feats) == 26244);
  REQUIRE(fbp_matrix_excluded_count(feats) == 1);
  CHECK(std::string(fbp_matrix_excluded_id(feats, 0)) == "ghost");

  // Deep taps without weights is a configuration error.
  fbp_extract_options deep;
  fbp_extract_options_init(&deep);
  fbp_matrix* none = nullptr;
  CHECK(fbp_extract(ds, nullptr, &deep, &none) == FBP_ERROR_CONFIG);
  deep.descriptor = "gray";
  CHECK(fbp_extract(ds, nullptr, &deep, &none) == FBP_ERROR_CONFIG);

  fbp_dataset* kept = nullptr;
  REQUIRE(fbp_dataset_restrict(ds, feats, &kept) == FBP_OK);
  CHECK(fbp_dataset_size(kept) == 10);

  fbp_protocol_options proto;
  fbp_protocol_options_init(&proto);
  fbp_report* report = nullptr;
  // Ten rows cannot feed the 400/100 protocol.
  CHECK(fbp_experiment_run(kept, feats, &proto, nullptr, &report) == FBP_ERROR_DATA);
  proto.protocol = "random";
  const uint64_t seeds[] = {4, 5, 6};
  proto.seeds = seeds;
  proto.seed_count = 3;
  REQUIRE(fbp_experiment_run(kept, feats, &proto, R"({"descriptor": "hog", "k": 3})", &report) == FBP_OK);
  CHECK(fbp_report_round_count(report) == 3);
  int ok = 0;
  fbp_metrics r0{};
  CHECK(fbp_report_round(report, 0, &r0, &ok) == FBP_OK);
  CHECK(fbp_report_round(report, 3, &r0, &ok) == FBP_ERROR_ARGUMENT);
  CHECK(std::string(fbp_report_summary_csv(report)).rfind("round,seed,", 0) == 0);
  CHECK(fbp_experiment_run(kept, feats, &proto, "[1,2]", &report) == FBP_ERROR_CONFIG);

  const std::string out = (dir / "out").string();
  std::filesystem::create_directories(out);
  REQUIRE(fbp_report_write(report, out.c_str()) == FBP_OK);
  for (const char* f : {"report.json", "summary.csv", "predictions.csv"}) {
    CHECK(std::filesystem::exists(dir / "out" / f));
  }
  fbp_report* loaded = nullptr;
  REQUIRE(fbp_report_load((dir / "out" / "report.json").string().c_str(), &loaded) == FBP_OK);
  CHECK(std::string(fbp_report_summary_csv(loaded)) == fbp_report_summary_csv(report));
  CHECK(slurp(dir / "out" / "report.json").find("\"k\": \"3\"") != std::string::npos);

  size_t bad = 99, good = 99;
  const std::string eps = (dir / "errors.csv").string();
  CHECK(fbp_error_analysis(loaded, 1e9, 0.0, eps.c_str(), &bad, &good) == FBP_OK);
  CHECK(bad == 0);
  CHECK(slurp(eps).rfind("# tau1=1e+09 tau2=0\n", 0) == 0);
  CHECK(fbp_error_analysis(loaded, 0.1, 0.2, eps.c_str(), nullptr, nullptr) == FBP_ERROR_CONFIG);

  fbp_ablation* abl = nullptr;
  REQUIRE(fbp_ablation_run(kept, nullptr, &opts, "descriptor:gray,descriptor:lbp", &proto, &abl) == FBP_OK);
  CHECK(fbp_ablation_count(abl) == 2);
  const char* variant = nullptr;
  fbp_metrics avg{};
  int best0 = -1, best1 = -1;
  CHECK(fbp_ablation_row(abl, 0, &variant, &avg, &best0) == FBP_OK);
  CHECK(std::string(variant) == "descriptor:gray");
  CHECK(fbp_ablation_row(abl, 1, &variant, &avg, &best1) == FBP_OK);
  CHECK(best0 + best1 == 1);
  const std::string t = (dir / "t.csv").string(), s = (dir / "s.csv").string();
  CHECK(fbp_ablation_write(abl, t.c_str(), s.c_str()) == FBP_OK);
  CHECK(slurp(s).rfind("variant,pc\ndescriptor:gray,", 0) == 0);
  fbp_ablation_free(abl);
  CHECK(fbp_ablation_run(kept, nullptr, &opts, "bogus", &proto, &abl) == FBP_ERROR_CONFIG);

  fbp_report_free(loaded);
  fbp_report_free(report);
  fbp_dataset_free(kept);
  fbp_matrix_free(feats);
  fbp_dataset_free(ds);

  CHECK(fbp_dataset_open("/nonexistent/m.csv", nullptr, &ds) == FBP_ERROR_IO);
}
