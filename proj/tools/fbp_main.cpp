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

// Command-line front end. Talks to the pipeline only through fbp.h.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fbp.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Weights = std::unique_ptr<fbp_weights, Deleter<fbp_weights, fbp_weights_free>>;
using Matrix = std::unique_ptr<fbp_matrix, Deleter<fbp_matrix, fbp_matrix_free>>;
using Dataset = std::unique_ptr<fbp_dataset, Deleter<fbp_dataset, fbp_dataset_free>>;
using Model = std::unique_ptr<fbp_model, Deleter<fbp_model, fbp_model_free>>;
using Report = std::unique_ptr<fbp_report, Deleter<fbp_report, fbp_report_free>>;
using Ablation = std::unique_ptr<fbp_ablation, Deleter<fbp_ablation, fbp_ablation_free>>;

// Thrown to unwind to main with a chosen exit code.
struct Exit {
  int code;
};

[[noreturn]] void config_error(const std::string& msg) {
  std::cerr << "fbp: configuration error: " << msg << "\n";
  throw Exit{kExitConfig};
}

void check(fbp_status status, const char* what) {
  if (status == FBP_OK) return;
  std::cerr << "fbp: " << what << ": " << fbp_status_string(status) << ": " << fbp_last_error() << "\n";
  const bool config = status == FBP_ERROR_CONFIG || status == FBP_ERROR_ARGUMENT;
  throw Exit{config ? kExitConfig : kExitData};
}

struct Options {
  std::string command;
  std::string manifest;
  std::string annotations;
  std::string weights;
  std::string mode = "crop";
  std::string align = "none";
  std::string taps;
  std::string descriptor;
  bool pre_relu = false;
  unsigned threads = 0;
  std::string features;
  std::string protocol = "scut";
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  double test_fraction = 0.2;
  std::string splits;
  std::string variants;
  std::string report;
  std::string model;
  double tau1 = 0.0;
  double tau2 = 0.0;
  std::uint64_t seed = 0;
  std::string out;
};

std::string join(const std::vector<std::uint64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

void require_file(const std::string& path, const char* flag) {
  if (path.empty()) return;
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) config_error(std::string(flag) + " '" + path + "' is not a readable file");
}

void require_dir(const std::string& path, const char* flag) {
  if (path.empty()) return;
  std::error_code ec;
  if (!fs::is_directory(path, ec)) config_error(std::string(flag) + " '" + path + "' is not a directory");
}

void prepare_out(const Options& o) {
  if (o.out.empty()) config_error("--out is required");
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) {
    std::cerr << "fbp: cannot create output directory '" << o.out << "': " << ec.message() << "\n";
    throw Exit{kExitData};
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) {
    std::cerr << "fbp: cannot write " << path << "\n";
    throw Exit{kExitData};
  }
}

bool uses_extraction(const std::string& cmd) {
  return cmd == "extract" || cmd == "ablate";
}

// Configuration block echoed to stdout and <out>/config.json. Every field a
// command reads is included so the block alone reproduces the run.
nlohmann::ordered_json echo(const Options& o) {
  nlohmann::ordered_json j;
  j["command"] = o.command;
  j["version"] = fbp_version();
  auto put = [&](const char* key, const std::string& value) {
    if (!value.empty()) j[key] = value;
  };
  put("manifest", o.manifest);
  put("annotations", o.annotations);
  put("weights", o.weights);
  const bool extracting = uses_extraction(o.command) || (o.command == "experiment" && o.features.empty());
  if (extracting) {
    j["mode"] = o.mode;
    j["align"] = o.align;
    put("taps", o.taps);
    put("descriptor", o.descriptor);
    j["post_relu"] = !o.pre_relu;
  }
  put("features", o.features);
  put("model", o.model);
  put("report", o.report);
  if (o.command == "experiment" || o.command == "ablate" || (o.command == "errors" && o.report.empty())) {
    j["protocol"] = o.protocol;
    if (o.protocol == "hotornot" || o.protocol == "predefined") {
      j["splits"] = o.splits;
    } else {
      j["seeds"] = join(o.seeds);
      if (o.protocol == "random") j["test_fraction"] = o.test_fraction;
    }
  }
  put("variants", o.variants);
  if (o.command == "errors") {
    j["tau1"] = o.tau1;
    j["tau2"] = o.tau2;
  }
  if (o.command == "gen-weights") j["seed"] = o.seed;
  j["out"] = o.out;
  return j;
}

void emit_config(const Options& o) {
  const auto text = echo(o).dump(2);
  std::cout << text << "\n";
  write_file(fs::path(o.out) / "config.json", text + "\n");
}

fbp_extract_options extract_options(const Options& o) {
  fbp_extract_options e;
  fbp_extract_options_init(&e);
  e.mode = o.mode.c_str();
  e.align = o.align.c_str();
  e.taps = o.taps.empty() ? nullptr : o.taps.c_str();
  e.descriptor = o.descriptor.empty() ? nullptr : o.descriptor.c_str();
  e.pre_relu = o.pre_relu ? 1 : 0;
  e.threads = o.threads;
  return e;
}

fbp_protocol_options protocol_options(const Options& o) {
  fbp_protocol_options p;
  fbp_protocol_options_init(&p);
  p.protocol = o.protocol.c_str();
  p.seeds = o.seeds.data();
  p.seed_count = o.seeds.size();
  p.test_fraction = o.test_fraction;
  p.split_dir = o.splits.empty() ? nullptr : o.splits.c_str();
  return p;
}

// Shared validation for commands that may extract features.
void validate_extraction(Options& o) {
  if (!o.taps.empty() && !o.descriptor.empty()) config_error("--taps and --descriptor are mutually exclusive");
  if (o.taps.empty() && o.descriptor.empty()) o.taps = "conv4_1,conv5_1";
  if (!o.taps.empty() && o.weights.empty()) config_error("--weights is required for deep features");
  if (o.align == "eyes" && o.annotations.empty()) config_error("--align eyes needs --annotations");
}

void validate_protocol(const Options& o) {
  if (o.protocol == "hotornot" || o.protocol == "predefined") {
    if (o.splits.empty()) config_error("--protocol " + o.protocol + " needs --splits DIR");
    require_dir(o.splits, "--splits");
  } else if (o.seeds.empty()) {
    config_error("--seeds must name at least one seed");
  }
}

Dataset open_dataset(const Options& o) {
  fbp_dataset* ds = nullptr;
  check(fbp_dataset_open(o.manifest.c_str(), o.annotations.empty() ? nullptr : o.annotations.c_str(), &ds),
        "loading dataset");
  return Dataset(ds);
}

Weights open_weights(const Options& o) {
  if (o.weights.empty()) return nullptr;
  fbp_weights* w = nullptr;
  check(fbp_weights_load(o.weights.c_str(), &w), "loading weights");
  return Weights(w);
}

void write_exclusions(const fbp_matrix* m, const Options& o) {
  std::string text;
  for (std::size_t i = 0; i < fbp_matrix_excluded_count(m); ++i) {
    const std::string id = fbp_matrix_excluded_id(m, i);
    const std::string reason = fbp_matrix_excluded_reason(m, i);
    std::cerr << "fbp: warning: excluded '" << id << "': " << reason << "\n";
    text += id + "\t" + reason + "\n";
  }
  write_file(fs::path(o.out) / "excluded.txt", text);
}

Matrix extract(const Options& o, const fbp_dataset* ds) {
  const auto weights = open_weights(o);
  const auto e = extract_options(o);
  fbp_matrix* m = nullptr;
  check(fbp_extract(ds, weights.get(), &e, &m), "extracting features");
  Matrix matrix(m);
  write_exclusions(m, o);
  if (fbp_dataset_size(ds) == 0) std::cerr << "fbp: warning: the manifest lists no images\n";
  return matrix;
}

// ---- subcommands ----

int cmd_gen_weights(Options& o) {
  prepare_out(o);
  emit_config(o);
  fbp_weights* w = nullptr;
  check(fbp_weights_generate_random(o.seed, &w), "generating weights");
  Weights weights(w);
  const auto path = (fs::path(o.out) / "weights.bwf").string();
  check(fbp_weights_save(w, path.c_str()), "saving weights");
  std::cout << "wrote " << fbp_weights_tensor_count(w) << " tensors to " << path << "\n";
  return kExitOk;
}

int cmd_extract(Options& o) {
  validate_extraction(o);
  require_file(o.manifest, "--manifest");
  require_file(o.annotations, "--annotations");
  require_file(o.weights, "--weights");
  prepare_out(o);
  emit_config(o);
  const auto ds = open_dataset(o);
  const auto m = extract(o, ds.get());
  const auto path = (fs::path(o.out) / "features.fmx").string();
  check(fbp_matrix_save(m.get(), path.c_str()), "saving features");
  std::cout << "rows " << fbp_matrix_rows(m.get()) << " dim " << fbp_matrix_cols(m.get()) << " excluded "
            << fbp_matrix_excluded_count(m.get()) << "\n";
  return kExitOk;
}

int cmd_train(Options& o) {
  if (o.features.empty()) config_error("--features is required");
  require_file(o.manifest, "--manifest");
  require_file(o.features, "--features");
  prepare_out(o);
  emit_config(o);
  const auto ds = open_dataset(o);
  fbp_matrix* m = nullptr;
  check(fbp_matrix_load(o.features.c_str(), &m), "loading features");
  Matrix features(m);
  fbp_model* raw = nullptr;
  check(fbp_ridge_fit_dataset(m, ds.get(), &raw), "fitting");
  Model model(raw);
  const auto path = (fs::path(o.out) / "model.bin").string();
  check(fbp_model_save(raw, path.c_str()), "saving model");
  fbp_model_info info{};
  check(fbp_model_get_info(raw, &info), "reading model");
  std::printf("alpha %.6g lambda %.6g iterations %zu converged %d\n", info.alpha, info.lambda, info.iterations,
              info.converged);
  return kExitOk;
}

int cmd_predict(Options& o) {
  if (o.model.empty() || o.features.empty()) config_error("--model and --features are required");
  require_file(o.model, "--model");
  require_file(o.features, "--features");
  prepare_out(o);
  emit_config(o);
  fbp_model* raw = nullptr;
  check(fbp_model_load(o.model.c_str(), &raw), "loading model");
  Model model(raw);
  fbp_matrix* m = nullptr;
  check(fbp_matrix_load(o.features.c_str(), &m), "loading features");
  Matrix features(m);
  std::vector<double> pred(fbp_matrix_rows(m));
  check(fbp_ridge_predict(raw, m, pred.data(), pred.size()), "predicting");
  std::string csv = "id,prediction\n";
  char buf[64];
  for (std::size_t i = 0; i < pred.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f", pred[i]);
    csv += std::string(fbp_matrix_id(m, i)) + "," + buf + "\n";
  }
  write_file(fs::path(o.out) / "predictions.csv", csv);
  std::cout << "predicted " << pred.size() << " rows\n";
  return kExitOk;
}

// Runs (or loads features for) an experiment and writes the report files.
Report run_experiment(Options& o) {
  auto ds = open_dataset(o);
  Matrix features;
  if (!o.features.empty()) {
    fbp_matrix* m = nullptr;
    check(fbp_matrix_load(o.features.c_str(), &m), "loading features");
    features.reset(m);
  } else {
    features = extract(o, ds.get());
    // Undecodable images were excluded; splits are drawn from what remains.
    fbp_dataset* kept = nullptr;
    check(fbp_dataset_restrict(ds.get(), features.get(), &kept), "filtering dataset");
    ds.reset(kept);
  }
  const auto p = protocol_options(o);
  const auto config = echo(o).dump();
  fbp_report* r = nullptr;
  check(fbp_experiment_run(ds.get(), features.get(), &p, config.c_str(), &r), "running experiment");
  Report report(r);
  check(fbp_report_write(r, o.out.c_str()), "writing report");
  return report;
}

void validate_experiment_inputs(Options& o) {
  if (o.manifest.empty()) config_error("--manifest is required");
  if (o.features.empty()) {
    validate_extraction(o);
  } else if (!o.taps.empty() || !o.descriptor.empty()) {
    config_error("--features cannot be combined with --taps or --descriptor");
  }
  validate_protocol(o);
  require_file(o.manifest, "--manifest");
  require_file(o.annotations, "--annotations");
  require_file(o.weights, "--weights");
  require_file(o.features, "--features");
}

int cmd_experiment(Options& o) {
  validate_experiment_inputs(o);
  prepare_out(o);
  emit_config(o);
  const auto report = run_experiment(o);
  std::cout << fbp_report_summary_csv(report.get());
  if (!fbp_report_complete(report.get())) {
    std::cerr << "fbp: one or more rounds failed; the report is marked incomplete\n";
    return kExitData;
  }
  return kExitOk;
}

int cmd_ablate(Options& o) {
  if (o.variants.empty()) config_error("--variants is required");
  if (o.manifest.empty()) config_error("--manifest is required");
  if (!o.taps.empty() && !o.descriptor.empty()) config_error("--taps and --descriptor are mutually exclusive");
  if (o.taps.empty() && o.descriptor.empty()) o.taps = "conv4_1,conv5_1";
  validate_protocol(o);
  require_file(o.manifest, "--manifest");
  require_file(o.annotations, "--annotations");
  require_file(o.weights, "--weights");
  prepare_out(o);
  emit_config(o);
  const auto ds = open_dataset(o);
  const auto weights = open_weights(o);
  const auto e = extract_options(o);
  const auto p = protocol_options(o);
  fbp_ablation* raw = nullptr;
  check(fbp_ablation_run(ds.get(), weights.get(), &e, o.variants.c_str(), &p, &raw), "running ablation");
  Ablation ablation(raw);
  const auto table = (fs::path(o.out) / "ablation.csv").string();
  const auto series = (fs::path(o.out) / "ablation_series.csv").string();
  check(fbp_ablation_write(raw, table.c_str(), series.c_str()), "writing ablation");
  std::ifstream in(table);
  std::cout << in.rdbuf();
  return kExitOk;
}

int cmd_errors(Options& o) {
  if (o.report.empty()) {
    if (o.features.empty()) config_error("give --report, or --manifest with --features");
    validate_experiment_inputs(o);
  } else {
    require_file(o.report, "--report");
  }
  if (!(o.tau1 > o.tau2 && o.tau2 >= 0.0)) config_error("thresholds must satisfy tau1 > tau2 >= 0");
  prepare_out(o);
  emit_config(o);
  Report report;
  if (!o.report.empty()) {
    fbp_report* r = nullptr;
    check(fbp_report_load(o.report.c_str(), &r), "loading report");
    report.reset(r);
  } else {
    report = run_experiment(o);
  }
  const auto path = (fs::path(o.out) / "errors.csv").string();
  std::size_t bad = 0, good = 0;
  check(fbp_error_analysis(report.get(), o.tau1, o.tau2, path.c_str(), &bad, &good), "error analysis");
  std::cout << "bad " << bad << " good " << good << " (tau1=" << o.tau1 << " tau2=" << o.tau2 << ")\n";
  return kExitOk;
}

void add_extraction_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--annotations", o.annotations, "Face annotation sidecar (JSON)");
  cmd->add_option("--weights", o.weights, "BWF1 weight file");
  cmd->add_option("--mode", o.mode, "Squaring mode")->check(CLI::IsMember({"crop", "warp", "padding"}));
  cmd->add_option("--align", o.align, "Face alignment")->check(CLI::IsMember({"none", "eyes"}));
  cmd->add_option("--taps", o.taps, "Comma-separated layer taps (default conv4_1,conv5_1)");
  cmd->add_option("--descriptor", o.descriptor, "Hand-crafted descriptor")
      ->check(CLI::IsMember({"hog", "lbp", "gray"}));
  cmd->add_flag("--pre-relu", o.pre_relu, "Tap conv outputs before the ReLU");
  cmd->add_option("--threads", o.threads, "Worker threads (0: all cores)");
}

void add_protocol_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--protocol", o.protocol, "Split protocol")
      ->check(CLI::IsMember({"scut", "random", "hotornot", "predefined"}));
  cmd->add_option("--seeds", o.seeds, "Split seeds")->delimiter(',');
  cmd->add_option("--test-fraction", o.test_fraction, "Held-out fraction for --protocol random")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--splits", o.splits, "Directory with train_<k>.txt / test_<k>.txt");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Facial beauty prediction from fused deep features"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fbp_version());
  Options o;
  o.tau1 = fbp_default_tau1();
  o.tau2 = fbp_default_tau2();

  auto* gen = app.add_subcommand("gen-weights", "Write deterministic random BWF1 weights");
  gen->add_option("--seed", o.seed, "Generator seed");
  gen->add_option("--out", o.out, "Output directory")->required();

  auto* ext = app.add_subcommand("extract", "Extract a feature matrix");
  ext->add_option("--manifest", o.manifest, "Dataset manifest CSV")->required();
  add_extraction_flags(ext, o);
  ext->add_option("--out", o.out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Fit Bayesian ridge on a feature matrix");
  train->add_option("--manifest", o.manifest, "Dataset manifest CSV (scores)")->required();
  train->add_option("--features", o.features, "FMX1 feature matrix")->required();
  train->add_option("--out", o.out, "Output directory")->required();

  auto* pred = app.add_subcommand("predict", "Score a feature matrix with a trained model");
  pred->add_option("--model", o.model, "Model file")->required();
  pred->add_option("--features", o.features, "FMX1 feature matrix")->required();
  pred->add_option("--out", o.out, "Output directory")->required();

  auto* exp = app.add_subcommand("experiment", "Run the multi-round evaluation protocol");
  exp->add_option("--manifest", o.manifest, "Dataset manifest CSV")->required();
  exp->add_option("--features", o.features, "Precomputed FMX1 matrix (skips extraction)");
  add_extraction_flags(exp, o);
  add_protocol_flags(exp, o);
  exp->add_option("--out", o.out, "Output directory")->required();

  auto* abl = app.add_subcommand("ablate", "Compare feature variants under one protocol");
  abl->add_option("--manifest", o.manifest, "Dataset manifest CSV")->required();
  abl->add_option("--variants", o.variants, "Comma list: mode:<m>, descriptor:<d>, layer:<tap>, taps:<a+b>")
      ->required();
  add_extraction_flags(abl, o);
  add_protocol_flags(abl, o);
  abl->add_option("--out", o.out, "Output directory")->required();

  auto* err = app.add_subcommand("errors", "Partition test predictions by absolute error");
  err->add_option("--report", o.report, "report.json from a previous experiment");
  err->add_option("--manifest", o.manifest, "Dataset manifest CSV");
  err->add_option("--features", o.features, "FMX1 feature matrix");
  add_protocol_flags(err, o);
  err->add_option("--tau1", o.tau1, "Large-error threshold");
  err->add_option("--tau2", o.tau2, "Small-error threshold");
  err->add_option("--out", o.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    o.command = app.get_subcommands().front()->get_name();
    if (o.command == "gen-weights") return cmd_gen_weights(o);
    if (o.command == "extract") return cmd_extract(o);
    if (o.command == "train") return cmd_train(o);
    if (o.command == "predict") return cmd_predict(o);
    if (o.command == "experiment") return cmd_experiment(o);
    if (o.command == "ablate") return cmd_ablate(o);
    if (o.command == "errors") return cmd_errors(o);
  } catch (const Exit& e) {
    return e.code;
  }
  return kExitConfig;
}
