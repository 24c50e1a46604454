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

#include "fbp.h"

#include <filesystem>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "../core/binary_io.hpp"
#include "fbp/annotations.hpp"
#include "fbp/dataset.hpp"
#include "fbp/error.hpp"
#include "fbp/experiment.hpp"
#include "fbp/extract.hpp"
#include "fbp/metrics.hpp"
#include "fbp/ridge.hpp"
#include "fbp/weights.hpp"

struct fbp_weights {
  fbp::WeightStore store;
};

struct fbp_matrix {
  fbp::FeatureMatrix matrix;
  std::vector<fbp::Exclusion> excluded;
};

struct fbp_dataset {
  fbp::DatasetManifest manifest;
  std::optional<fbp::AnnotationSet> annotations;
};

struct fbp_model {
  fbp::RidgeModel model;
};

struct fbp_report {
  fbp::ExperimentReport report;
  mutable std::string summary;
};

struct fbp_ablation {
  fbp::AblationTable table;
};

namespace {

thread_local std::string g_last_error;

fbp_status status_of(fbp::ErrorKind kind) {
  switch (kind) {
    case fbp::ErrorKind::kConfig: return FBP_ERROR_CONFIG;
    case fbp::ErrorKind::kIngestion: return FBP_ERROR_DATA;
    case fbp::ErrorKind::kFormat: return FBP_ERROR_FORMAT;
    case fbp::ErrorKind::kValidation: return FBP_ERROR_VALIDATION;
    case fbp::ErrorKind::kShape: return FBP_ERROR_SHAPE;
    case fbp::ErrorKind::kIo: return FBP_ERROR_IO;
  }
  return FBP_ERROR_INTERNAL;
}

fbp_status set_error(fbp_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
fbp_status guarded(F&& body) {
  try {
    body();
    return FBP_OK;
  } catch (const fbp::Error& e) {
    return set_error(status_of(e.kind()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return set_error(FBP_ERROR_IO, e.what());
  } catch (const nlohmann::json::exception& e) {
    return set_error(FBP_ERROR_CONFIG, std::string("invalid JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return set_error(FBP_ERROR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(FBP_ERROR_INTERNAL, e.what());
  } catch (...) {
    return set_error(FBP_ERROR_INTERNAL, "unknown failure");
  }
}

#define FBP_REQUIRE(ptr)                                                   \
  do {                                                                     \
    if ((ptr) == nullptr) return set_error(FBP_ERROR_ARGUMENT, #ptr " is null"); \
  } while (0)

fbp::ExtractConfig to_config(const fbp_extract_options& o) {
  fbp::ExtractConfig config;
  if (o.mode != nullptr && *o.mode != '\0') config.preprocess.mode = fbp::parse_square_mode(o.mode);
  if (o.align != nullptr && *o.align != '\0') config.preprocess.alignment = fbp::parse_alignment(o.align);
  if (o.taps != nullptr) {
    std::stringstream list(o.taps);
    for (std::string tap; std::getline(list, tap, ',');) {
      if (!tap.empty()) config.taps.push_back(tap);
    }
  }
  if (o.descriptor != nullptr && *o.descriptor != '\0') config.descriptor = fbp::parse_descriptor(o.descriptor);
  config.post_relu = o.pre_relu == 0;
  config.threads = o.threads;
  config.validate();
  return config;
}

fbp::SplitProtocol to_protocol(const fbp_protocol_options* o) {
  fbp::SplitProtocol protocol;
  if (o == nullptr) return protocol;
  if (o->protocol != nullptr && *o->protocol != '\0') protocol.kind = fbp::parse_split_kind(o->protocol);
  if (o->seeds != nullptr) protocol.seeds.assign(o->seeds, o->seeds + o->seed_count);
  if (protocol.seeds.empty() && protocol.kind != fbp::SplitKind::kPredefined) {
    fbp::fail(fbp::ErrorKind::kConfig, "at least one split seed is required");
  }
  if (o->test_fraction != 0.0) protocol.test_fraction = o->test_fraction;
  if (o->split_dir != nullptr) protocol.split_dir = o->split_dir;
  if (protocol.kind == fbp::SplitKind::kPredefined && protocol.split_dir.empty()) {
    fbp::fail(fbp::ErrorKind::kConfig, "the hotornot protocol needs a split directory");
  }
  return protocol;
}

fbp::ConfigEcho parse_echo(const char* json_text) {
  fbp::ConfigEcho echo;
  if (json_text == nullptr || *json_text == '\0') return echo;
  const auto doc = nlohmann::json::parse(json_text);
  if (!doc.is_object()) fbp::fail(fbp::ErrorKind::kConfig, "config echo must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    echo.emplace_back(key, value.is_string() ? value.get<std::string>() : value.dump());
  }
  return echo;
}

fbp_metrics to_c(const fbp::RoundMetrics& m) { return {m.mae, m.rmse, m.pc}; }

}  // namespace

extern "C" {

const char* fbp_version(void) { return "1.0.0"; }

const char* fbp_status_string(fbp_status status) {
  switch (status) {
    case FBP_OK: return "ok";
    case FBP_ERROR_CONFIG: return "configuration error";
    case FBP_ERROR_DATA: return "data error";
    case FBP_ERROR_FORMAT: return "format error";
    case FBP_ERROR_VALIDATION: return "validation error";
    case FBP_ERROR_SHAPE: return "shape error";
    case FBP_ERROR_IO: return "I/O error";
    case FBP_ERROR_ARGUMENT: return "invalid argument";
    case FBP_ERROR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* fbp_last_error(void) { return g_last_error.c_str(); }

// ---- weights ----

fbp_status fbp_weights_load(const char* path, fbp_weights** out) {
  FBP_REQUIRE(path);
  FBP_REQUIRE(out);
  return guarded([&] { *out = new fbp_weights{fbp::load_weights(path)}; });
}

fbp_status fbp_weights_generate_random(uint64_t seed, fbp_weights** out) {
  FBP_REQUIRE(out);
  return guarded([&] { *out = new fbp_weights{fbp::generate_random_weights(seed)}; });
}

fbp_status fbp_weights_save(const fbp_weights* weights, const char* path) {
  FBP_REQUIRE(weights);
  FBP_REQUIRE(path);
  return guarded([&] { fbp::save_weights(weights->store, path); });
}

size_t fbp_weights_tensor_count(const fbp_weights* weights) { return weights ? weights->store.size() : 0; }

const char* fbp_weights_provenance(const fbp_weights* weights) {
  return weights ? weights->store.provenance().c_str() : "";
}

void fbp_weights_free(fbp_weights* weights) { delete weights; }

// ---- matrices ----

fbp_status fbp_matrix_create(size_t rows, size_t cols, const float* data, const char* const* ids,
                             fbp_matrix** out) {
  FBP_REQUIRE(out);
  if (rows * cols > 0) FBP_REQUIRE(data);
  if (rows > 0) FBP_REQUIRE(ids);
  return guarded([&] {
    std::vector<float> values(data, data + rows * cols);
    std::vector<std::string> names;
    names.reserve(rows);
    for (size_t i = 0; i < rows; ++i) {
      if (ids[i] == nullptr) fbp::fail(fbp::ErrorKind::kValidation, "null row id");
      names.emplace_back(ids[i]);
    }
    *out = new fbp_matrix{fbp::FeatureMatrix(rows, cols, std::move(values), std::move(names)), {}};
  });
}

fbp_status fbp_matrix_load(const char* path, fbp_matrix** out) {
  FBP_REQUIRE(path);
  FBP_REQUIRE(out);
  return guarded([&] { *out = new fbp_matrix{fbp::load_matrix(path), {}}; });
}

fbp_status fbp_matrix_save(const fbp_matrix* matrix, const char* path) {
  FBP_REQUIRE(matrix);
  FBP_REQUIRE(path);
  return guarded([&] { fbp::save_matrix(matrix->matrix, path); });
}

size_t fbp_matrix_rows(const fbp_matrix* matrix) { return matrix ? matrix->matrix.rows() : 0; }
size_t fbp_matrix_cols(const fbp_matrix* matrix) { return matrix ? matrix->matrix.cols() : 0; }
const float* fbp_matrix_data(const fbp_matrix* matrix) { return matrix ? matrix->matrix.data().data() : nullptr; }

const char* fbp_matrix_id(const fbp_matrix* matrix, size_t row) {
  if (matrix == nullptr || row >= matrix->matrix.rows()) return nullptr;
  return matrix->matrix.ids()[row].c_str();
}

size_t fbp_matrix_excluded_count(const fbp_matrix* matrix) { return matrix ? matrix->excluded.size() : 0; }

const char* fbp_matrix_excluded_id(const fbp_matrix* matrix, size_t i) {
  if (matrix == nullptr || i >= matrix->excluded.size()) return nullptr;
  return matrix->excluded[i].id.c_str();
}

const char* fbp_matrix_excluded_reason(const fbp_matrix* matrix, size_t i) {
  if (matrix == nullptr || i >= matrix->excluded.size()) return nullptr;
  return matrix->excluded[i].reason.c_str();
}

void fbp_matrix_free(fbp_matrix* matrix) { delete matrix; }

// ---- datasets ----

fbp_status fbp_dataset_open(const char* manifest_path, const char* annotations_path, fbp_dataset** out) {
  FBP_REQUIRE(manifest_path);
  FBP_REQUIRE(out);
  return guarded([&] {
    auto ds = std::make_unique<fbp_dataset>();
    ds->manifest = fbp::load_manifest(manifest_path);
    if (annotations_path != nullptr && *annotations_path != '\0') {
      ds->annotations = fbp::load_annotations(annotations_path);
    }
    *out = ds.release();
  });
}

fbp_status fbp_dataset_restrict(const fbp_dataset* dataset, const fbp_matrix* features, fbp_dataset** out) {
  FBP_REQUIRE(dataset);
  FBP_REQUIRE(features);
  FBP_REQUIRE(out);
  return guarded([&] {
    auto ds = std::make_unique<fbp_dataset>();
    ds->manifest.name = dataset->manifest.name;
    ds->annotations = dataset->annotations;
    for (const auto& row : dataset->manifest.rows) {
      if (features->matrix.find(row.id) >= 0) ds->manifest.rows.push_back(row);
    }
    *out = ds.release();
  });
}

size_t fbp_dataset_size(const fbp_dataset* dataset) { return dataset ? dataset->manifest.rows.size() : 0; }

const char* fbp_dataset_id(const fbp_dataset* dataset, size_t row) {
  if (dataset == nullptr || row >= dataset->manifest.rows.size()) return nullptr;
  return dataset->manifest.rows[row].id.c_str();
}

double fbp_dataset_score(const fbp_dataset* dataset, size_t row) {
  if (dataset == nullptr || row >= dataset->manifest.rows.size()) return 0.0;
  return dataset->manifest.rows[row].score;
}

void fbp_dataset_free(fbp_dataset* dataset) { delete dataset; }

// ---- extraction ----

void fbp_extract_options_init(fbp_extract_options* options) {
  if (options == nullptr) return;
  *options = fbp_extract_options{"crop", "none", "conv4_1,conv5_1", nullptr, 0, 0};
}

fbp_status fbp_extract(const fbp_dataset* dataset, const fbp_weights* weights, const fbp_extract_options* options,
                       fbp_matrix** out) {
  FBP_REQUIRE(dataset);
  FBP_REQUIRE(options);
  FBP_REQUIRE(out);
  return guarded([&] {
    const auto config = to_config(*options);
    auto result = fbp::extract_features(dataset->manifest, dataset->annotations ? &*dataset->annotations : nullptr,
                                        weights ? &weights->store : nullptr, config);
    *out = new fbp_matrix{std::move(result.features), std::move(result.excluded)};
  });
}

// ---- regression ----

fbp_status fbp_ridge_fit(const fbp_matrix* features, const double* y, size_t n, fbp_model** out) {
  FBP_REQUIRE(features);
  FBP_REQUIRE(y);
  FBP_REQUIRE(out);
  return guarded([&] {
    if (n != features->matrix.rows()) {
      fbp::fail(fbp::ErrorKind::kShape, "target count " + std::to_string(n) + " does not match " +
                                            std::to_string(features->matrix.rows()) + " feature rows");
    }
    *out = new fbp_model{fbp::fit_ridge(fbp::DesignMatrix(features->matrix), {y, n})};
  });
}

fbp_status fbp_ridge_fit_dataset(const fbp_matrix* features, const fbp_dataset* dataset, fbp_model** out) {
  FBP_REQUIRE(features);
  FBP_REQUIRE(dataset);
  FBP_REQUIRE(out);
  return guarded([&] {
    std::vector<double> y;
    y.reserve(features->matrix.rows());
    for (const auto& id : features->matrix.ids()) {
      const auto* row = dataset->manifest.find(id);
      if (row == nullptr) fbp::fail(fbp::ErrorKind::kIngestion, "feature row '" + id + "' is not in the manifest");
      y.push_back(row->score);
    }
    *out = new fbp_model{fbp::fit_ridge(fbp::DesignMatrix(features->matrix), y)};
  });
}

fbp_status fbp_ridge_predict(const fbp_model* model, const fbp_matrix* features, double* out, size_t out_len) {
  FBP_REQUIRE(model);
  FBP_REQUIRE(features);
  FBP_REQUIRE(out);
  return guarded([&] {
    if (out_len < features->matrix.rows()) fbp::fail(fbp::ErrorKind::kShape, "prediction buffer too small");
    const auto pred = fbp::predict(model->model, fbp::DesignMatrix(features->matrix));
    std::copy(pred.begin(), pred.end(), out);
  });
}

fbp_status fbp_model_save(const fbp_model* model, const char* path) {
  FBP_REQUIRE(model);
  FBP_REQUIRE(path);
  return guarded([&] { fbp::save_model(model->model, path); });
}

fbp_status fbp_model_load(const char* path, fbp_model** out) {
  FBP_REQUIRE(path);
  FBP_REQUIRE(out);
  return guarded([&] { *out = new fbp_model{fbp::load_model(path)}; });
}

fbp_status fbp_model_get_info(const fbp_model* model, fbp_model_info* info) {
  FBP_REQUIRE(model);
  FBP_REQUIRE(info);
  const auto& m = model->model;
  *info = fbp_model_info{m.alpha, m.lambda, m.intercept, m.log_marginal_likelihood,
                         m.dim(), m.iterations, m.converged ? 1 : 0};
  return FBP_OK;
}

void fbp_model_free(fbp_model* model) { delete model; }

// ---- evaluation ----

fbp_status fbp_metrics_compute(const double* pred, const double* truth, size_t n, fbp_metrics* out) {
  FBP_REQUIRE(pred);
  FBP_REQUIRE(truth);
  FBP_REQUIRE(out);
  return guarded([&] {
    std::span<const double> p(pred, n), t(truth, n);
    *out = fbp_metrics{fbp::mae(p, t), fbp::rmse(p, t), fbp::pearson(p, t)};
  });
}

void fbp_protocol_options_init(fbp_protocol_options* options) {
  if (options == nullptr) return;
  *options = fbp_protocol_options{"scut", nullptr, 0, 0.2, nullptr};
}

fbp_status fbp_experiment_run(const fbp_dataset* dataset, const fbp_matrix* features,
                              const fbp_protocol_options* protocol, const char* config_json, fbp_report** out) {
  FBP_REQUIRE(dataset);
  FBP_REQUIRE(features);
  FBP_REQUIRE(out);
  return guarded([&] {
    auto echo = parse_echo(config_json);
    const auto splits = fbp::make_splits(dataset->manifest, to_protocol(protocol));
    auto report = fbp::run_experiment(dataset->manifest, splits, features->matrix, fbp::bayesian_ridge_regressor(),
                                      std::move(echo));
    *out = new fbp_report{std::move(report), {}};
  });
}

fbp_status fbp_report_load(const char* json_path, fbp_report** out) {
  FBP_REQUIRE(json_path);
  FBP_REQUIRE(out);
  return guarded([&] {
    const auto bytes = fbp::detail::read_file(json_path);
    const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    *out = new fbp_report{fbp::parse_report_json(text), {}};
  });
}

fbp_status fbp_report_write(const fbp_report* report, const char* dir) {
  FBP_REQUIRE(report);
  FBP_REQUIRE(dir);
  return guarded([&] {
    const std::filesystem::path base(dir);
    std::filesystem::create_directories(base);
    fbp::write_text(base / "report.json", fbp::report_json(report->report));
    fbp::write_text(base / "summary.csv", fbp::report_summary_csv(report->report));
    fbp::write_text(base / "predictions.csv", fbp::report_predictions_csv(report->report));
  });
}

int fbp_report_complete(const fbp_report* report) { return report && report->report.complete() ? 1 : 0; }

size_t fbp_report_round_count(const fbp_report* report) { return report ? report->report.rounds.size() : 0; }

fbp_status fbp_report_round(const fbp_report* report, size_t i, fbp_metrics* metrics, int* ok) {
  FBP_REQUIRE(report);
  if (i >= report->report.rounds.size()) return set_error(FBP_ERROR_ARGUMENT, "round index out of range");
  const auto& r = report->report.rounds[i];
  if (metrics != nullptr) *metrics = to_c(r.metrics);
  if (ok != nullptr) *ok = r.ok ? 1 : 0;
  return FBP_OK;
}

fbp_status fbp_report_average(const fbp_report* report, fbp_metrics* metrics) {
  FBP_REQUIRE(report);
  FBP_REQUIRE(metrics);
  *metrics = to_c(report->report.average);
  return FBP_OK;
}

const char* fbp_report_summary_csv(const fbp_report* report) {
  if (report == nullptr) return "";
  if (report->summary.empty()) report->summary = fbp::report_summary_csv(report->report);
  return report->summary.c_str();
}

void fbp_report_free(fbp_report* report) { delete report; }

fbp_status fbp_error_analysis(const fbp_report* report, double tau1, double tau2, const char* csv_path,
                              size_t* bad_count, size_t* good_count) {
  FBP_REQUIRE(report);
  return guarded([&] {
    const auto partition = fbp::epsilon_analysis(report->report, tau1, tau2);
    if (csv_path != nullptr) fbp::write_text(csv_path, fbp::epsilon_csv(partition));
    if (bad_count != nullptr) *bad_count = partition.bad.size();
    if (good_count != nullptr) *good_count = partition.good.size();
  });
}

double fbp_default_tau1(void) { return fbp::kDefaultTau1; }
double fbp_default_tau2(void) { return fbp::kDefaultTau2; }

// ---- ablations ----

fbp_status fbp_ablation_run(const fbp_dataset* dataset, const fbp_weights* weights, const fbp_extract_options* base,
                            const char* variants, const fbp_protocol_options* protocol, fbp_ablation** out) {
  FBP_REQUIRE(dataset);
  FBP_REQUIRE(base);
  FBP_REQUIRE(variants);
  FBP_REQUIRE(out);
  return guarded([&] {
    std::vector<std::string> list;
    std::stringstream in(variants);
    for (std::string v; std::getline(in, v, ',');) {
      if (!v.empty()) list.push_back(v);
    }
    if (list.empty()) fbp::fail(fbp::ErrorKind::kConfig, "no ablation variants given");
    const auto config = to_config(*base);
    auto table = fbp::run_ablation(dataset->manifest, dataset->annotations ? &*dataset->annotations : nullptr,
                                   weights ? &weights->store : nullptr, config, list, to_protocol(protocol),
                                   fbp::bayesian_ridge_regressor());
    *out = new fbp_ablation{std::move(table)};
  });
}

size_t fbp_ablation_count(const fbp_ablation* ablation) { return ablation ? ablation->table.rows.size() : 0; }

fbp_status fbp_ablation_row(const fbp_ablation* ablation, size_t i, const char** variant, fbp_metrics* average,
                            int* best) {
  FBP_REQUIRE(ablation);
  if (i >= ablation->table.rows.size()) return set_error(FBP_ERROR_ARGUMENT, "ablation row out of range");
  const auto& row = ablation->table.rows[i];
  if (variant != nullptr) *variant = row.variant.c_str();
  if (average != nullptr) *average = to_c(row.report.average);
  if (best != nullptr) *best = ablation->table.best() == static_cast<std::ptrdiff_t>(i) ? 1 : 0;
  return FBP_OK;
}

fbp_status fbp_ablation_write(const fbp_ablation* ablation, const char* table_csv, const char* series_csv) {
  FBP_REQUIRE(ablation);
  return guarded([&] {
    if (table_csv != nullptr) fbp::write_text(table_csv, fbp::ablation_csv(ablation->table));
    if (series_csv != nullptr) fbp::write_text(series_csv, fbp::ablation_series_csv(ablation->table));
  });
}

void fbp_ablation_free(fbp_ablation* ablation) { delete ablation; }

}  // extern "C"
