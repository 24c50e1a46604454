/*
 * Copyright 2026 The fbp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to the facial beauty prediction pipeline.
 *
 * Every object is an opaque handle created by an fbp_*_load/create/run call
 * and released with the matching fbp_*_free. Functions that can fail return
 * an fbp_status; on failure fbp_last_error() describes the problem for the
 * calling thread until its next failing call. Handles are immutable after
 * creation and may be shared between threads.
 */

#ifndef FBP_H_
#define FBP_H_

#include <stddef.h>
#include <stdint.h>

#if defined(FBP_BUILDING_LIBRARY)
#define FBP_API __attribute__((visibility("default")))
#else
#define FBP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fbp_status {
  FBP_OK = 0,
  FBP_ERROR_CONFIG = 1,       /* bad options: unknown tap, mode, thresholds */
  FBP_ERROR_DATA = 2,         /* dataset ingestion: missing ids, split files */
  FBP_ERROR_FORMAT = 3,       /* malformed BWF1 / FMX1 / model / report file */
  FBP_ERROR_VALIDATION = 4,   /* invariant violated: weight shapes, non-finite data */
  FBP_ERROR_SHAPE = 5,        /* incompatible dimensions */
  FBP_ERROR_IO = 6,           /* filesystem failure */
  FBP_ERROR_ARGUMENT = 7,     /* null handle or pointer */
  FBP_ERROR_INTERNAL = 8
} fbp_status;

FBP_API const char* fbp_version(void);
FBP_API const char* fbp_status_string(fbp_status status);
FBP_API const char* fbp_last_error(void);

/* ---- weights (BWF1) --------------------------------------------------- */

typedef struct fbp_weights fbp_weights;

FBP_API fbp_status fbp_weights_load(const char* path, fbp_weights** out);
/* Deterministic He-scaled weights for all 13 conv layers. */
FBP_API fbp_status fbp_weights_generate_random(uint64_t seed, fbp_weights** out);
FBP_API fbp_status fbp_weights_save(const fbp_weights* weights, const char* path);
FBP_API size_t fbp_weights_tensor_count(const fbp_weights* weights);
FBP_API const char* fbp_weights_provenance(const fbp_weights* weights);
FBP_API void fbp_weights_free(fbp_weights* weights);

/* ---- feature matrices (FMX1) --------------------------------------------- */

typedef struct fbp_matrix fbp_matrix;

/* Copies `rows * cols` row-major floats and `rows` ids. */
FBP_API fbp_status fbp_matrix_create(size_t rows, size_t cols, const float* data, const char* const* ids,
                                     fbp_matrix** out);
FBP_API fbp_status fbp_matrix_load(const char* path, fbp_matrix** out);
FBP_API fbp_status fbp_matrix_save(const fbp_matrix* matrix, const char* path);
FBP_API size_t fbp_matrix_rows(const fbp_matrix* matrix);
FBP_API size_t fbp_matrix_cols(const fbp_matrix* matrix);
FBP_API const float* fbp_matrix_data(const fbp_matrix* matrix);
FBP_API const char* fbp_matrix_id(const fbp_matrix* matrix, size_t row);
/* Images dropped during extraction (undecodable files). */
FBP_API size_t fbp_matrix_excluded_count(const fbp_matrix* matrix);
FBP_API const char* fbp_matrix_excluded_id(const fbp_matrix* matrix, size_t i);
FBP_API const char* fbp_matrix_excluded_reason(const fbp_matrix* matrix, size_t i);
FBP_API void fbp_matrix_free(fbp_matrix* matrix);

/* ---- datasets ------------------------------------------------------------ */

typedef struct fbp_dataset fbp_dataset;

/* Manifest CSV `id,path,score`; the annotation sidecar may be NULL. */
FBP_API fbp_status fbp_dataset_open(const char* manifest_path, const char* annotations_path, fbp_dataset** out);
/* New dataset keeping only rows whose id has a row in `features`. */
FBP_API fbp_status fbp_dataset_restrict(const fbp_dataset* dataset, const fbp_matrix* features, fbp_dataset** out);
FBP_API size_t fbp_dataset_size(const fbp_dataset* dataset);
FBP_API const char* fbp_dataset_id(const fbp_dataset* dataset, size_t row);
FBP_API double fbp_dataset_score(const fbp_dataset* dataset, size_t row);
FBP_API void fbp_dataset_free(fbp_dataset* dataset);

/* ---- feature extraction ---------------------------------------------------- */

typedef struct fbp_extract_options {
  const char* mode;       /* "crop" (default), "warp", "padding" */
  const char* align;      /* "none" (default), "eyes" */
  const char* taps;       /* comma list such as "conv4_1,conv5_1"; NULL when descriptor is set */
  const char* descriptor; /* "hog", "lbp", "gray"; NULL when taps is set */
  int pre_relu;           /* nonzero: tap conv outputs before the ReLU */
  unsigned threads;       /* 0: hardware concurrency */
} fbp_extract_options;

FBP_API void fbp_extract_options_init(fbp_extract_options* options);
/* `weights` may be NULL for descriptor extraction. */
FBP_API fbp_status fbp_extract(const fbp_dataset* dataset, const fbp_weights* weights,
                               const fbp_extract_options* options, fbp_matrix** out);

/* ---- regression ------------------------------------------------------------ */

typedef struct fbp_model fbp_model;

typedef struct fbp_model_info {
  double alpha;  /* noise precision */
  double lambda; /* weight precision */
  double intercept;
  double log_marginal_likelihood;
  size_t dim;
  size_t iterations;
  int converged;
} fbp_model_info;

FBP_API fbp_status fbp_ridge_fit(const fbp_matrix* features, const double* y, size_t n, fbp_model** out);
/* Targets taken from the dataset scores, matched by row id. */
FBP_API fbp_status fbp_ridge_fit_dataset(const fbp_matrix* features, const fbp_dataset* dataset, fbp_model** out);
FBP_API fbp_status fbp_ridge_predict(const fbp_model* model, const fbp_matrix* features, double* out, size_t out_len);
FBP_API fbp_status fbp_model_save(const fbp_model* model, const char* path);
FBP_API fbp_status fbp_model_load(const char* path, fbp_model** out);
FBP_API fbp_status fbp_model_get_info(const fbp_model* model, fbp_model_info* info);
FBP_API void fbp_model_free(fbp_model* model);

/* ---- evaluation ------------------------------------------------------------- */

typedef struct fbp_metrics {
  double mae;
  double rmse;
  double pc;
} fbp_metrics;

FBP_API fbp_status fbp_metrics_compute(const double* pred, const double* truth, size_t n, fbp_metrics* out);

typedef struct fbp_protocol_options {
  const char* protocol;   /* "scut" (default), "random", "hotornot" */
  const uint64_t* seeds;  /* NULL: 1..5 */
  size_t seed_count;
  double test_fraction;   /* "random" only; 0 selects 0.2 */
  const char* split_dir;  /* "hotornot": train_<k>.txt / test_<k>.txt */
} fbp_protocol_options;

FBP_API void fbp_protocol_options_init(fbp_protocol_options* options);

typedef struct fbp_report fbp_report;

/* Runs every split round with Bayesian ridge. `config_json` (may be NULL) is
 * a flat JSON object echoed into the report. A failing round leaves the
 * report incomplete but still returns FBP_OK. */
FBP_API fbp_status fbp_experiment_run(const fbp_dataset* dataset, const fbp_matrix* features,
                                      const fbp_protocol_options* protocol, const char* config_json,
                                      fbp_report** out);
FBP_API fbp_status fbp_report_load(const char* json_path, fbp_report** out);
/* Writes report.json, summary.csv and predictions.csv into `dir`. */
FBP_API fbp_status fbp_report_write(const fbp_report* report, const char* dir);
FBP_API int fbp_report_complete(const fbp_report* report);
FBP_API size_t fbp_report_round_count(const fbp_report* report);
FBP_API fbp_status fbp_report_round(const fbp_report* report, size_t i, fbp_metrics* metrics, int* ok);
FBP_API fbp_status fbp_report_average(const fbp_report* report, fbp_metrics* metrics);
/* Valid until the report is freed. */
FBP_API const char* fbp_report_summary_csv(const fbp_report* report);
FBP_API void fbp_report_free(fbp_report* report);

/* Partitions test predictions by |y - y_hat| >= tau1 (bad) and <= tau2 (good)
 * and writes them as CSV. Either count pointer may be NULL. */
FBP_API fbp_status fbp_error_analysis(const fbp_report* report, double tau1, double tau2, const char* csv_path,
                                      size_t* bad_count, size_t* good_count);
FBP_API double fbp_default_tau1(void);
FBP_API double fbp_default_tau2(void);

typedef struct fbp_ablation fbp_ablation;

/* `variants` is a comma list of "mode:<m>", "descriptor:<d>", "layer:<tap>"
 * or "taps:<a+b>" applied on top of `base`. */
FBP_API fbp_status fbp_ablation_run(const fbp_dataset* dataset, const fbp_weights* weights,
                                    const fbp_extract_options* base, const char* variants,
                                    const fbp_protocol_options* protocol, fbp_ablation** out);
FBP_API size_t fbp_ablation_count(const fbp_ablation* ablation);
FBP_API fbp_status fbp_ablation_row(const fbp_ablation* ablation, size_t i, const char** variant,
                                    fbp_metrics* average, int* best);
/* Comparison table (variant,mae,rmse,pc,best) and plot series (variant,pc). */
FBP_API fbp_status fbp_ablation_write(const fbp_ablation* ablation, const char* table_csv, const char* series_csv);
FBP_API void fbp_ablation_free(fbp_ablation* ablation);

#ifdef __cplusplus
}
#endif

#endif /* FBP_H_ */
