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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fbp/dataset.hpp"
#include "fbp/features.hpp"
#include "fbp/ridge.hpp"

namespace fbp {

struct RoundMetrics {
  double mae = 0.0;
  double rmse = 0.0;
  double pc = 0.0;
};

struct SamplePrediction {
  std::size_t round = 0;
  std::string id;
  double truth = 0.0;
  double prediction = 0.0;
  double epsilon = 0.0;  // |truth - prediction|
};

struct RoundResult {
  std::size_t round = 0;
  std::optional<std::uint64_t> seed;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  bool ok = false;
  std::string error;
  RoundMetrics metrics;
  // Regressor diagnostics (Bayesian ridge).
  double alpha = 0.0;
  double lambda = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

struct ExperimentReport {
  ConfigEcho config;
  std::vector<RoundResult> rounds;
  RoundMetrics average;  // arithmetic mean over successful rounds
  std::vector<SamplePrediction> samples;

  bool complete() const;
};

/// Fits on the training rows and returns predictions for the test rows.
/// May record diagnostics into `info`.
using Regressor = std::function<std::vector<double>(const DesignMatrix& train_x, std::span<const double> train_y,
                                                    const DesignMatrix& test_x, RoundResult& info)>;

Regressor bayesian_ridge_regressor(RidgeOptions options = {});

/// Runs every split; a failing round is recorded (ok = false) and excluded
/// from the average instead of aborting the experiment. Throws an ingestion
/// error if a split id has no feature row.
ExperimentReport run_experiment(const DatasetManifest& manifest, const std::vector<SplitPlan>& splits,
                                const FeatureMatrix& features, const Regressor& regressor, ConfigEcho config = {});

std::string report_json(const ExperimentReport& report);
ExperimentReport parse_report_json(std::string_view text);
/// round,seed,n_train,n_test,mae,rmse,pc rows plus an "avg" row.
std::string report_summary_csv(const ExperimentReport& report);
/// round,id,truth,prediction,epsilon
std::string report_predictions_csv(const ExperimentReport& report);

// ---- error analysis -----------------------------------------------------------

inline constexpr double kDefaultTau1 = 2.75;
inline constexpr double kDefaultTau2 = 0.02;

struct EpsilonPartition {
  double tau1 = kDefaultTau1;
  double tau2 = kDefaultTau2;
  std::vector<SamplePrediction> bad;   // epsilon >= tau1
  std::vector<SamplePrediction> good;  // epsilon <= tau2
};

EpsilonPartition epsilon_analysis(const ExperimentReport& report, double tau1 = kDefaultTau1,
                                  double tau2 = kDefaultTau2);
std::string epsilon_csv(const EpsilonPartition& partition);

// ---- ablations ----------------------------------------------------------------

struct AblationRow {
  std::string variant;
  ExperimentReport report;
};

struct AblationTable {
  std::vector<AblationRow> rows;

  /// Row with the highest averaged PC, or -1 when empty.
  std::ptrdiff_t best() const;
};

using FeatureProvider = std::function<FeatureMatrix(const std::string& variant)>;

AblationTable ablation_suite(const DatasetManifest& manifest, const std::vector<SplitPlan>& splits,
                             std::span<const std::string> variants, const FeatureProvider& features,
                             const Regressor& regressor);

/// variant,mae,rmse,pc,best
std::string ablation_csv(const AblationTable& table);
/// variant,pc
std::string ablation_series_csv(const AblationTable& table);

void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace fbp
