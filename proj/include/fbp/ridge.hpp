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
#include <span>
#include <vector>

#include "fbp/features.hpp"

namespace fbp {

/// Read-only view of a row-major float design matrix, optionally restricted
/// to a subset of rows (so train splits need no copy of wide features).
class DesignMatrix {
 public:
  DesignMatrix(const float* data, std::size_t rows, std::size_t cols)
      : data_(data), rows_(rows), cols_(cols) {}
  DesignMatrix(const float* data, std::size_t cols, std::span<const std::size_t> row_index)
      : data_(data), rows_(row_index.size()), cols_(cols), index_(row_index) {}
  explicit DesignMatrix(const FeatureMatrix& m) : DesignMatrix(m.data().data(), m.rows(), m.cols()) {}
  DesignMatrix(const FeatureMatrix& m, std::span<const std::size_t> row_index)
      : DesignMatrix(m.data().data(), m.cols(), row_index) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  const float* row(std::size_t i) const noexcept {
    return data_ + (index_.empty() ? i : index_[i]) * cols_;
  }

 private:
  const float* data_;
  std::size_t rows_;
  std::size_t cols_;
  std::span<const std::size_t> index_;
};

/// Gamma(shape, rate) hyperpriors on the noise precision (alpha) and the
/// weight precision (lambda).
struct RidgeHyperPrior {
  double alpha_shape = 1e-6;
  double alpha_rate = 1e-6;
  double lambda_shape = 1e-6;
  double lambda_rate = 1e-6;
};

enum class RidgeSolver {
  kAuto,     // Gram when d > n, scatter otherwise
  kGram,     // eigendecomposition of the n x n matrix X X^T
  kScatter,  // eigendecomposition of the d x d matrix X^T X
};

struct RidgeOptions {
  RidgeHyperPrior prior;
  std::size_t max_iterations = 300;
  double tolerance = 1e-4;     // on max |delta m|
  double alpha_cap = 1e10;
  std::optional<double> alpha_init;   // default 1 / var(y)
  std::optional<double> lambda_init;  // default 1
  bool update_hyperparameters = true;
  RidgeSolver solver = RidgeSolver::kAuto;
};

/// Posterior of a fitted Bayesian ridge model. Predictions are
/// y = x . weights + intercept, with intercept = mean(y) - feature_mean . weights.
struct RidgeModel {
  std::vector<double> weights;
  double intercept = 0.0;
  double alpha = 0.0;   // noise precision
  double lambda = 0.0;  // weight precision
  std::vector<double> feature_mean;
  std::size_t iterations = 0;
  bool converged = false;
  double log_marginal_likelihood = 0.0;
  /// Objective at the start of every iteration, then at the final (alpha, lambda).
  std::vector<double> evidence_trace;

  std::size_t dim() const noexcept { return weights.size(); }
};

/// Evidence maximisation (MacKay fixed-point updates) on column-centred data.
RidgeModel fit_ridge(const DesignMatrix& x, std::span<const double> y, const RidgeOptions& options = {});

std::vector<double> predict(const RidgeModel& model, const DesignMatrix& x);

/// Length-prefixed JSON header followed by an FMX1 block whose two rows are
/// the feature mean and the weights (float32).
std::vector<std::uint8_t> serialize_model(const RidgeModel& model);
RidgeModel parse_model(std::span<const std::uint8_t> bytes);
void save_model(const RidgeModel& model, const std::filesystem::path& path);
RidgeModel load_model(const std::filesystem::path& path);

}  // namespace fbp
