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

#include "fbp/ridge.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "binary_io.hpp"
#include "fbp/error.hpp"
#include "json.hpp"

namespace fbp {

namespace {

constexpr std::size_t kColumnBlock = 1024;

// Thin SVD of the centred design matrix, kept in whichever space is small.
// Only directions with non-negligible singular value are retained.
class Spectrum {
 public:
  Spectrum(const DesignMatrix& x, const std::vector<double>& mean, const Eigen::VectorXd& yc, bool gram)
      : x_(x), mean_(mean), gram_(gram) {
    if (gram_) {
      build_gram(yc);
    } else {
      build_scatter(yc);
    }
  }

  std::size_t rank() const noexcept { return static_cast<std::size_t>(eig_.size()); }
  const Eigen::VectorXd& eigenvalues() const noexcept { return eig_; }  // s_i^2
  const Eigen::VectorXd& projections() const noexcept { return z_; }   // u_i . y

  /// d-space vector sum_i v_i * coef_i, where v_i are right singular vectors.
  std::vector<double> materialize(const Eigen::VectorXd& coef) const {
    const std::size_t d = x_.cols();
    std::vector<double> m(d, 0.0);
    if (gram_) {
      // v_i = Xc^T u_i / s_i
      const Eigen::VectorXd c = basis_ * coef.cwiseQuotient(eig_.cwiseSqrt());
      double csum = 0.0;
      for (std::size_t i = 0; i < x_.rows(); ++i) {
        const double ci = c[static_cast<Eigen::Index>(i)];
        csum += ci;
        const float* row = x_.row(i);
        for (std::size_t j = 0; j < d; ++j) m[j] += ci * row[j];
      }
      for (std::size_t j = 0; j < d; ++j) m[j] -= csum * mean_[j];
    } else {
      Eigen::Map<Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(d)) = basis_ * coef;
    }
    return m;
  }

 private:
  void keep_significant(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& solver, std::size_t dim) {
    const Eigen::VectorXd& all = solver.eigenvalues();
    const double top = all.size() ? all.maxCoeff() : 0.0;
    const double cutoff = top * static_cast<double>(std::max(x_.rows(), x_.cols())) *
                          std::numeric_limits<double>::epsilon();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < all.size(); ++i) {
      if (all[i] > cutoff && all[i] > 0.0) keep.push_back(i);
    }
    eig_.resize(static_cast<Eigen::Index>(keep.size()));
    basis_.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
      eig_[static_cast<Eigen::Index>(k)] = all[keep[k]];
      basis_.col(static_cast<Eigen::Index>(k)) = solver.eigenvectors().col(keep[k]);
    }
  }

  void build_gram(const Eigen::VectorXd& yc) {
    const auto n = static_cast<Eigen::Index>(x_.rows());
    const std::size_t d = x_.cols();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd block(n, static_cast<Eigen::Index>(std::min(kColumnBlock, d)));
    for (std::size_t j0 = 0; j0 < d; j0 += kColumnBlock) {
      const std::size_t w = std::min(kColumnBlock, d - j0);
      for (Eigen::Index i = 0; i < n; ++i) {
        const float* row = x_.row(static_cast<std::size_t>(i)) + j0;
        for (std::size_t j = 0; j < w; ++j) block(i, static_cast<Eigen::Index>(j)) = row[j] - mean_[j0 + j];
      }
      const auto cols = block.leftCols(static_cast<Eigen::Index>(w));
      g.selfadjointView<Eigen::Lower>().rankUpdate(cols);
    }
    g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g);
    if (solver.info() != Eigen::Success) fail(ErrorKind::kValidation, "ridge: Gram eigendecomposition failed");
    keep_significant(solver, x_.rows());
    z_ = basis_.transpose() * yc;
  }

  void build_scatter(const Eigen::VectorXd& yc) {
    const auto n = static_cast<Eigen::Index>(x_.rows());
    const auto d = static_cast<Eigen::Index>(x_.cols());
    Eigen::MatrixXd xc(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      const float* row = x_.row(static_cast<std::size_t>(i));
      for (Eigen::Index j = 0; j < d; ++j) xc(i, j) = row[j] - mean_[static_cast<std::size_t>(j)];
    }
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
    s.selfadjointView<Eigen::Lower>().rankUpdate(xc.transpose());
    s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
    if (solver.info() != Eigen::Success) fail(ErrorKind::kValidation, "ridge: scatter eigendecomposition failed");
    keep_significant(solver, x_.cols());
    // u_i . y = v_i . (Xc^T y) / s_i
    z_ = (basis_.transpose() * (xc.transpose() * yc)).cwiseQuotient(eig_.cwiseSqrt());
  }

  const DesignMatrix& x_;
  const std::vector<double>& mean_;
  bool gram_;
  Eigen::VectorXd eig_;
  Eigen::MatrixXd basis_;  // U (n x r) on the Gram path, V (d x r) on the scatter path
  Eigen::VectorXd z_;
};

struct Posterior {
  Eigen::VectorXd coef;  // posterior mean in the V basis
  double gamma = 0.0;    // effective number of parameters
  double rss = 0.0;      // ||y - Xm||^2
  double norm2 = 0.0;    // ||m||^2
  double log_det = 0.0;  // log |lambda I + alpha Xc^T Xc|, r significant directions
};

Posterior posterior(const Spectrum& sp, double yy, double alpha, double lambda, std::size_t d) {
  const Eigen::VectorXd& e = sp.eigenvalues();
  const Eigen::VectorXd& z = sp.projections();
  Posterior p;
  p.coef.resize(e.size());
  double explained = 0.0;
  double kept = 0.0;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    const double denom = lambda + alpha * e[i];
    p.coef[i] = alpha * std::sqrt(e[i]) * z[i] / denom;
    p.gamma += alpha * e[i] / denom;
    const double shrink = lambda / denom;
    kept += shrink * shrink * z[i] * z[i];
    explained += z[i] * z[i];
    p.log_det += std::log(denom);
  }
  p.log_det += static_cast<double>(d - static_cast<std::size_t>(e.size())) * std::log(lambda);
  p.rss = std::max(0.0, yy - explained) + kept;
  p.norm2 = p.coef.squaredNorm();
  return p;
}

double objective(const Posterior& p, const RidgeHyperPrior& prior, double alpha, double lambda,
                 std::size_t n, std::size_t d) {
  const double nd = static_cast<double>(n), dd = static_cast<double>(d);
  double score = prior.lambda_shape * std::log(lambda) - prior.lambda_rate * lambda;
  score += prior.alpha_shape * std::log(alpha) - prior.alpha_rate * alpha;
  score += 0.5 * (dd * std::log(lambda) + nd * std::log(alpha) - alpha * p.rss - lambda * p.norm2 -
                  p.log_det - nd * std::log(2.0 * std::numbers::pi));
  return score;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

RidgeModel fit_ridge(const DesignMatrix& x, std::span<const double> y, const RidgeOptions& options) {
  const std::size_t n = x.rows(), d = x.cols();
  if (n < 2) fail(ErrorKind::kValidation, "ridge: need at least 2 samples, got " + std::to_string(n));
  if (d < 1) fail(ErrorKind::kValidation, "ridge: need at least 1 feature");
  if (y.size() != n) {
    fail(ErrorKind::kShape, "ridge: " + std::to_string(y.size()) + " targets for " + std::to_string(n) + " rows");
  }
  const RidgeHyperPrior& prior = options.prior;
  if (prior.alpha_shape < 0 || prior.alpha_rate < 0 || prior.lambda_shape < 0 || prior.lambda_rate < 0) {
    fail(ErrorKind::kConfig, "ridge: Gamma hyperparameters must be >= 0");
  }

  RidgeModel model;
  model.feature_mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const float* row = x.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isfinite(row[j])) {
        fail(ErrorKind::kValidation, "ridge: non-finite feature at row " + std::to_string(i) + ", column " + std::to_string(j));
      }
      model.feature_mean[j] += row[j];
    }
  }
  for (auto& m : model.feature_mean) m /= static_cast<double>(n);

  double y_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(y[i])) fail(ErrorKind::kValidation, "ridge: non-finite target at row " + std::to_string(i));
    y_mean += y[i];
  }
  y_mean /= static_cast<double>(n);
  Eigen::VectorXd yc(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) yc[static_cast<Eigen::Index>(i)] = y[i] - y_mean;
  const double yy = yc.squaredNorm();
  const double y_var = yy / static_cast<double>(n);

  double alpha = options.alpha_init.value_or(y_var > 0.0 ? 1.0 / y_var : options.alpha_cap);
  double lambda = options.lambda_init.value_or(1.0);
  alpha = std::min(alpha, options.alpha_cap);
  if (!(alpha > 0.0) || !(lambda > 0.0)) fail(ErrorKind::kConfig, "ridge: initial precisions must be positive");

  if (y_var == 0.0) {
    model.weights.assign(d, 0.0);
    model.intercept = y_mean;
    model.alpha = options.alpha_cap;
    model.lambda = lambda;
    model.converged = true;
    return model;
  }

  const bool gram = options.solver == RidgeSolver::kGram || (options.solver == RidgeSolver::kAuto && d > n);
  const Spectrum spectrum(x, model.feature_mean, yc, gram);

  Posterior post = posterior(spectrum, yy, alpha, lambda, d);
  if (options.update_hyperparameters) {
    Eigen::VectorXd previous;
    const double bound = options.tolerance * std::sqrt(static_cast<double>(d));
    for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
      post = posterior(spectrum, yy, alpha, lambda, d);
      model.evidence_trace.push_back(objective(post, prior, alpha, lambda, n, d));

      const double lambda_den = post.norm2 + 2.0 * prior.lambda_rate;
      const double alpha_den = post.rss + 2.0 * prior.alpha_rate;
      lambda = lambda_den > 0.0 ? (post.gamma + 2.0 * prior.lambda_shape) / lambda_den : options.alpha_cap;
      alpha = alpha_den > 0.0 ? (static_cast<double>(n) - post.gamma + 2.0 * prior.alpha_shape) / alpha_den
                              : options.alpha_cap;
      alpha = std::min(alpha, options.alpha_cap);
      lambda = std::min(lambda, options.alpha_cap);
      model.iterations = iter + 1;

      if (iter > 0) {
        // V has orthonormal columns, so ||delta m||_2 = ||delta coef||_2 and
        // max|delta m| lies in [||.||_2 / sqrt(d), ||.||_2].
        const Eigen::VectorXd delta = post.coef - previous;
        const double l2 = delta.norm();
        bool done = l2 < options.tolerance;
        if (!done && l2 < bound) done = max_abs(spectrum.materialize(delta)) < options.tolerance;
        if (done) {
          model.converged = true;
          break;
        }
      }
      previous = post.coef;
    }
    post = posterior(spectrum, yy, alpha, lambda, d);
  } else {
    model.converged = true;
  }

  model.alpha = alpha;
  model.lambda = lambda;
  model.log_marginal_likelihood = objective(post, prior, alpha, lambda, n, d);
  model.evidence_trace.push_back(model.log_marginal_likelihood);
  model.weights = spectrum.materialize(post.coef);
  double offset = 0.0;
  for (std::size_t j = 0; j < d; ++j) offset += model.feature_mean[j] * model.weights[j];
  model.intercept = y_mean - offset;
  return model;
}

std::vector<double> predict(const RidgeModel& model, const DesignMatrix& x) {
  if (x.cols() != model.dim()) {
    fail(ErrorKind::kShape, "predict: model has " + std::to_string(model.dim()) + " features, input has " +
                                std::to_string(x.cols()));
  }
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const float* row = x.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) acc += row[j] * model.weights[j];
    out[i] = acc + model.intercept;
  }
  return out;
}

// ---- persistence ------------------------------------------------------------

std::vector<std::uint8_t> serialize_model(const RidgeModel& model) {
  nlohmann::json header = {
      {"format", "fbp-bayesian-ridge"},
      {"version", 1},
      {"dim", model.dim()},
      {"alpha", model.alpha},
      {"lambda", model.lambda},
      {"intercept", model.intercept},
      {"iterations", model.iterations},
      {"converged", model.converged},
      {"log_marginal_likelihood", model.log_marginal_likelihood},
  };
  detail::ByteWriter w;
  w.str(header.dump());
  std::vector<float> rows;
  rows.reserve(2 * model.dim());
  for (double v : model.feature_mean) rows.push_back(static_cast<float>(v));
  for (double v : model.weights) rows.push_back(static_cast<float>(v));
  const auto block = serialize_matrix(FeatureMatrix(2, model.dim(), std::move(rows), {"feature_mean", "weights"}));
  auto out = std::move(w).take();
  out.insert(out.end(), block.begin(), block.end());
  return out;
}

RidgeModel parse_model(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "model");
  const std::string text = r.str();
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("model: bad header: ") + e.what());
  }
  if (header.value("format", "") != "fbp-bayesian-ridge") fail(ErrorKind::kFormat, "model: unrecognised header");
  std::size_t offset = r.position();
  const FeatureMatrix m = parse_matrix(bytes, offset);
  if (offset != bytes.size()) fail(ErrorKind::kFormat, "model: trailing bytes");
  RidgeModel model;
  try {
    const std::size_t dim = header.at("dim").get<std::size_t>();
    if (m.rows() != 2 || m.cols() != dim) fail(ErrorKind::kFormat, "model: payload does not match header dim");
    model.alpha = header.at("alpha").get<double>();
    model.lambda = header.at("lambda").get<double>();
    model.intercept = header.at("intercept").get<double>();
    model.iterations = header.at("iterations").get<std::size_t>();
    model.converged = header.at("converged").get<bool>();
    model.log_marginal_likelihood = header.at("log_marginal_likelihood").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("model: ") + e.what());
  }
  const auto mean = m.row(0), weights = m.row(1);
  model.feature_mean.assign(mean.begin(), mean.end());
  model.weights.assign(weights.begin(), weights.end());
  return model;
}

void save_model(const RidgeModel& model, const std::filesystem::path& path) {
  detail::write_file(path, serialize_model(model));
}

RidgeModel load_model(const std::filesystem::path& path) { return parse_model(detail::read_file(path)); }

}  // namespace fbp
