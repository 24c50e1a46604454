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

#include "fbp/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "fbp/error.hpp"
#include "fbp/metrics.hpp"
#include "json.hpp"

namespace fbp {

namespace {

using nlohmann::json;

std::string fixed(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

bool ExperimentReport::complete() const {
  if (rounds.empty()) return false;
  for (const auto& r : rounds) {
    if (!r.ok) return false;
  }
  return true;
}

Regressor bayesian_ridge_regressor(RidgeOptions options) {
  return [options](const DesignMatrix& train_x, std::span<const double> train_y, const DesignMatrix& test_x,
                   RoundResult& info) {
    const RidgeModel model = fit_ridge(train_x, train_y, options);
    info.alpha = model.alpha;
    info.lambda = model.lambda;
    info.iterations = model.iterations;
    info.converged = model.converged;
    return predict(model, test_x);
  };
}

ExperimentReport run_experiment(const DatasetManifest& manifest, const std::vector<SplitPlan>& splits,
                                const FeatureMatrix& features, const Regressor& regressor, ConfigEcho config) {
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < features.ids().size(); ++i) row_of.emplace(features.ids()[i], i);

  auto lookup = [&](const std::vector<std::string>& ids, std::vector<std::size_t>& rows, std::vector<double>& y) {
    rows.clear();
    y.clear();
    for (const auto& id : ids) {
      auto it = row_of.find(id);
      if (it == row_of.end()) fail(ErrorKind::kIngestion, "no feature row for image id '" + id + "'");
      const ManifestRow* m = manifest.find(id);
      if (!m) fail(ErrorKind::kIngestion, "image id '" + id + "' is not in the manifest");
      rows.push_back(it->second);
      y.push_back(m->score);
    }
  };

  // Every id must resolve before any round runs.
  {
    std::vector<std::size_t> rows;
    std::vector<double> y;
    for (const auto& plan : splits) {
      lookup(plan.train, rows, y);
      lookup(plan.test, rows, y);
    }
  }

  ExperimentReport report;
  report.config = std::move(config);
  std::size_t ok_rounds = 0;
  RoundMetrics sum;
  for (const auto& plan : splits) {
    RoundResult round;
    round.round = plan.round;
    round.seed = plan.seed;
    round.n_train = plan.train.size();
    round.n_test = plan.test.size();
    std::vector<std::size_t> train_rows, test_rows;
    std::vector<double> train_y, test_y;
    lookup(plan.train, train_rows, train_y);
    lookup(plan.test, test_rows, test_y);
    try {
      const DesignMatrix train_x(features, train_rows);
      const DesignMatrix test_x(features, test_rows);
      const std::vector<double> pred = regressor(train_x, train_y, test_x, round);
      if (pred.size() != test_y.size()) fail(ErrorKind::kShape, "regressor returned the wrong number of predictions");
      round.metrics = {mae(pred, test_y), rmse(pred, test_y), pearson(pred, test_y)};
      for (std::size_t i = 0; i < pred.size(); ++i) {
        report.samples.push_back({plan.round, plan.test[i], test_y[i], pred[i], std::abs(test_y[i] - pred[i])});
      }
      round.ok = true;
      ++ok_rounds;
      sum.mae += round.metrics.mae;
      sum.rmse += round.metrics.rmse;
      sum.pc += round.metrics.pc;
    } catch (const Error& e) {
      round.ok = false;
      round.error = e.what();
    }
    report.rounds.push_back(std::move(round));
  }
  if (ok_rounds > 0) {
    const double k = static_cast<double>(ok_rounds);
    report.average = {sum.mae / k, sum.rmse / k, sum.pc / k};
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    report.average = {nan, nan, nan};
  }
  return report;
}

// ---- serialisation --------------------------------------------------------

namespace {

json metrics_json(const RoundMetrics& m) {
  auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  return {{"mae", num(m.mae)}, {"rmse", num(m.rmse)}, {"pc", num(m.pc)}};
}

RoundMetrics metrics_from(const json& j) {
  auto num = [](const json& v) { return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>(); };
  return {num(j.at("mae")), num(j.at("rmse")), num(j.at("pc"))};
}

}  // namespace

std::string report_json(const ExperimentReport& report) {
  json config = json::object();
  for (const auto& [k, v] : report.config) config[k] = v;
  json rounds = json::array();
  for (const auto& r : report.rounds) {
    json jr = {{"round", r.round},
               {"seed", r.seed ? json(*r.seed) : json(nullptr)},
               {"n_train", r.n_train},
               {"n_test", r.n_test},
               {"ok", r.ok}};
    if (r.ok) {
      jr.update(metrics_json(r.metrics));
      jr["alpha"] = r.alpha;
      jr["lambda"] = r.lambda;
      jr["iterations"] = r.iterations;
      jr["converged"] = r.converged;
    } else {
      jr["error"] = r.error;
    }
    rounds.push_back(std::move(jr));
  }
  json samples = json::array();
  for (const auto& s : report.samples) {
    samples.push_back({{"round", s.round}, {"id", s.id}, {"y", s.truth}, {"y_hat", s.prediction}, {"epsilon", s.epsilon}});
  }
  json doc = {{"config", config},
              {"complete", report.complete()},
              {"rounds", rounds},
              {"average", metrics_json(report.average)},
              {"samples", samples}};
  return doc.dump(2) + "\n";
}

ExperimentReport parse_report_json(std::string_view text) {
  ExperimentReport report;
  try {
    const json doc = json::parse(text);
    for (auto it = doc.at("config").begin(); it != doc.at("config").end(); ++it) {
      report.config.emplace_back(it.key(), it.value().get<std::string>());
    }
    for (const auto& jr : doc.at("rounds")) {
      RoundResult r;
      r.round = jr.at("round").get<std::size_t>();
      if (!jr.at("seed").is_null()) r.seed = jr.at("seed").get<std::uint64_t>();
      r.n_train = jr.at("n_train").get<std::size_t>();
      r.n_test = jr.at("n_test").get<std::size_t>();
      r.ok = jr.at("ok").get<bool>();
      if (r.ok) {
        r.metrics = metrics_from(jr);
        r.alpha = jr.value("alpha", 0.0);
        r.lambda = jr.value("lambda", 0.0);
        r.iterations = jr.value("iterations", std::size_t{0});
        r.converged = jr.value("converged", false);
      } else {
        r.error = jr.value("error", "");
      }
      report.rounds.push_back(std::move(r));
    }
    report.average = metrics_from(doc.at("average"));
    for (const auto& js : doc.at("samples")) {
      report.samples.push_back({js.at("round").get<std::size_t>(), js.at("id").get<std::string>(),
                                js.at("y").get<double>(), js.at("y_hat").get<double>(), js.at("epsilon").get<double>()});
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormat, std::string("report: ") + e.what());
  }
  return report;
}

std::string report_summary_csv(const ExperimentReport& report) {
  std::string out = "round,seed,n_train,n_test,mae,rmse,pc\n";
  for (const auto& r : report.rounds) {
    out += std::to_string(r.round) + "," + (r.seed ? std::to_string(*r.seed) : "") + "," + std::to_string(r.n_train) +
           "," + std::to_string(r.n_test) + ",";
    if (r.ok) {
      out += fixed(r.metrics.mae) + "," + fixed(r.metrics.rmse) + "," + fixed(r.metrics.pc) + "\n";
    } else {
      out += "failed,failed,failed\n";
    }
  }
  out += "avg,,,," + fixed(report.average.mae) + "," + fixed(report.average.rmse) + "," + fixed(report.average.pc) + "\n";
  return out;
}

std::string report_predictions_csv(const ExperimentReport& report) {
  std::string out = "round,id,truth,prediction,epsilon\n";
  for (const auto& s : report.samples) {
    out += std::to_string(s.round) + "," + s.id + "," + fixed(s.truth) + "," + fixed(s.prediction) + "," +
           fixed(s.epsilon) + "\n";
  }
  return out;
}

// ---- error analysis -------------------------------------------------------

EpsilonPartition epsilon_analysis(const ExperimentReport& report, double tau1, double tau2) {
  if (std::isnan(tau1) || std::isnan(tau2) || tau2 < 0.0 || !(tau1 > tau2)) {
    fail(ErrorKind::kConfig, "epsilon analysis needs tau1 > tau2 >= 0");
  }
  EpsilonPartition p;
  p.tau1 = tau1;
  p.tau2 = tau2;
  for (const auto& s : report.samples) {
    if (s.epsilon >= tau1) {
      p.bad.push_back(s);
    } else if (s.epsilon <= tau2) {
      p.good.push_back(s);
    }
  }
  return p;
}

std::string epsilon_csv(const EpsilonPartition& partition) {
  char header[128];
  std::snprintf(header, sizeof header, "# tau1=%g tau2=%g\n", partition.tau1, partition.tau2);
  std::string out = header;
  out += "class,round,id,truth,prediction,epsilon\n";
  for (auto [label, rows] : {std::pair{"bad", &partition.bad}, std::pair{"good", &partition.good}}) {
    for (const auto& s : *rows) {
      out += std::string(label) + "," + std::to_string(s.round) + "," + s.id + "," + fixed(s.truth) + "," +
             fixed(s.prediction) + "," + fixed(s.epsilon) + "\n";
    }
  }
  return out;
}

// ---- ablations --------------------------------------------------------------

std::ptrdiff_t AblationTable::best() const {
  std::ptrdiff_t best = -1;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double pc = rows[i].report.average.pc;
    if (std::isnan(pc)) continue;
    if (best < 0 || pc > rows[static_cast<std::size_t>(best)].report.average.pc) best = static_cast<std::ptrdiff_t>(i);
  }
  return best;
}

AblationTable ablation_suite(const DatasetManifest& manifest, const std::vector<SplitPlan>& splits,
                             std::span<const std::string> variants, const FeatureProvider& features,
                             const Regressor& regressor) {
  if (variants.empty()) fail(ErrorKind::kConfig, "ablation needs at least one variant");
  AblationTable table;
  for (const auto& v : variants) {
    const FeatureMatrix m = features(v);
    table.rows.push_back({v, run_experiment(manifest, splits, m, regressor, {{"variant", v}})});
  }
  return table;
}

std::string ablation_csv(const AblationTable& table) {
  const std::ptrdiff_t best = table.best();
  std::string out = "variant,mae,rmse,pc,best\n";
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& avg = table.rows[i].report.average;
    out += table.rows[i].variant + "," + fixed(avg.mae) + "," + fixed(avg.rmse) + "," + fixed(avg.pc) + "," +
           (static_cast<std::ptrdiff_t>(i) == best ? "1" : "0") + "\n";
  }
  return out;
}

std::string ablation_series_csv(const AblationTable& table) {
  std::string out = "variant,pc\n";
  for (const auto& row : table.rows) out += row.variant + "," + fixed(row.report.average.pc) + "\n";
  return out;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorKind::kIo, "short write to " + path.string());
}

}  // namespace fbp
