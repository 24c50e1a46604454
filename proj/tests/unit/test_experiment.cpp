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

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "doctest.h"
#include "fbp/experiment.hpp"
#include "fbp/metrics.hpp"
#include "test_util.hpp"

using fbp::ErrorKind;

namespace {

struct Synthetic {
  fbp::DatasetManifest manifest;
  fbp::FeatureMatrix features;
};

// Features are the score plus small noise in a few columns, pure noise elsewhere.
Synthetic linear_dataset(std::size_t n, std::size_t d, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  Synthetic s;
  std::vector<float> values(n * d);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = "s" + std::to_string(i);
    const double y = u(rng);
    s.manifest.rows.push_back({id, id + ".png", y});
    ids.push_back(id);
    for (std::size_t j = 0; j < d; ++j) {
      values[i * d + j] = static_cast<float>(j < 3 ? y * (j + 1) + noise * g(rng) : g(rng));
    }
  }
  s.features = fbp::FeatureMatrix(n, d, std::move(values), std::move(ids));
  return s;
}

// Predicts the first feature column verbatim.
fbp::Regressor echo_first_column() {
  return [](const fbp::DesignMatrix&, std::span<const double>, const fbp::DesignMatrix& test, fbp::RoundResult&) {
    std::vector<double> out;
    for (std::size_t i = 0; i < test.rows(); ++i) out.push_back(test.row(i)[0]);
    return out;
  };
}

fbp::SplitProtocol random_protocol(std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5}) {
  fbp::SplitProtocol p;
  p.kind = fbp::SplitKind::kRandom;
  p.seeds = std::move(seeds);
  return p;
}

}  // namespace

TEST_CASE("memorising predictor on a train == test split is perfect") {
  auto s = linear_dataset(12, 2, 0.0, 1);
  // Column 0 holds the score exactly (as float); make the manifest agree.
  for (std::size_t i = 0; i < 12; ++i) s.manifest.rows[i].score = s.features.row(i)[0];
  fbp::SplitPlan plan;
  plan.round = 1;
  for (const auto& r : s.manifest.rows) plan.train.push_back(r.id);
  plan.test = plan.train;
  const auto report = fbp::run_experiment(s.manifest, {plan}, s.features, echo_first_column());
  REQUIRE(report.complete());
  CHECK(report.rounds[0].metrics.pc == 1.0);
  CHECK(report.rounds[0].metrics.mae == 0.0);
  CHECK(report.rounds[0].metrics.rmse == 0.0);
  for (const auto& smp : report.samples) CHECK(smp.epsilon == 0.0);
}

TEST_CASE("Bayesian ridge on a near-linear dataset") {
  const auto s = linear_dataset(60, 40, 0.05, 2);
  const auto splits = fbp::make_splits(s.manifest, random_protocol());
  const auto report = fbp::run_experiment(s.manifest, splits, s.features, fbp::bayesian_ridge_regressor(),
                                          {{"taps", "synthetic"}});
  REQUIRE(report.complete());
  REQUIRE(report.rounds.size() == 5);
  CHECK(report.average.pc > 0.99);

  double mae = 0, rmse = 0, pc = 0;
  for (const auto& r : report.rounds) {
    mae += r.metrics.mae;
    rmse += r.metrics.rmse;
    pc += r.metrics.pc;
    CHECK(r.metrics.rmse >= r.metrics.mae);
    CHECK(r.n_train == 48);
    CHECK(r.n_test == 12);
    CHECK(r.alpha > 0.0);
    CHECK(r.converged);
  }
  CHECK(report.average.mae == mae / 5.0);
  CHECK(report.average.rmse == rmse / 5.0);
  CHECK(report.average.pc == pc / 5.0);
  CHECK(report.samples.size() == 60);
  for (const auto& smp : report.samples) CHECK(smp.epsilon == std::abs(smp.truth - smp.prediction));

  // Per-round metrics recomputed from the retained samples.
  for (const auto& r : report.rounds) {
    std::vector<double> p, t;
    for (const auto& smp : report.samples) {
      if (smp.round == r.round) {
        p.push_back(smp.prediction);
        t.push_back(smp.truth);
      }
    }
    CHECK(std::abs(fbp::pearson(p, t) - r.metrics.pc) < 1e-12);
  }

  // Same seeds, same bytes.
  const auto again = fbp::run_experiment(s.manifest, fbp::make_splits(s.manifest, random_protocol()), s.features,
                                         fbp::bayesian_ridge_regressor(), {{"taps", "synthetic"}});
  CHECK(fbp::report_summary_csv(again) == fbp::report_summary_csv(report));
  CHECK(fbp::report_json(again) == fbp::report_json(report));
}

TEST_CASE("a missing feature row is an ingestion error naming the id") {
  auto s = linear_dataset(10, 3, 0.1, 3);
  s.manifest.rows.push_back({"orphan", "orphan.png", 2.0});
  fbp::SplitPlan plan{1, {"s0", "s1", "s2"}, {"orphan"}, std::nullopt};
  CHECK_THROWS_KIND_WITH(fbp::run_experiment(s.manifest, {plan}, s.features, echo_first_column()),
                         ErrorKind::kIngestion, "orphan");
}

TEST_CASE("a failing round is flagged and excluded from the average") {
  const auto s = linear_dataset(20, 3, 0.1, 4);
  const auto splits = fbp::make_splits(s.manifest, random_protocol({1, 2, 3}));
  int calls = 0;
  fbp::Regressor flaky = [&](const fbp::DesignMatrix&, std::span<const double>, const fbp::DesignMatrix& test,
                             fbp::RoundResult&) {
    ++calls;
    std::vector<double> out;
    for (std::size_t i = 0; i < test.rows(); ++i) out.push_back(calls == 2 ? 1.0 : test.row(i)[0]);
    return out;
  };
  const auto report = fbp::run_experiment(s.manifest, splits, s.features, flaky);
  CHECK_FALSE(report.complete());
  CHECK(report.rounds[1].ok == false);
  CHECK(report.rounds[1].error.find("constant") != std::string::npos);
  CHECK(report.average.pc == (report.rounds[0].metrics.pc + report.rounds[2].metrics.pc) / 2.0);
  const auto csv = fbp::report_summary_csv(report);
  CHECK(csv.find("2,2,16,4,failed,failed,failed") != std::string::npos);
  CHECK(fbp::parse_report_json(fbp::report_json(report)).rounds[1].error == report.rounds[1].error);
}

TEST_CASE("report JSON round-trip") {
  const auto s = linear_dataset(25, 5, 0.2, 5);
  const auto report = fbp::run_experiment(s.manifest, fbp::make_splits(s.manifest, random_protocol({7, 8})),
                                          s.features, fbp::bayesian_ridge_regressor(),
                                          {{"mode", "crop"}, {"taps", "conv4_1,conv5_1"}});
  const auto back = fbp::parse_report_json(fbp::report_json(report));
  CHECK(back.config == report.config);
  CHECK(back.rounds.size() == 2);
  CHECK(back.rounds[0].seed == 7u);
  CHECK(back.average.pc == report.average.pc);
  CHECK(back.samples.size() == report.samples.size());
  CHECK(back.samples[3].id == report.samples[3].id);
  CHECK(fbp::report_json(back) == fbp::report_json(report));
  CHECK(fbp::report_summary_csv(back) == fbp::report_summary_csv(report));
  CHECK_THROWS_KIND(fbp::parse_report_json("{\"config\": {}}"), ErrorKind::kFormat);
  CHECK_THROWS_KIND(fbp::parse_report_json("not json"), ErrorKind::kFormat);

  const auto csv = fbp::report_summary_csv(report);
  CHECK(csv.rfind("round,seed,n_train,n_test,mae,rmse,pc\n", 0) == 0);
  CHECK(csv.find("\navg,,,,") != std::string::npos);
  CHECK(fbp::report_predictions_csv(report).rfind("round,id,truth,prediction,epsilon\n", 0) == 0);
}

namespace {

fbp::ExperimentReport with_epsilons(std::vector<double> eps) {
  fbp::ExperimentReport r;
  for (std::size_t i = 0; i < eps.size(); ++i) r.samples.push_back({1, "e" + std::to_string(i), 0.0, eps[i], eps[i]});
  return r;
}

}  // namespace

TEST_CASE("epsilon partition") {
  const auto p = fbp::epsilon_analysis(with_epsilons({3.0, 1.0, 0.01}));
  REQUIRE(p.bad.size() == 1);
  REQUIRE(p.good.size() == 1);
  CHECK(p.bad[0].id == "e0");
  CHECK(p.good[0].id == "e2");
  CHECK(p.tau1 == 2.75);
  CHECK(p.tau2 == 0.02);

  CHECK(fbp::epsilon_analysis(with_epsilons({0, 0, 0})).good.size() == 3);
  // Boundaries are inclusive on both sides.
  const auto edge = fbp::epsilon_analysis(with_epsilons({2.75, 0.02}));
  CHECK(edge.bad.size() == 1);
  CHECK(edge.good.size() == 1);

  const double inf = std::numeric_limits<double>::infinity();
  const auto none = fbp::epsilon_analysis(with_epsilons({0.5, 1e9}), inf, 0.0);
  CHECK(none.bad.empty());
  CHECK(none.good.empty());
  CHECK(fbp::epsilon_analysis(with_epsilons({0.0, 0.5}), inf, 0.0).good.size() == 1);

  CHECK_THROWS_KIND(fbp::epsilon_analysis(with_epsilons({}), 0.5, 0.5), ErrorKind::kConfig);
  CHECK_THROWS_KIND(fbp::epsilon_analysis(with_epsilons({}), 1.0, -0.1), ErrorKind::kConfig);

  const auto csv = fbp::epsilon_csv(p);
  CHECK(csv.rfind("# tau1=2.75 tau2=0.02\nclass,round,id,truth,prediction,epsilon\n", 0) == 0);
  CHECK(csv.find("bad,1,e0,") != std::string::npos);
  CHECK(csv.find("good,1,e2,") != std::string::npos);
}

TEST_CASE("ablation: one row per variant, best flagged, single variant equals run_experiment") {
  const auto s = linear_dataset(30, 6, 0.1, 6);
  const auto noisy = linear_dataset(30, 6, 3.0, 6);
  const auto splits = fbp::make_splits(s.manifest, random_protocol({1, 2}));
  const std::vector<std::string> variants = {"clean", "noisy"};
  const auto table = fbp::ablation_suite(
      s.manifest, splits, variants,
      [&](const std::string& v) { return v == "clean" ? s.features : noisy.features; }, fbp::bayesian_ridge_regressor());
  REQUIRE(table.rows.size() == 2);
  CHECK(table.best() == 0);
  const auto csv = fbp::ablation_csv(table);
  CHECK(csv.rfind("variant,mae,rmse,pc,best\nclean,", 0) == 0);
  CHECK(csv.find(",1\nnoisy,") != std::string::npos);
  CHECK(fbp::ablation_series_csv(table).rfind("variant,pc\nclean,", 0) == 0);

  const std::vector<std::string> one = {"clean"};
  const auto single = fbp::ablation_suite(s.manifest, splits, one, [&](const std::string&) { return s.features; },
                                          fbp::bayesian_ridge_regressor());
  const auto direct = fbp::run_experiment(s.manifest, splits, s.features, fbp::bayesian_ridge_regressor());
  CHECK(fbp::report_summary_csv(single.rows[0].report) == fbp::report_summary_csv(direct));

  CHECK_THROWS_KIND(fbp::ablation_suite(s.manifest, splits, {}, [&](const std::string&) { return s.features; },
                                        fbp::bayesian_ridge_regressor()),
                    ErrorKind::kConfig);
  CHECK(fbp::AblationTable{}.best() == -1);
}
