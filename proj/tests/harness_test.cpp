//
// Copyright 2026 The ldpdrift Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "ldpdrift/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "ldpdrift/stats.hpp"
#include "ldpdrift/toml_lite.hpp"

namespace ldpdrift::harness {
namespace {

TEST(TomlLiteTest, ParsesTablesArraysAndScalars) {
  const auto doc = toml_lite::parse(R"(
# comment
title = "x # not a comment"
seed = 42
ratio = 2.5e-1
flag = true
neg = -3
big = inf
list = [1, 2,
        3]
names = ["a", "b\"c"]

[model]
name = "sine"   # trailing comment
"quoted key" = 1

[a.b]
c = 1.0

[[ladder]]
N = 1

[[ladder]]
N = 2
)");
  EXPECT_EQ(doc["title"], "x # not a comment");
  EXPECT_EQ(doc["seed"], 42);
  EXPECT_TRUE(doc["seed"].is_number_integer());
  EXPECT_DOUBLE_EQ(doc["ratio"].get<double>(), 0.25);
  EXPECT_EQ(doc["flag"], true);
  EXPECT_EQ(doc["neg"], -3);
  EXPECT_TRUE(std::isinf(doc["big"].get<double>()));
  EXPECT_EQ(doc["list"], json::array({1, 2, 3}));
  EXPECT_EQ(doc["names"][1], "b\"c");
  EXPECT_EQ(doc["model"]["name"], "sine");
  EXPECT_EQ(doc["model"]["quoted key"], 1);
  EXPECT_EQ(doc["a"]["b"]["c"], 1.0);
  ASSERT_EQ(doc["ladder"].size(), 2u);
  EXPECT_EQ(doc["ladder"][1]["N"], 2);
}

TEST(TomlLiteTest, RejectsMalformedInput) {
  EXPECT_THROW(toml_lite::parse("x = "), config_error);
  EXPECT_THROW(toml_lite::parse("x = {a = 1}"), config_error);
  EXPECT_THROW(toml_lite::parse("[table"), config_error);
  EXPECT_THROW(toml_lite::parse("x = 1\nx = 2"), config_error);
  EXPECT_THROW(toml_lite::parse("x = \"open"), config_error);
  EXPECT_THROW(toml_lite::parse("x = 'literal'"), config_error);
  EXPECT_THROW(toml_lite::parse("x = [1, 2"), config_error);
}

json minimal() {
  return json::parse(R"({"seed": 3, "replications": 4,
    "model": {"name": "sine", "theta_star": 0.5},
    "privacy": {"schedule": "constant", "alpha": 1.0},
    "estimator": {"a": 2, "grid": "random", "noise_sampling": "aggregate_law"},
    "sigma0": {"paths": 200},
    "clt": {"regime": "significant", "reference_draws": 2000},
    "ladder": [{"N": 30, "n": 20, "L": 5}]})");
}

TEST(ParseConfigTest, DefaultsAndLadder) {
  const auto cfg = parse_config(minimal());
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.a, 2);
  EXPECT_TRUE(cfg.random_grid);
  EXPECT_EQ(cfg.sampling, NoiseSampling::kAggregateLaw);
  EXPECT_EQ(cfg.clt.regime, Regime::kSignificant);
  EXPECT_DOUBLE_EQ(cfg.clt.var_ratio_min, 0.7);
  EXPECT_DOUBLE_EQ(cfg.clt.var_ratio_max, 1.4);
  ASSERT_EQ(cfg.ladder.size(), 1u);
  EXPECT_EQ(cfg.ladder[0].grid_size, 5);
  auto doc = minimal();
  doc["ladder"] = json::parse(R"([{"n": 400, "L_exponent": 0.15, "N": 10}, {"n": 20, "N_exponent": 2.5, "L": 4}])");
  doc["estimator"]["min_intervals"] = 1;
  const auto ladder = parse_config(doc).ladder;
  EXPECT_EQ(ladder[0].grid_size, 3);
  EXPECT_EQ(ladder[1].paths, 1789);
}

TEST(ParseConfigTest, RejectsInvalidConfigurations) {
  auto bad = minimal();
  bad["estimator"]["typo"] = 1;
  EXPECT_THROW(parse_config(bad), config_error);
  bad = minimal();
  bad["ladder"][0]["L"] = 3;  // Lambda = 2 < 3
  EXPECT_THROW(parse_config(bad), config_error);
  bad = minimal();
  bad["replications"] = 0;
  EXPECT_THROW(parse_config(bad), config_error);
  bad = minimal();
  bad["model"]["theta_star"] = 1.0;
  EXPECT_THROW(parse_config(bad), config_error);
  bad = minimal();
  bad["model"]["name"] = "unknown";
  EXPECT_THROW(parse_config(bad), config_error);
  bad = minimal();
  bad["estimator"]["clip"] = "soft";
  EXPECT_THROW(parse_config(bad), config_error);
  bad = minimal();
  bad["estimator"]["a"] = "two";
  EXPECT_THROW(parse_config(bad), config_error);
}

TEST(ParseConfigTest, AlphaSchedules) {
  AlphaSchedule s;
  s.kind = "cycle";
  s.alphas = {0.5, 1.0, 2.0};
  const auto b = s.budget_for(5);
  EXPECT_EQ(b.alphas(), (std::vector<double>{0.5, 1.0, 2.0, 0.5, 1.0}));
  s.kind = "vector";
  EXPECT_THROW(s.budget_for(5), config_error);
  EXPECT_NO_THROW(s.budget_for(3));
  s.kind = "effective";
  s.alpha_eff = 2.0;
  EXPECT_NEAR(s.budget_for(8).alpha_eff(), 2.0, 1e-15);
  s.kind = "constant";
  s.alpha = -1.0;
  EXPECT_THROW(s.budget_for(4), config_error);
  s.kind = "other";
  EXPECT_THROW(s.budget_for(4), config_error);
}

TEST(ConfigDigestTest, IgnoresThreadsOnly) {
  auto a = minimal(), b = minimal();
  b["threads"] = 8;
  EXPECT_EQ(config_digest(a), config_digest(b));
  b["seed"] = 4;
  EXPECT_NE(config_digest(a), config_digest(b));
  EXPECT_EQ(config_digest(a).size(), 16u);
}

TEST(StatsTest, Moments) {
  const std::vector<double> x{1, 2, 3, 4, 10};
  EXPECT_DOUBLE_EQ(stats::mean(x), 4.0);
  EXPECT_DOUBLE_EQ(stats::variance(x), 12.5);
  EXPECT_DOUBLE_EQ(stats::median(x), 3.0);
  EXPECT_DOUBLE_EQ(stats::quantile(x, 0.25), 2.0);
  EXPECT_DOUBLE_EQ(stats::quantile({1, 2}, 0.5), 1.5);
  EXPECT_DOUBLE_EQ(stats::skewness(std::vector<double>{1, 2, 3}), 0.0);
  EXPECT_GT(stats::skewness(x), 0.0);
  EXPECT_NEAR(stats::normal_cdf(1.959963984540054), 0.975, 1e-12);
}

TEST(StatsTest, KolmogorovSmirnov) {
  // One point at 0.5 against U(0, 1): D = 0.5.
  EXPECT_DOUBLE_EQ(stats::ks_statistic({0.5}, [](double u) { return u; }), 0.5);
  EXPECT_DOUBLE_EQ(stats::ks_statistic({0.25, 0.75}, [](double u) { return u; }), 0.25);
  EXPECT_EQ(stats::ks_two_sample({1, 2, 3}, {1, 2, 3}), 0.0);
  EXPECT_DOUBLE_EQ(stats::ks_two_sample({1, 2}, {3, 4}), 1.0);
  EXPECT_DOUBLE_EQ(stats::ks_two_sample({1, 3}, {2, 4}), 0.5);
}

TEST(StatsTest, LogLogSlope) {
  const std::vector<double> n{100, 400, 1600}, y{1.0, 0.5, 0.25};
  EXPECT_NEAR(stats::loglog_slope(n, y), -0.5, 1e-14);
}

TEST(MonotonicityTest, CountsOrderedPairs) {
  EXPECT_EQ(monotonicity_violations({3, 2, 1}), 0);
  EXPECT_EQ(monotonicity_violations({3, 1, 2}), 1);
  EXPECT_EQ(monotonicity_violations({1, 2, 3}), 3);
}

TEST(RunCltTest, DeterministicAcrossRunsAndThreads) {
  auto doc = minimal();
  const auto one = run_clt(parse_config(doc), Regime::kSignificant);
  doc["threads"] = 3;
  const auto three = run_clt(parse_config(doc), Regime::kSignificant);
  ASSERT_EQ(one.tables.size(), 1u);
  EXPECT_EQ(one.tables[0].to_csv(), three.tables[0].to_csv());
  EXPECT_EQ(one.summary.dump(), three.summary.dump());
  EXPECT_EQ(one.tables[0].rows.size(), 4u);
  for (const auto& row : one.tables[0].rows) EXPECT_TRUE(std::isfinite(std::stod(row[4])));
}

TEST(RunCltTest, RequiresCoveredThetaStar) {
  auto doc = minimal();
  doc["estimator"]["grid"] = "fixed";
  doc["model"]["theta_star"] = 0.9;  // beyond theta_{L-1} = 0.8
  EXPECT_THROW(run_clt(parse_config(doc), Regime::kNegligible), config_error);
}

TEST(RunConsistencyTest, TablesHaveOneRowPerArmAndRung) {
  auto doc = minimal();
  doc["ladder"] = json::parse(R"([{"N": 20, "n": 20, "L": 4}, {"N": 40, "n": 20, "L": 4}])");
  doc["consistency"] = json::parse(R"({"arms": ["private", "noise_free", "low_alpha"]})");
  const auto report = run_consistency(parse_config(doc));
  EXPECT_EQ(report.tables[0].rows.size(), 2u * 3u * 4u);
  EXPECT_EQ(report.tables[1].rows.size(), 6u);
  EXPECT_GE(report.gates.size(), 3u);
}

TEST(RunPolynomialDriftTest, NoSplineErrorGatePasses) {
  auto doc = minimal();
  doc["ladder"] = json::parse(R"([{"N": 20, "n": 20, "L": 4}, {"N": 40, "n": 40, "L": 4}])");
  const auto report = run_polynomial_drift(parse_config(doc));
  bool found = false;
  for (const auto& g : report.gates)
    if (g.name == "interpolant equals the exact contrast without noise") {
      found = true;
      EXPECT_TRUE(g.pass) << g.detail;
    }
  EXPECT_TRUE(found);
  doc["model"]["name"] = "phase";
  EXPECT_THROW(run_polynomial_drift(parse_config(doc)), config_error);
}

TEST(RunEffectivePrivacyTest, AccountingGate) {
  auto doc = minimal();
  doc["privacy"] = json::parse(R"({"schedule": "effective", "alpha_eff": 1.0})");
  doc["ladder"] = json::parse(R"([{"n": 8, "N_exponent": 2.0, "L": 4}, {"n": 12, "N_exponent": 2.0, "L": 4}])");
  const auto report = run_effective_privacy(parse_config(doc));
  EXPECT_TRUE(report.gates[0].pass);
  EXPECT_EQ(report.tables[1].rows.size(), 4u);
}

TEST(RunVerifyLdpTest, SmoothClipPasses) {
  auto doc = minimal();
  doc["ldp"] = json{{"pairs", 2000}};
  doc["privacy"] = json::parse(R"({"schedule": "cycle", "alphas": [0.5, 2.0]})");
  const auto report = run_verify_ldp(parse_config(doc));
  EXPECT_TRUE(report.hard_gates_pass());
  EXPECT_EQ(report.tables[0].rows.size(), 20u);
}

TEST(RunSplineCheckTest, ReportsEveryCheck) {
  const auto report = run_spline_check(parse_config(json{{"spline", {{"a", 2}, {"lambdas", {4, 8}}, {"trials", 10}}}}));
  ASSERT_EQ(report.gates.size(), 5u);
  EXPECT_TRUE(report.gates[0].pass);  // polynomial reproduction
  EXPECT_TRUE(report.gates[2].pass);  // order lower bound
  EXPECT_TRUE(report.gates[3].pass);  // closed-form sum
  EXPECT_TRUE(report.gates[4].pass);  // partition of unity
}

}  // namespace
}  // namespace ldpdrift::harness
