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

#include "ldpdrift/estimator.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ldpdrift/contrast.hpp"
#include "ldpdrift/diffusion.hpp"
#include "ldpdrift/rng.hpp"

namespace ldpdrift {
namespace {

TEST(RegimeTest, Examples) {
  const auto r = compute_regime(100, 1000, 10, 1.0);
  EXPECT_NEAR(r.r, 100.0 * std::log(100.0), 1e-12);
  EXPECT_NEAR(r.r, 460.517, 1e-3);
  EXPECT_EQ(r.regime, Regime::kSignificant);
  EXPECT_EQ(compute_regime(100, 1000, 10, 1e12).regime, Regime::kNegligible);
  // alpha_bar2 = (L^2 log n / c_p)^2 gives r = 1 / c_p along any sequence.
  for (int n : {50, 200, 800}) {
    const int L = 4;
    const double cp = 1.0;
    const double abar2 = std::pow(L * L * std::log(n) / cp, 2);
    const auto info = compute_regime(n, 500, L, abar2);
    EXPECT_NEAR(info.r, 1.0 / cp, 1e-12);
    EXPECT_EQ(info.regime, Regime::kThreshold);
  }
  EXPECT_EQ(parse_regime("threshold"), Regime::kThreshold);
  EXPECT_EQ(to_string(Regime::kNegligible), "negligible");
  EXPECT_THROW(parse_regime("tiny"), config_error);
}

TEST(VnTest, Examples) {
  const ThetaGrid grid(4, 0.0);
  EXPECT_EQ(v_n_at(0.5, grid, 2), 0.0);
  EXPECT_DOUBLE_EQ(v_n_at(0.5 / 4 + 0.25, grid, 1), 2.25);
  EXPECT_THROW(v_n_at(1.2, grid, 1), config_error);
}

TEST(PredictedSdTest, Arithmetic) {
  EXPECT_DOUBLE_EQ(predicted_sd_negligible(200, 0.5), std::sqrt(2.0 / 100.0));
  const double scale = significance_scale(2, 6, 200, 1.0, 8000, 0.25);
  EXPECT_NEAR(scale, 4.0 * 3.0 * 36.0 * std::log(200.0) / std::sqrt(8000.0 * 0.25), 1e-12);
  EXPECT_NEAR(predicted_sd_significant(2, 6, 200, 1.0, 0.7, 0.3, 8000, 0.25), scale * std::sqrt(0.7) / 0.3, 1e-12);
}

SplineInterpolant interpolate(const ThetaGrid& grid, int a, const std::function<double(double, int)>& f) {
  std::vector<double> data;
  for (int l = 0; l < grid.size(); ++l)
    for (int v = 0; v <= a; ++v) data.push_back(f(grid.point(l), v));
  return hermite_interpolate(data, knots_for(grid, a));
}

TEST(MaximizeContrastTest, ConcaveQuadratic) {
  for (int a : {2, 3}) {
    const auto s = interpolate(ThetaGrid(6, 0.3), a, [](double x, int v) {
      return v == 0 ? -(x - 0.5) * (x - 0.5) : v == 1 ? -2.0 * (x - 0.5) : v == 2 ? -2.0 : 0.0;
    });
    EXPECT_NEAR(maximize_contrast(s).theta, 0.5, 1e-8);
  }
}

TEST(MaximizeContrastTest, MonotoneDataPicksRightBoundary) {
  const ThetaGrid grid(5, 0.0);
  const auto s = interpolate(grid, 2, [](double x, int v) { return v == 0 ? x : v == 1 ? 1.0 : 0.0; });
  EXPECT_DOUBLE_EQ(maximize_contrast(s).theta, grid.upper());
}

TEST(MaximizeContrastTest, MatchesDenseBruteForce) {
  CounterStream g(1, stream_id(StreamTag::kTestData, {300}));
  for (int trial = 0; trial < 40; ++trial) {
    const int a = 1 + static_cast<int>(g.uniform() * 4);
    const ThetaGrid grid(3 + static_cast<int>(g.uniform() * 6), g.uniform());
    std::vector<double> data(static_cast<std::size_t>(grid.size() * (a + 1)));
    for (double& v : data) v = 2.0 * g.uniform() - 1.0;
    const auto s = hermite_interpolate(data, knots_for(grid, a));
    const auto best = maximize_contrast(s);
    double arg = 0.0, top = -1e300;
    for (int q = 0; q <= 100000; ++q) {
      const double x = std::min(grid.upper(), grid.lower() + (grid.upper() - grid.lower()) * q / 100000.0);
      const double v = s.evaluate(x);
      if (v > top) {
        top = v;
        arg = x;
      }
    }
    EXPECT_GE(best.value, top - 1e-12);
    EXPECT_LE(std::abs(best.theta - arg), grid.spacing()) << "trial " << trial;
  }
}

TEST(MaximizeContrastTest, AllNaNThrows) {
  const ThetaGrid grid(3, 0.0);
  const auto s = hermite_interpolate(std::vector<double>(9, std::nan("")), knots_for(grid, 2));
  EXPECT_THROW(maximize_contrast(s), numerical_error);
  EXPECT_THROW(maximize_contrast(s, 0), config_error);
}

struct Small {
  DiffusionModel model = make_model({"sine", 1.0, 0.0, {}});
  PathPanel panel = simulate_panel(model, 0.5, 3, TimeGrid(1.0, 4), InitialLaw::point(0.0), 2);
  ThetaGrid grid{5, 0.1};
  PrivacyBudget budget = PrivacyBudget::constant(4, 1.0);
};

// Interpolating the sums equals summing per-report interpolants.
TEST(PublicContrastTest, AggregateThenInterpolateEqualsInterpolateThenSum) {
  Small f;
  const auto pub = privatize(f.panel, f.model, f.grid, f.budget, 2, 3);
  const auto total = build_public_contrast(pub);
  const auto knots = knots_for(f.grid, 2);
  for (int q = 0; q <= 50; ++q) {
    const double x = f.grid.lower() + (f.grid.upper() - f.grid.lower()) * q / 50.0;
    double sum = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 4; ++j) {
        const auto r = pub.report(i, j);
        sum += hermite_interpolate(std::vector<double>(r.begin(), r.end()), knots).evaluate(x);
      }
    EXPECT_NEAR(total.evaluate(x), sum, 1e-9 * std::max(1.0, std::abs(sum)));
  }
}

TEST(PublicContrastTest, AggregateInterpolantEqualsInterpolantOfSummedReports) {
  const auto model = make_model({"sine", 1.0, 0.0, {}});
  const auto panel = simulate_panel(model, 0.5, 1, TimeGrid(1.0, 2), InitialLaw::point(0.2), 4);
  const ThetaGrid grid(4, 0.0);
  const auto pub = privatize(panel, model, grid, PrivacyBudget::constant(2, 2.0), 2, 5);
  const auto r0 = pub.report(0, 0), r1 = pub.report(0, 1);
  std::vector<double> sum(r0.size());
  for (std::size_t c = 0; c < sum.size(); ++c) sum[c] = r0[c] + r1[c];
  const auto direct = hermite_interpolate(sum, knots_for(grid, 2));
  const auto agg = build_public_contrast(pub);
  for (double x : {0.0, 0.1, 0.4, 0.75}) EXPECT_DOUBLE_EQ(agg.evaluate(x), direct.evaluate(x));
}

// Drift polynomial of degree <= a in theta, no noise, no clipping.
TEST(PublicContrastTest, PolynomialDriftInterpolantIsExact) {
  const auto model = make_model({"poly_sine", 1.0, 0.0, {0.2, -1.0, 0.7}});
  const auto panel = simulate_panel(model, 0.5, 20, TimeGrid(1.0, 50), InitialLaw::point(0.0), 6);
  const ThetaGrid grid(5, 0.0);
  PrivatizeOptions o;
  o.noise = false;
  o.clip = ClipKind::kNone;
  // b^2 has degree 4 = 2 deg b; Hermite degree 2a+1 >= 4 needs a >= 2.
  for (int a : {2, 3}) {
    const auto s = build_public_contrast(privatize_aggregate(panel, model, grid, PrivacyBudget::constant(50, 1.0), a, 0, o));
    for (int q = 0; q <= 40; ++q) {
      const double x = grid.upper() * q / 40.0;
      const double exact = nonprivate_contrast(panel, model, x);
      EXPECT_NEAR(s.evaluate(x), exact, 1e-10 * std::max(1.0, std::abs(exact)));
    }
  }
}

TEST(EstimateTest, NoiseFreeLargePanelWithinTwoPredictedSd) {
  const auto model = make_model({"sine", 1.0, 0.0, {}});
  const TimeGrid tg(1.0, 100);
  const auto panel = simulate_panel(model, 0.5, 4000, tg, InitialLaw::point(0.0), 7);
  EstimationOptions o;
  o.a = 2;
  o.grid_size = 6;
  o.privatize.noise = false;
  o.privatize.clip = ClipKind::kNone;
  o.sigma0 = estimate_sigma0(model, 0.5, tg, 2000, 8).value;
  const auto res = estimate(panel, model, PrivacyBudget::constant(100, 1.0), o, 9, 0.5);
  ASSERT_TRUE(res.predicted_sd_negligible.has_value());
  EXPECT_NEAR(res.theta_hat, 0.5, 2.0 * *res.predicted_sd_negligible);
  EXPECT_EQ(*res.v_n_star, 0.0);
}

TEST(EstimateTest, RandomGridIsSeededAndReported) {
  Small f;
  EstimationOptions o;
  o.a = 2;
  o.grid_size = 4;
  o.random_shift = true;
  o.sigma0 = 0.3;
  const auto a = estimate(f.panel, f.model, f.budget, o, 10, 0.5);
  const auto b = estimate(f.panel, f.model, f.budget, o, 10, 0.5);
  const auto c = estimate(f.panel, f.model, f.budget, o, 11, 0.5);
  EXPECT_EQ(a.theta_hat, b.theta_hat);
  EXPECT_EQ(a.grid.shift(), b.grid.shift());
  EXPECT_NE(a.grid.shift(), c.grid.shift());
  ASSERT_TRUE(a.v_n_star.has_value());
  EXPECT_DOUBLE_EQ(*a.v_n_star, v_n_at(0.5, a.grid, 2));
  EXPECT_TRUE(a.predicted_sd_significant.has_value());
  EXPECT_GE(a.theta_hat, a.grid.lower());
  EXPECT_LE(a.theta_hat, a.grid.upper());
}

}  // namespace
}  // namespace ldpdrift
