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

#include "ldpdrift/spline.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "ldpdrift/rng.hpp"

namespace ldpdrift {
namespace {

// Hand-rolled generators.
struct Gen {
  CounterStream s;
  explicit Gen(std::uint64_t id) : s(77, stream_id(StreamTag::kTestData, {id})) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * s.uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(s.uniform() * (hi - lo + 1)); }
};

// Value and derivatives of a polynomial, written out independently.
double poly_derivative(const std::vector<double>& c, double x, int k) {
  double acc = 0.0;
  for (std::size_t m = static_cast<std::size_t>(k); m < c.size(); ++m) {
    double falling = 1.0;
    for (int t = 0; t < k; ++t) falling *= static_cast<double>(m) - t;
    acc += c[m] * falling * std::pow(x, static_cast<double>(m) - k);
  }
  return acc;
}

constexpr double kEps = std::numeric_limits<double>::epsilon();

SplineInterpolant interpolate_poly(const std::vector<double>& c, const KnotVector& kv) {
  std::vector<double> data;
  for (int l = 0; l <= kv.lambda(); ++l)
    for (int v = 0; v <= kv.a(); ++v) data.push_back(poly_derivative(c, kv.node(l), v));
  return hermite_interpolate(data, kv);
}

TEST(BsplineEvalTest, OrderZeroIsIndicator) {
  const std::vector<double> w{0.5, 1.5};
  EXPECT_EQ(bspline_eval(w, 0.5, 0), 1.0);
  EXPECT_EQ(bspline_eval(w, 1.0, 0), 1.0);
  EXPECT_EQ(bspline_eval(w, 1.5, 0), 0.0);
  EXPECT_EQ(bspline_eval(w, 0.4, 0), 0.0);
  EXPECT_EQ(bspline_eval(w, 1.5, 0, EndpointRule::kLeftLimitAtEnd), 1.0);
}

TEST(BsplineEvalTest, BernsteinShapeOnDoubledKnots) {
  // Knots {0 (a+1 times), 1 (a+1 times)}: C(2a, a) x^a (1 - x)^a.
  EXPECT_DOUBLE_EQ(bspline_eval(std::vector<double>{0, 0, 1, 1}, 0.5, 0), 0.5);
  const std::vector<double> w{0, 0, 0, 1, 1, 1};
  for (double x : {0.1, 0.3, 0.7}) EXPECT_NEAR(bspline_eval(w, x, 0), 6.0 * x * x * (1 - x) * (1 - x), 1e-15);
}

TEST(BsplineEvalTest, RejectsBadInput) {
  EXPECT_THROW(bspline_eval(std::vector<double>{1.0, 0.0}, 0.5, 0), config_error);
  EXPECT_THROW(bspline_eval(std::vector<double>{0.0, 1.0, 2.0}, 0.5, 2), config_error);
  EXPECT_THROW(bspline_eval(std::vector<double>{0.0}, 0.5, 0), config_error);
}

TEST(KnotVectorTest, LayoutAndValidation) {
  const KnotVector kv(0.0, 0.25, 4, 2);
  EXPECT_EQ(kv.degree(), 5);
  EXPECT_EQ(kv.basis_count(), 15);
  EXPECT_EQ(kv.expanded().size(), static_cast<std::size_t>(3 * 7));
  EXPECT_EQ(kv.expanded().front(), 0.0);
  EXPECT_EQ(kv.expanded().back(), 1.0);
  EXPECT_EQ(kv.interval_of(1.0), 3);
  EXPECT_EQ(kv.interval_of(0.25), 1);
  EXPECT_THROW(KnotVector(0.0, 0.0, 4, 2), config_error);
  EXPECT_THROW(KnotVector(0.0, 0.1, 0, 2), config_error);
  EXPECT_THROW(KnotVector(0.0, 0.1, 4, 0), config_error);
  EXPECT_THROW(KnotVector::from_nodes(std::vector<double>{0.0, 0.1, 0.3}, 2), config_error);
  EXPECT_THROW(KnotVector::from_nodes(std::vector<double>{0.0, 0.0}, 2), config_error);
}

// Partition of unity: brute-force sum of every basis function via the recursion.
TEST(BasisPropertyTest, PartitionOfUnity) {
  Gen g(1);
  for (int trial = 0; trial < 20; ++trial) {
    const int a = g.integer(1, 4), lambda = g.integer(1, 9);
    const KnotVector kv(g.uniform(-1, 1), g.uniform(0.1, 2.0), lambda, a);
    for (int q = 0; q < 100; ++q) {
      const double x = g.uniform(kv.front(), kv.back());
      double sum = 0.0;
      for (int h = 0; h < kv.basis_count(); ++h) sum += bspline_eval(kv.window(h), x, 0);
      ASSERT_NEAR(sum, 1.0, 1e-12) << "a=" << a << " lambda=" << lambda << " x=" << x;
    }
  }
}

TEST(HermiteInterpolateTest, ReproducesPolynomials) {
  Gen g(2);
  for (int trial = 0; trial < 60; ++trial) {
    const int a = g.integer(1, 5), lambda = g.integer(1, 10);
    const KnotVector kv(g.uniform(-1, 1), g.uniform(0.05, 0.5), lambda, a);
    std::vector<double> c(static_cast<std::size_t>(g.integer(0, a)) + 1);
    for (double& v : c) v = g.uniform(-1, 1);
    const auto s = interpolate_poly(c, kv);
    double scale = 1.0;
    for (int q = 0; q <= 200; ++q)
      scale = std::max(scale, std::abs(poly_derivative(c, kv.front() + kv.spacing() * kv.lambda() * q / 200.0, 0)));
    for (int q = 0; q <= 200; ++q) {
      const double x = std::min(kv.back(), kv.front() + (kv.back() - kv.front()) * q / 200.0);
      for (int k = 0; k <= a; ++k) {
        // Roundoff in the k-th derivative of a degree p spline grows like
        // max|poly| p! / (p - k)! spacing^-k.
        double falling = 1.0;
        for (int r = 0; r < k; ++r) falling *= kv.degree() - r;
        const double tol = scale * (1e-10 + 100.0 * kEps * falling * std::pow(kv.spacing(), -k));
        ASSERT_NEAR(s.evaluate(x, k), poly_derivative(c, x, k), tol) << "k=" << k;
      }
    }
  }
}

TEST(HermiteInterpolateTest, MatchesDataAtNodes) {
  Gen g(3);
  for (int trial = 0; trial < 30; ++trial) {
    const int a = g.integer(1, 4), lambda = g.integer(1, 8);
    const KnotVector kv(0.0, g.uniform(0.1, 1.0), lambda, a);
    std::vector<double> data(static_cast<std::size_t>((lambda + 1) * (a + 1)));
    for (double& v : data) v = g.uniform(-1, 1);
    const auto s = hermite_interpolate(data, kv);
    std::vector<double> d(static_cast<std::size_t>(a) + 1);
    for (int l = 0; l <= lambda; ++l) {
      s.derivatives(kv.node(l), a, d);
      const double scale = std::pow(1.0 / kv.spacing(), a);
      for (int v = 0; v <= a; ++v)
        ASSERT_NEAR(d[static_cast<std::size_t>(v)], data[static_cast<std::size_t>(l * (a + 1) + v)], 1e-10 * scale);
    }
  }
}

TEST(HermiteInterpolateTest, LinearityAndZeroData) {
  Gen g(4);
  const KnotVector kv(0.0, 0.2, 5, 3);
  const std::size_t size = 6 * 4;
  std::vector<double> u(size), v(size), w(size), zero(size, 0.0);
  for (std::size_t i = 0; i < size; ++i) {
    u[i] = g.uniform(-1, 1);
    v[i] = g.uniform(-1, 1);
    w[i] = 2.0 * u[i] - 3.0 * v[i];
  }
  const auto su = hermite_interpolate(u, kv), sv = hermite_interpolate(v, kv), sw = hermite_interpolate(w, kv);
  const auto sz = hermite_interpolate(zero, kv);
  for (int q = 0; q <= 100; ++q) {
    const double x = q / 100.0;
    EXPECT_NEAR(sw.evaluate(x), 2.0 * su.evaluate(x) - 3.0 * sv.evaluate(x), 1e-12);
    EXPECT_EQ(sz.evaluate(x), 0.0);
  }
}

// Data at node l only affects [xi_{l-1}, xi_{l+1}].
TEST(HermiteInterpolateTest, LocalSupport) {
  const int a = 2, lambda = 6;
  const KnotVector kv(0.0, 1.0, lambda, a);
  std::vector<double> data(static_cast<std::size_t>((lambda + 1) * (a + 1)), 0.0);
  for (int v = 0; v <= a; ++v) data[static_cast<std::size_t>(3 * (a + 1) + v)] = 1.0;
  const auto s = hermite_interpolate(data, kv);
  for (int q = 0; q <= 600; ++q) {
    const double x = q / 100.0;
    if (x <= 2.0 || x >= 4.0) {
      EXPECT_EQ(s.evaluate(x), 0.0) << x;
    }
  }
  EXPECT_NE(s.evaluate(2.5), 0.0);
}

TEST(HermiteInterpolateTest, OutsideDomainIsZeroAndShapeIsChecked) {
  const KnotVector kv(0.0, 0.5, 2, 1);
  const auto s = hermite_interpolate(std::vector<double>(6, 1.0), kv);
  EXPECT_EQ(s.evaluate(-0.1), 0.0);
  EXPECT_EQ(s.evaluate(1.1), 0.0);
  EXPECT_NEAR(s.evaluate(1.0), 1.0, 1e-14);
  EXPECT_THROW(hermite_interpolate(std::vector<double>(5, 1.0), kv), config_error);
  EXPECT_THROW(s.evaluate(0.5, 4), config_error);
}

double sin2pi_error(int a, int lambda, int k) {
  const KnotVector kv(0.0, 1.0 / lambda, lambda, a);
  const double w = 2.0 * std::numbers::pi;
  const auto deriv = [&](double x, int m) {
    const double ph = w * x + m * std::numbers::pi / 2.0;
    return std::pow(w, m) * std::sin(ph);
  };
  std::vector<double> data;
  for (int l = 0; l <= lambda; ++l)
    for (int v = 0; v <= a; ++v) data.push_back(deriv(kv.node(l), v));
  const auto s = hermite_interpolate(data, kv);
  double worst = 0.0;
  for (int q = 0; q <= 3000; ++q) {
    const double x = q / 3000.0;
    worst = std::max(worst, std::abs(s.evaluate(x, k) - deriv(x, k)));
  }
  return worst;
}

// Two-point Hermite interpolation of degree 2a+1 converges at order
// 2a+2-k, which is at least the a+1-k of the general approximation bound.
TEST(HermiteInterpolateTest, ConvergenceOrderOnSine) {
  const int a = 2;
  for (int k = 0; k <= 2; ++k) {
    const double order = std::log2(sin2pi_error(a, 8, k) / sin2pi_error(a, 16, k));
    EXPECT_GE(order, a + 1 - k - 0.3) << "k=" << k;
    EXPECT_NEAR(order, 2 * a + 2 - k, 0.3) << "k=" << k;
  }
}

TEST(InterpolantSupTest, ConstantZeroAndGrowth) {
  const int a = 2;
  const KnotVector kv(0.0, 0.25, 4, a);
  std::vector<double> c(static_cast<std::size_t>(5 * (a + 1)), 0.0);
  EXPECT_EQ(interpolant_derivative_sup(hermite_interpolate(c, kv), 0), 0.0);
  for (int l = 0; l <= 4; ++l) c[static_cast<std::size_t>(l * (a + 1))] = -2.5;
  EXPECT_NEAR(interpolant_derivative_sup(hermite_interpolate(c, kv), 0), 2.5, 1e-14);
  EXPECT_THROW(interpolant_derivative_sup(hermite_interpolate(c, kv), a + 1), config_error);

  // Unit random values (derivatives zero): halving the spacing at most
  // doubles the first-derivative sup, up to 20 %.
  Gen g(5);
  double ratio_sum = 0.0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> d8(9 * 3, 0.0), d16(17 * 3, 0.0);
    for (int l = 0; l <= 8; ++l) d8[static_cast<std::size_t>(l * 3)] = g.uniform(-1, 1);
    for (int l = 0; l <= 16; ++l) d16[static_cast<std::size_t>(l * 3)] = g.uniform(-1, 1);
    const double s8 = interpolant_derivative_sup(hermite_interpolate(d8, KnotVector(0.0, 1.0 / 8, 8, 2)), 1);
    const double s16 = interpolant_derivative_sup(hermite_interpolate(d16, KnotVector(0.0, 1.0 / 16, 16, 2)), 1);
    ratio_sum += s16 / s8;
  }
  EXPECT_LE(ratio_sum / trials, 2.0 * 1.2);
}

TEST(GsumTest, ExamplesAndRecursion) {
  EXPECT_DOUBLE_EQ(gsum_closed_form(0.5, 1), 1.5);
  EXPECT_EQ(gsum_closed_form(1.0, 1), 0.0);
  EXPECT_EQ(gsum_closed_form(-0.5, 2), 0.0);
  EXPECT_EQ(gsum_closed_form(2.5, 2), 0.0);
  Gen g(6);
  for (int a = 1; a <= 5; ++a) {
    for (int q = 0; q < 200; ++q) {
      const double x = g.uniform(0.0, 2.0);
      double exact = 0.0, numeric = 0.0;
      const double h = 1e-6;
      for (int k = 0; k <= a; ++k) {
        const auto w = normalized_basis_knots(k, a);
        exact += bspline_eval(w, x, 1);
        numeric += (bspline_eval(w, x + h, 0) - bspline_eval(w, x - h, 0)) / (2 * h);
      }
      ASSERT_NEAR(gsum_closed_form(x, a), exact, 1e-9);
      ASSERT_NEAR(gsum_closed_form(x, a), numeric, 1e-5);
    }
  }
}

TEST(VbarTest, ExamplesIdentityAndMean) {
  EXPECT_EQ(vbar(0.0, 2), 0.0);
  EXPECT_EQ(vbar(1.0, 2), 0.0);
  EXPECT_DOUBLE_EQ(vbar(0.5, 1), 2.25);
  EXPECT_THROW(vbar(1.5, 2), config_error);
  EXPECT_THROW(vbar(-0.1, 2), config_error);
  for (int a = 1; a <= 4; ++a)
    for (double s : {0.1, 0.33, 0.8}) EXPECT_NEAR(vbar(s, a), std::pow(gsum_closed_form(s, a), 2), 1e-12);
  // Composite Simpson on [0, 1].
  for (int a = 1; a <= 4; ++a) {
    const int n = 2000;
    double acc = vbar(0.0, a) + vbar(1.0, a);
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * vbar(static_cast<double>(i) / n, a);
    EXPECT_NEAR(vbar_mean(a), acc / (3.0 * n), 1e-10);
  }
  EXPECT_NEAR(vbar_mean(2), 10.0 / 7.0, 1e-14);
}

}  // namespace
}  // namespace ldpdrift
