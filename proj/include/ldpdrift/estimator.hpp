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

// Public contrast, its maximization, and the regime diagnostics that select
// which limit law applies.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ldpdrift/diffusion.hpp"
#include "ldpdrift/errors.hpp"
#include "ldpdrift/privacy.hpp"
#include "ldpdrift/spline.hpp"
#include "ldpdrift/theta_grid.hpp"

namespace ldpdrift {

inline KnotVector knots_for(const ThetaGrid& grid, int a) { return KnotVector::from_nodes(grid.points(), a); }

// Hermite interpolant of the (l, k) aggregates on the theta grid. By
// linearity this equals the sum over (i, j) of the per-report interpolants.
inline SplineInterpolant build_public_contrast(const PublicAggregate& agg) {
  if (agg.sum_z.size() != static_cast<std::size_t>(agg.grid.size()) * static_cast<std::size_t>(agg.orders()))
    throw config_error("build_public_contrast: aggregate shape does not match the grid");
  return hermite_interpolate(agg.sum_z, knots_for(agg.grid, agg.a));
}

inline SplineInterpolant build_public_contrast(const PublicPanel& pub) {
  return build_public_contrast(aggregate_public(pub));
}

struct Maximum {
  double theta = 0.0;
  double value = 0.0;
};

namespace detail {

// Root of the first derivative in [lo, hi] given a sign change from
// positive to negative; Newton steps are kept inside the bracket and fall
// back to bisection.
inline double refine_stationary_point(const SplineInterpolant& s, double lo, double hi, double tolerance) {
  double d[3];
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    s.derivatives(x, 2, d);
    const double slope = d[1];
    if (std::abs(slope) <= tolerance) break;
    if (slope > 0.0) lo = x;
    else hi = x;
    double next = (d[2] != 0.0) ? x - slope / d[2] : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
      x = 0.5 * (lo + hi);
      break;
    }
    x = next;
  }
  return x;
}

}  // namespace detail

// Global maximum over [xi_0, xi_Lambda]: dense sampling of each knot
// interval, then safeguarded Newton on S' wherever it changes sign from
// positive to negative. Candidates are the samples and the refined points;
// ties go to the smaller theta.
inline Maximum maximize_contrast(const SplineInterpolant& s, int samples_per_interval = 64,
                                 double tolerance = 1e-10) {
  if (samples_per_interval < 1) throw config_error("maximize: need at least one sample per interval");
  const auto& knots = s.knots();
  const int lambda = knots.lambda();
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(lambda * samples_per_interval) + 1);
  for (int l = 0; l < lambda; ++l) {
    const double x0 = knots.node(l), x1 = knots.node(l + 1);
    for (int q = 0; q < samples_per_interval; ++q) xs.push_back(x0 + (x1 - x0) * q / samples_per_interval);
  }
  xs.push_back(knots.back());
  std::vector<double> value(xs.size()), slope(xs.size());
  double d[2];
  double scale = 0.0;
  bool any_finite = false;
  for (std::size_t q = 0; q < xs.size(); ++q) {
    s.derivatives(xs[q], 1, d);
    value[q] = d[0];
    slope[q] = d[1];
    if (std::isfinite(d[0])) {
      any_finite = true;
      scale = std::max(scale, std::abs(d[1]));
    }
  }
  if (!any_finite) throw numerical_error("maximize: contrast is NaN everywhere on the domain");
  const double slope_tolerance = tolerance * std::max(1.0, scale);
  Maximum best{std::numeric_limits<double>::quiet_NaN(), -std::numeric_limits<double>::infinity()};
  const auto consider = [&](double x, double v) {
    if (!std::isfinite(v)) return;
    if (v > best.value || (v == best.value && x < best.theta)) best = {x, v};
  };
  for (std::size_t q = 0; q < xs.size(); ++q) {
    consider(xs[q], value[q]);
    if (q + 1 < xs.size() && slope[q] > 0.0 && slope[q + 1] < 0.0) {
      const double x = detail::refine_stationary_point(s, xs[q], xs[q + 1], slope_tolerance);
      consider(x, s.evaluate(x));
    }
  }
  return best;
}

enum class Regime { kNegligible, kSignificant, kThreshold };

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::kNegligible: return "negligible";
    case Regime::kSignificant: return "significant";
    case Regime::kThreshold: return "threshold";
  }
  return "unknown";
}

inline Regime parse_regime(const std::string& name) {
  if (name == "negligible") return Regime::kNegligible;
  if (name == "significant") return Regime::kSignificant;
  if (name == "threshold") return Regime::kThreshold;
  throw config_error("unknown regime '" + name + "' (expected negligible, significant or threshold)");
}

struct RegimeCutoffs {
  double significant_above = 10.0;  // r > cutoff
  double negligible_below = 0.1;    // r sqrt(log L) < cutoff
};

struct RegimeInfo {
  double r = 0.0;
  Regime regime = Regime::kThreshold;
};

// r_{n,N} = L^2 log(n) / sqrt(alpha_bar2). N does not enter r; it is kept
// in the signature because the regime conditions are joint limits in (n, N).
inline RegimeInfo compute_regime(int n, int paths, int grid_size, double alpha_bar2,
                                 const RegimeCutoffs& cutoffs = {}) {
  if (n < 2 || paths < 1 || grid_size < 2 || !(alpha_bar2 > 0.0))
    throw config_error("compute_regime: need n >= 2, N >= 1, L >= 2 and alpha_bar2 > 0");
  RegimeInfo info;
  info.r = static_cast<double>(grid_size) * grid_size * std::log(static_cast<double>(n)) / std::sqrt(alpha_bar2);
  if (info.r > cutoffs.significant_above) info.regime = Regime::kSignificant;
  else if (info.r * std::sqrt(std::log(static_cast<double>(grid_size))) < cutoffs.negligible_below)
    info.regime = Regime::kNegligible;
  else info.regime = Regime::kThreshold;
  return info;
}

inline RegimeInfo compute_regime(int n, int paths, int grid_size, const PrivacyBudget& budget,
                                 const RegimeCutoffs& cutoffs = {}) {
  return compute_regime(n, paths, grid_size, budget.alpha_bar2(), cutoffs);
}

// v_n(theta*) = vbar(L (theta* - theta_l*)) with theta* in [theta_l*, theta_l* + 1/L).
inline double v_n_at(double theta_star, const ThetaGrid& grid, int a) {
  const int l = grid.cell_of(theta_star);
  const double s = std::clamp(grid.size() * (theta_star - grid.point(l)), 0.0, 1.0);
  return vbar(s, a);
}

// sd of theta_hat when privacy is negligible: sqrt(2 / (N Sigma_0)).
inline double predicted_sd_negligible(int paths, double sigma0) { return std::sqrt(2.0 / (paths * sigma0)); }

// 4 (a+1) L^2 log(n) sqrt(T) / sqrt(N alpha_bar2): divides theta_hat - theta*
// to give the normalized error of the significant regime.
inline double significance_scale(int a, int grid_size, int n, double horizon, int paths, double alpha_bar2) {
  return 4.0 * (a + 1) * grid_size * grid_size * std::log(static_cast<double>(n)) * std::sqrt(horizon) /
         std::sqrt(paths * alpha_bar2);
}

// sd of theta_hat when privacy dominates, given v_n:
// 4 (a+1) L^2 log(n) sqrt(T) sqrt(v_n) / Sigma_0 / sqrt(N alpha_bar2).
inline double predicted_sd_significant(int a, int grid_size, int n, double horizon, double v_n, double sigma0,
                                       int paths, double alpha_bar2) {
  return significance_scale(a, grid_size, n, horizon, paths, alpha_bar2) * std::sqrt(v_n) / sigma0;
}

struct EstimationOptions {
  int a = 2;
  int grid_size = 6;
  bool random_shift = false;
  double shift = 0.0;  // used when random_shift is false
  PrivatizeOptions privatize;
  RegimeCutoffs cutoffs;
  int samples_per_interval = 64;
  std::optional<double> sigma0;  // Sigma_0 at theta*; skip predictions when absent
};

struct EstimationResult {
  double theta_hat = 0.0;
  double contrast_at_hat = 0.0;
  ThetaGrid grid{2};
  double r_nN = 0.0;
  Regime regime = Regime::kThreshold;
  std::optional<double> theta_star;
  std::optional<double> v_n_star;
  std::optional<double> predicted_sd_negligible;
  std::optional<double> predicted_sd_significant;
  std::uint64_t seed = 0;
};

// Grid (fixed or shifted), privatization, aggregation, interpolation and
// maximization, with the regime diagnostics attached.
inline EstimationResult estimate(const PathPanel& panel, const DiffusionModel& model, const PrivacyBudget& budget,
                                 const EstimationOptions& options, std::uint64_t seed,
                                 std::optional<double> theta_star = std::nullopt) {
  EstimationResult res;
  res.seed = seed;
  res.grid = options.random_shift ? ThetaGrid::random_shift(options.grid_size, seed)
                                  : ThetaGrid(options.grid_size, options.shift);
  const auto agg = privatize_aggregate(panel, model, res.grid, budget, options.a, seed, options.privatize);
  const auto interp = build_public_contrast(agg);
  const auto best = maximize_contrast(interp, options.samples_per_interval);
  res.theta_hat = best.theta;
  res.contrast_at_hat = best.value;
  const auto regime = compute_regime(panel.steps(), panel.paths, options.grid_size, budget, options.cutoffs);
  res.r_nN = regime.r;
  res.regime = regime.regime;
  res.theta_star = theta_star;
  if (theta_star) {
    const double top = (res.grid.size() + res.grid.shift()) / res.grid.size();
    if (*theta_star >= res.grid.lower() && *theta_star < top) res.v_n_star = v_n_at(*theta_star, res.grid, options.a);
  }
  if (options.sigma0) {
    res.predicted_sd_negligible = predicted_sd_negligible(panel.paths, *options.sigma0);
    if (res.v_n_star)
      res.predicted_sd_significant =
          predicted_sd_significant(options.a, options.grid_size, panel.steps(), panel.grid.horizon(), *res.v_n_star,
                                   *options.sigma0, panel.paths, budget.alpha_bar2());
  }
  return res;
}

}  // namespace ldpdrift
