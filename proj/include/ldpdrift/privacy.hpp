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

// Componentwise local differential privacy for contrast reports. Report j of
// individual i is the vector of clipped contrast derivatives
// f^(k)(theta_l; X_{t_j}, X_{t_{j+1}}) for l = 0..L-1, k = 0..a, each
// released with independent Laplace noise of scale 2 B L (a + 1) / alpha_j,
// where B bounds the clipped values. Reports are indexed j = 0..n-1.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ldpdrift/contrast.hpp"
#include "ldpdrift/diffusion.hpp"
#include "ldpdrift/errors.hpp"
#include "ldpdrift/parallel.hpp"
#include "ldpdrift/rng.hpp"
#include "ldpdrift/theta_grid.hpp"

namespace ldpdrift {

// Per-report privacy levels alpha_0..alpha_{n-1}.
class PrivacyBudget {
 public:
  explicit PrivacyBudget(std::vector<double> alphas) : alphas_(std::move(alphas)) {
    if (alphas_.empty()) throw config_error("privacy budget: need at least one alpha");
    for (std::size_t j = 0; j < alphas_.size(); ++j)
      if (!(alphas_[j] > 0.0) || !std::isfinite(alphas_[j]))
        throw config_error("privacy budget: alpha_" + std::to_string(j) + " = " +
                           std::to_string(alphas_[j]) + " must be positive and finite");
    alpha_bar2_ = compute_alpha_bar2(alphas_);
    alpha_eff_ = std::accumulate(alphas_.begin(), alphas_.end(), 0.0);
    const auto [lo, hi] = std::minmax_element(alphas_.begin(), alphas_.end());
    alpha_min_ = *lo;
    alpha_max_ = *hi;
  }

  static PrivacyBudget constant(int n, double alpha) {
    if (n < 1) throw config_error("privacy budget: n must be >= 1");
    return PrivacyBudget(std::vector<double>(static_cast<std::size_t>(n), alpha));
  }

  // alpha_j = alpha_eff / n for every j.
  static PrivacyBudget from_effective(int n, double alpha_eff) { return constant(n, alpha_eff / n); }

  // 1 / alpha_bar2 = n^{-1} sum_j 1 / alpha_j^2.
  static double compute_alpha_bar2(std::span<const double> alphas) {
    std::vector<double> inv(alphas.size());
    for (std::size_t j = 0; j < alphas.size(); ++j) inv[j] = 1.0 / (alphas[j] * alphas[j]);
    return static_cast<double>(alphas.size()) / pairwise_sum(inv);
  }

  std::size_t size() const { return alphas_.size(); }
  const std::vector<double>& alphas() const { return alphas_; }
  double alpha(std::size_t j) const { return alphas_[j]; }
  double alpha_bar2() const { return alpha_bar2_; }
  double alpha_eff() const { return alpha_eff_; }
  double alpha_min() const { return alpha_min_; }
  double alpha_max() const { return alpha_max_; }
  double ratio() const { return alpha_max_ / alpha_min_; }

 private:
  std::vector<double> alphas_;
  double alpha_bar2_ = 0.0;
  double alpha_eff_ = 0.0;
  double alpha_min_ = 0.0;
  double alpha_max_ = 0.0;
};

// Total leakage about one time point through all coordinates of a
// dependent trajectory: sum_j alpha_j.
inline double effective_privacy(const PrivacyBudget& budget) { return budget.alpha_eff(); }

enum class ClipKind {
  kSmooth,  // x phi(x / tau), phi the C-infinity cutoff below; B = tau max xi phi(xi)
  kHard,    // sign(x) tau h(|x| / tau), h(r) = min(r, 1) with a C^1 corner; B = tau
  kNone,    // identity; only valid with noise disabled
};

inline std::string to_string(ClipKind kind) {
  switch (kind) {
    case ClipKind::kSmooth: return "smooth";
    case ClipKind::kHard: return "hard";
    case ClipKind::kNone: return "none";
  }
  return "unknown";
}

inline ClipKind parse_clip_kind(const std::string& name) {
  if (name == "smooth") return ClipKind::kSmooth;
  if (name == "hard") return ClipKind::kHard;
  if (name == "none") return ClipKind::kNone;
  throw config_error("unknown clip kind '" + name + "' (expected smooth, hard or none)");
}

// psi(t) = exp(-1/t) for t > 0, else 0.
inline double cutoff_psi(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

// phi(xi) = psi(2 - |xi|) / (psi(2 - |xi|) + psi(|xi| - 1)): 1 on |xi| <= 1,
// 0 on |xi| >= 2, smooth and monotone in between.
inline double smooth_cutoff(double xi) {
  const double r = std::abs(xi);
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  const double up = cutoff_psi(2.0 - r);
  return up / (up + cutoff_psi(r - 1.0));
}

// h(r) = r on [0, 1/2], r - (r - 1/2)^2 / 2 on [1/2, 3/2], 1 beyond.
inline double hard_clip_profile(double r) {
  if (r <= 0.5) return r;
  if (r >= 1.5) return 1.0;
  const double d = r - 0.5;
  return r - 0.5 * d * d;
}

namespace detail {

// max over xi in [1, 2] of xi phi(xi): dense scan, then golden section on
// the bracketing cell.
inline double smooth_clip_peak() {
  const auto g = [](double xi) { return xi * smooth_cutoff(xi); };
  constexpr int kScan = 20000;
  int best = 0;
  double best_value = g(1.0);
  for (int s = 1; s <= kScan; ++s) {
    const double v = g(1.0 + static_cast<double>(s) / kScan);
    if (v > best_value) {
      best_value = v;
      best = s;
    }
  }
  double lo = 1.0 + std::max(best - 1, 0) / static_cast<double>(kScan);
  double hi = 1.0 + std::min(best + 1, kScan) / static_cast<double>(kScan);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f1 = g(x1), f2 = g(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = g(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = g(x1);
    }
  }
  return std::max({best_value, f1, f2});
}

}  // namespace detail

class ClipProfile {
 public:
  ClipProfile(ClipKind kind, double tau) : kind_(kind), tau_(tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw config_error("clip: tau must be positive and finite");
    switch (kind) {
      case ClipKind::kSmooth: {
        static const double peak = detail::smooth_clip_peak();
        sup_ = tau * peak;
        break;
      }
      case ClipKind::kHard: sup_ = tau; break;
      case ClipKind::kNone: sup_ = std::numeric_limits<double>::infinity(); break;
    }
  }

  // tau_n = sqrt(Delta_n) log(n).
  static double threshold_for(const TimeGrid& grid) {
    if (grid.steps() < 2) throw config_error("clip: n must be >= 2 so that log(n) > 0");
    return std::sqrt(grid.delta()) * std::log(static_cast<double>(grid.steps()));
  }

  static ClipProfile for_grid(ClipKind kind, const TimeGrid& grid) { return {kind, threshold_for(grid)}; }

  ClipKind kind() const { return kind_; }
  double tau() const { return tau_; }
  // B = sup_x |clip(x)|.
  double clip_sup() const { return sup_; }

  double apply(double x) const {
    switch (kind_) {
      case ClipKind::kSmooth: return x * smooth_cutoff(x / tau_);
      case ClipKind::kHard: return std::copysign(tau_ * hard_clip_profile(std::abs(x) / tau_), x);
      case ClipKind::kNone: return x;
    }
    return x;
  }

 private:
  ClipKind kind_;
  double tau_;
  double sup_ = 0.0;
};

// Laplace scale 2 B L (a + 1) / alpha_j for every report j.
inline std::vector<double> laplace_scales(const ClipProfile& clip, const PrivacyBudget& budget, int grid_size,
                                          int a) {
  std::vector<double> s(budget.size());
  for (std::size_t j = 0; j < s.size(); ++j) s[j] = 2.0 * clip.clip_sup() * grid_size * (a + 1) / budget.alpha(j);
  return s;
}

enum class NoiseSampling {
  kPerReport,      // one Laplace draw per (i, j, l, k)
  kAggregateLaw,   // sum_i of N Laplace(s) drawn as s (G - G'), G, G' ~ Gamma(N, 1)
};

inline std::string to_string(NoiseSampling mode) {
  return mode == NoiseSampling::kPerReport ? "per_report" : "aggregate_law";
}

inline NoiseSampling parse_noise_sampling(const std::string& name) {
  if (name == "per_report") return NoiseSampling::kPerReport;
  if (name == "aggregate_law") return NoiseSampling::kAggregateLaw;
  throw config_error("unknown noise sampling '" + name + "' (expected per_report or aggregate_law)");
}

struct PrivatizeOptions {
  ClipKind clip = ClipKind::kSmooth;
  bool noise = true;  // false gives the alpha -> infinity limit
  NoiseSampling sampling = NoiseSampling::kPerReport;
  int threads = 1;
};

// The full public tensor z[i][j][l][k].
struct PublicPanel {
  int paths = 0;
  int steps = 0;
  int a = 0;
  ThetaGrid grid{2};
  PrivacyBudget budget{std::vector<double>{1.0}};
  ClipProfile clip{ClipKind::kSmooth, 1.0};
  std::vector<double> laplace_scale_by_j;
  std::uint64_t seed = 0;
  bool noise = true;
  std::vector<double> z;

  int orders() const { return a + 1; }
  std::size_t report_width() const { return static_cast<std::size_t>(grid.size()) * static_cast<std::size_t>(orders()); }
  std::size_t index(int i, int j, int l, int k) const {
    return ((static_cast<std::size_t>(i) * static_cast<std::size_t>(steps) + static_cast<std::size_t>(j)) *
                static_cast<std::size_t>(grid.size()) +
            static_cast<std::size_t>(l)) *
               static_cast<std::size_t>(orders()) +
           static_cast<std::size_t>(k);
  }
  double at(int i, int j, int l, int k) const { return z[index(i, j, l, k)]; }
  std::span<const double> report(int i, int j) const {
    return std::span<const double>(z).subspan(index(i, j, 0, 0), report_width());
  }
};

// Per-(l, k) sums over all individuals and reports; all the estimator needs.
struct PublicAggregate {
  int paths = 0;
  int steps = 0;
  int a = 0;
  ThetaGrid grid{2};
  std::uint64_t seed = 0;
  bool noise = true;
  NoiseSampling sampling = NoiseSampling::kPerReport;
  double clip_sup = 0.0;
  std::vector<double> sum_z;  // [l * (a + 1) + k]

  int orders() const { return a + 1; }
  double at(int l, int k) const { return sum_z[static_cast<std::size_t>(l * orders() + k)]; }
};

namespace detail {

inline void check_privatize_inputs(const PathPanel& panel, const ThetaGrid& grid, const PrivacyBudget& budget,
                                   int a, const PrivatizeOptions& options) {
  if (a < 1) throw config_error("privatize: spline order a must be >= 1");
  if (budget.size() != static_cast<std::size_t>(panel.steps()))
    throw config_error("privatize: budget has " + std::to_string(budget.size()) + " levels but the panel has n = " +
                       std::to_string(panel.steps()) + " reports");
  if (options.noise && options.clip == ClipKind::kNone)
    throw config_error("privatize: clip kind 'none' is only allowed with noise disabled");
  if (grid.lower() < 0.0 || grid.upper() > 1.0) throw config_error("privatize: theta grid must lie in [0, 1]");
}

inline CounterStream report_noise_stream(std::uint64_t seed, int i, int j) {
  return CounterStream(seed, stream_id(StreamTag::kReportNoise,
                                       {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)}));
}

}  // namespace detail

// Clipped, noiseless report for one increment: out[l * (a + 1) + k].
inline void clipped_report(ContrastKernel& kernel, const ClipProfile& clip, double x_prev, double x_next,
                           std::span<double> out) {
  kernel.evaluate(x_prev, x_next, out);
  for (double& v : out) v = clip.apply(v);
}

inline PublicPanel privatize(const PathPanel& panel, const DiffusionModel& model, const ThetaGrid& grid,
                             const PrivacyBudget& budget, int a, std::uint64_t seed,
                             const PrivatizeOptions& options = {}) {
  detail::check_privatize_inputs(panel, grid, budget, a, options);
  PublicPanel pub;
  pub.paths = panel.paths;
  pub.steps = panel.steps();
  pub.a = a;
  pub.grid = grid;
  pub.budget = budget;
  pub.clip = ClipProfile::for_grid(options.clip, panel.grid);
  pub.laplace_scale_by_j = laplace_scales(pub.clip, budget, grid.size(), a);
  pub.seed = seed;
  pub.noise = options.noise;
  const std::size_t width = pub.report_width();
  pub.z.assign(static_cast<std::size_t>(pub.paths) * static_cast<std::size_t>(pub.steps) * width, 0.0);
  parallel_for(static_cast<std::size_t>(pub.paths), options.threads, [&](std::size_t row) {
    const int i = static_cast<int>(row);
    ContrastKernel kernel(model, grid.points(), a, panel.grid.delta());
    for (int j = 0; j < pub.steps; ++j) {
      auto out = std::span<double>(pub.z).subspan(pub.index(i, j, 0, 0), width);
      clipped_report(kernel, pub.clip, panel.at(i, j), panel.at(i, j + 1), out);
      if (!options.noise) continue;
      auto stream = detail::report_noise_stream(seed, i, j);
      const double scale = pub.laplace_scale_by_j[static_cast<std::size_t>(j)];
      for (double& v : out) v += stream.laplace(scale);
    }
  });
  return pub;
}

// Sums over (i, j) of a full public panel: reports are summed in j order
// per individual, then individuals are combined by a pairwise tree.
inline PublicAggregate aggregate_public(const PublicPanel& pub) {
  const std::size_t width = pub.report_width();
  std::vector<double> rows(static_cast<std::size_t>(pub.paths) * width, 0.0);
  for (int i = 0; i < pub.paths; ++i) {
    auto acc = std::span<double>(rows).subspan(static_cast<std::size_t>(i) * width, width);
    for (int j = 0; j < pub.steps; ++j) {
      const auto r = pub.report(i, j);
      for (std::size_t c = 0; c < width; ++c) acc[c] += r[c];
    }
  }
  PublicAggregate agg;
  agg.paths = pub.paths;
  agg.steps = pub.steps;
  agg.a = pub.a;
  agg.grid = pub.grid;
  agg.seed = pub.seed;
  agg.noise = pub.noise;
  agg.sampling = NoiseSampling::kPerReport;
  agg.clip_sup = pub.clip.clip_sup();
  agg.sum_z = pairwise_reduce_rows(rows, width);
  return agg;
}

// Streaming privatization: never stores the tensor. With per-report
// sampling the result is bit-identical to aggregate_public(privatize(...)).
inline PublicAggregate privatize_aggregate(const PathPanel& panel, const DiffusionModel& model,
                                           const ThetaGrid& grid, const PrivacyBudget& budget, int a,
                                           std::uint64_t seed, const PrivatizeOptions& options = {}) {
  detail::check_privatize_inputs(panel, grid, budget, a, options);
  const ClipProfile clip = ClipProfile::for_grid(options.clip, panel.grid);
  const auto scales = laplace_scales(clip, budget, grid.size(), a);
  const std::size_t width = static_cast<std::size_t>(grid.size()) * static_cast<std::size_t>(a + 1);
  const bool per_report_noise = options.noise && options.sampling == NoiseSampling::kPerReport;
  std::vector<double> rows(static_cast<std::size_t>(panel.paths) * width, 0.0);
  constexpr std::size_t kBlock = 32;
  const std::size_t blocks = (static_cast<std::size_t>(panel.paths) + kBlock - 1) / kBlock;
  parallel_for(blocks, options.threads, [&](std::size_t b) {
    ContrastKernel kernel(model, grid.points(), a, panel.grid.delta());
    std::vector<double> report(width);
    const std::size_t end = std::min<std::size_t>((b + 1) * kBlock, static_cast<std::size_t>(panel.paths));
    for (std::size_t row = b * kBlock; row < end; ++row) {
      const int i = static_cast<int>(row);
      auto acc = std::span<double>(rows).subspan(row * width, width);
      for (int j = 0; j < panel.steps(); ++j) {
        clipped_report(kernel, clip, panel.at(i, j), panel.at(i, j + 1), report);
        if (per_report_noise) {
          auto stream = detail::report_noise_stream(seed, i, j);
          const double scale = scales[static_cast<std::size_t>(j)];
          for (double& v : report) v += stream.laplace(scale);
        }
        for (std::size_t c = 0; c < width; ++c) acc[c] += report[c];
      }
    }
  });
  PublicAggregate agg;
  agg.paths = panel.paths;
  agg.steps = panel.steps();
  agg.a = a;
  agg.grid = grid;
  agg.seed = seed;
  agg.noise = options.noise;
  agg.sampling = options.sampling;
  agg.clip_sup = clip.clip_sup();
  agg.sum_z = pairwise_reduce_rows(rows, width);
  if (options.noise && options.sampling == NoiseSampling::kAggregateLaw) {
    // Sum of N i.i.d. Laplace(s) has the law of s (G - G') with G, G'
    // independent Gamma(N, 1); one stream per (l, k), reports in order.
    std::gamma_distribution<double> gamma(static_cast<double>(panel.paths), 1.0);
    for (std::size_t c = 0; c < width; ++c) {
      CounterStream stream(seed, stream_id(StreamTag::kAggregateNoise, {static_cast<std::uint64_t>(c)}));
      double noise = 0.0;
      for (int j = 0; j < panel.steps(); ++j) {
        gamma.reset();
        const double g1 = gamma(stream);
        const double g2 = gamma(stream);
        noise += scales[static_cast<std::size_t>(j)] * (g1 - g2);
      }
      agg.sum_z[c] += noise;
    }
  }
  return agg;
}

// Fraction of (i, j, l, k) with |f^(k)(theta_l)| > tau.
inline double clip_exceedance_rate(const PathPanel& panel, const DiffusionModel& model, const ThetaGrid& grid,
                                   int a, const ClipProfile& clip, int threads = 1) {
  const std::size_t width = static_cast<std::size_t>(grid.size()) * static_cast<std::size_t>(a + 1);
  std::vector<double> counts(static_cast<std::size_t>(panel.paths), 0.0);
  parallel_for(static_cast<std::size_t>(panel.paths), threads, [&](std::size_t row) {
    ContrastKernel kernel(model, grid.points(), a, panel.grid.delta());
    std::vector<double> values(width);
    std::size_t count = 0;
    for (int j = 0; j < panel.steps(); ++j) {
      kernel.evaluate(panel.at(static_cast<int>(row), j), panel.at(static_cast<int>(row), j + 1), values);
      for (double v : values) count += std::abs(v) > clip.tau() ? 1 : 0;
    }
    counts[row] = static_cast<double>(count);
  });
  const double total = static_cast<double>(panel.paths) * panel.steps() * static_cast<double>(width);
  return pairwise_sum(counts) / total;
}

// Worst-case log density ratio of two product-Laplace laws with common
// scale and centers c1, c2: sum |c1 - c2| / scale (attained far in the tail).
inline double ldp_log_ratio(std::span<const double> c1, std::span<const double> c2, double scale) {
  if (c1.size() != c2.size()) throw config_error("ldp_log_ratio: report sizes differ");
  double d = 0.0;
  for (std::size_t c = 0; c < c1.size(); ++c) d += std::abs(c1[c] - c2[c]);
  return d / scale;
}

// The channel of one report: which contrast, grid, clip and budget.
struct LdpChannel {
  const DiffusionModel* model = nullptr;
  ThetaGrid grid{2};
  int a = 1;
  double delta = 0.01;
  ClipProfile clip{ClipKind::kSmooth, 1.0};
  PrivacyBudget budget{std::vector<double>{1.0}};
};

// Two neighbouring private inputs (x_j, x_{j+1}) and (x'_j, x'_{j+1}).
struct ReportPair {
  double x_prev = 0.0;
  double x_next = 0.0;
  double x_prev_alt = 0.0;
  double x_next_alt = 0.0;
};

// max over pairs of the log density ratio of report j, for every j.
inline std::vector<double> verify_ldp(const LdpChannel& channel, std::span<const ReportPair> pairs) {
  if (pairs.empty()) throw config_error("verify_ldp: need at least one pair");
  if (channel.model == nullptr) throw config_error("verify_ldp: missing model");
  if (channel.clip.kind() == ClipKind::kNone) throw config_error("verify_ldp: clip kind 'none' is not private");
  ContrastKernel kernel(*channel.model, channel.grid.points(), channel.a, channel.delta);
  const auto scales = laplace_scales(channel.clip, channel.budget, channel.grid.size(), channel.a);
  const std::size_t width = kernel.width();
  std::vector<double> c1(width), c2(width);
  std::vector<double> out(channel.budget.size(), 0.0);
  for (const auto& p : pairs) {
    clipped_report(kernel, channel.clip, p.x_prev, p.x_next, c1);
    clipped_report(kernel, channel.clip, p.x_prev_alt, p.x_next_alt, c2);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::max(out[j], ldp_log_ratio(c1, c2, scales[j]));
  }
  return out;
}

// Tail bound for S_U = sum_h U_h, U_h ~ Laplace(1 / gamma_h) independent:
// P(|S_U| / sqrt(U) >= lambda) <= 2 exp(-lambda^2 gbar2 / 8) for
// lambda <= 2 gamma_max sqrt(U) / gbar2, and 2 exp(-gamma_max lambda sqrt(U) / 4)
// beyond, with 1 / gbar2 = U^{-1} sum_h 1 / gamma_h^2.
inline double laplace_sum_tail_bound(double lambda, std::span<const double> gammas) {
  const double gbar2 = PrivacyBudget::compute_alpha_bar2(gammas);
  const double gmax = *std::max_element(gammas.begin(), gammas.end());
  const double root_u = std::sqrt(static_cast<double>(gammas.size()));
  if (lambda <= 2.0 * gmax * root_u / gbar2) return 2.0 * std::exp(-lambda * lambda * gbar2 / 8.0);
  return 2.0 * std::exp(-gmax * lambda * root_u / 4.0);
}

}  // namespace ldpdrift
