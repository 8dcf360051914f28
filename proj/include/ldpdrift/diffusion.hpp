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

// Parametric scalar diffusions dX = b(theta, X) dt + sigma(X) dW, their
// Euler-Maruyama simulation on a uniform observation grid, and Monte Carlo
// oracles for the population quantities that drive the estimator's limits.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ldpdrift/errors.hpp"
#include "ldpdrift/parallel.hpp"
#include "ldpdrift/polynomial.hpp"
#include "ldpdrift/rng.hpp"

namespace ldpdrift {

// Uniform observation times t_j = j T / n, j = 0..n.
class TimeGrid {
 public:
  TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
      throw config_error("time grid: horizon T must be positive and finite");
    if (steps < 1) throw config_error("time grid: number of steps n must be >= 1");
  }

  double horizon() const { return horizon_; }
  int steps() const { return steps_; }
  double delta() const { return horizon_ / steps_; }
  // Exact at both ends: time(0) == 0 and time(n) == T.
  double time(int j) const { return j == steps_ ? horizon_ : j * delta(); }

  std::vector<double> times() const {
    std::vector<double> t(static_cast<std::size_t>(steps_) + 1);
    for (int j = 0; j <= steps_; ++j) t[static_cast<std::size_t>(j)] = time(j);
    return t;
  }

 private:
  double horizon_;
  int steps_;
};

class DiffusionModel {
 public:
  // Fills out[k] with the k-th theta-derivative of the drift at (theta, x).
  using DriftFamily = std::function<void(double theta, double x, std::span<double> out)>;
  using StateMap = std::function<double(double)>;

  // b(theta, x) = p(theta) * g(x) with p a polynomial.
  struct Separable {
    std::vector<double> theta_poly;
    StateMap state_factor;
  };

  static DiffusionModel general(std::string name, DriftFamily family, int max_order,
                                StateMap sigma, double sigma_min, bool bounded_drift = true) {
    if (!family || !sigma) throw config_error("model '" + name + "': missing drift or diffusion");
    if (max_order < 0) throw config_error("model '" + name + "': negative derivative order");
    DiffusionModel m;
    m.name_ = std::move(name);
    m.family_ = std::move(family);
    m.max_order_ = max_order;
    m.sigma_ = std::move(sigma);
    m.sigma_min_ = sigma_min;
    m.bounded_ = bounded_drift;
    m.check_sigma_min();
    return m;
  }

  static DiffusionModel separable(std::string name, std::vector<double> theta_poly,
                                  StateMap state_factor, StateMap sigma, double sigma_min,
                                  bool bounded_drift = true) {
    if (!state_factor || !sigma) throw config_error("model '" + name + "': missing drift or diffusion");
    while (theta_poly.size() > 1 && theta_poly.back() == 0.0) theta_poly.pop_back();
    if (theta_poly.empty()) theta_poly.push_back(0.0);
    DiffusionModel m;
    m.name_ = std::move(name);
    m.sep_ = Separable{std::move(theta_poly), std::move(state_factor)};
    m.max_order_ = std::numeric_limits<int>::max();
    m.family_ = [sep = m.sep_](double theta, double x, std::span<double> out) {
      poly_derivatives(sep->theta_poly, theta, out);
      const double g = sep->state_factor(x);
      for (double& v : out) v *= g;
    };
    m.sigma_ = std::move(sigma);
    m.sigma_min_ = sigma_min;
    m.bounded_ = bounded_drift;
    m.check_sigma_min();
    return m;
  }

  const std::string& name() const { return name_; }

  void drift_derivatives(double theta, double x, std::span<double> out) const {
    if (out.empty()) return;
    if (static_cast<long long>(out.size()) - 1 > max_order_)
      throw config_error("model '" + name_ + "': drift derivative of order " +
                         std::to_string(out.size() - 1) + " not available (max " +
                         std::to_string(max_order_) + ")");
    family_(theta, x, out);
  }

  double drift(double theta, double x) const {
    double v = 0.0;
    drift_derivatives(theta, x, std::span<double>(&v, 1));
    return v;
  }

  double drift_dtheta(int order, double theta, double x) const {
    std::vector<double> d(static_cast<std::size_t>(order) + 1);
    drift_derivatives(theta, x, d);
    return d.back();
  }

  double diffusion(double x) const { return sigma_(x); }
  double sigma_min() const { return sigma_min_; }
  int max_theta_order() const { return max_order_; }
  bool bounded_drift() const { return bounded_; }
  const Separable* separable_form() const { return sep_ ? &*sep_ : nullptr; }

  // Present iff the drift is a polynomial in theta times a function of x.
  std::optional<int> polynomial_degree_in_theta() const {
    if (!sep_) return std::nullopt;
    return static_cast<int>(sep_->theta_poly.size()) - 1;
  }

 private:
  DiffusionModel() = default;

  void check_sigma_min() const {
    if (!(sigma_min_ > 0.0)) throw config_error("model '" + name_ + "': sigma_min must be positive");
  }

  std::string name_;
  DriftFamily family_;
  std::optional<Separable> sep_;
  int max_order_ = 0;
  StateMap sigma_;
  double sigma_min_ = 1.0;
  bool bounded_ = true;
};

// Named models used by the CLI and the experiments. sigma(x) is
// sigma * (1 + sigma_amplitude * sin^2 x), so sigma_min = sigma.
struct ModelSpec {
  std::string name = "sine";
  double sigma = 1.0;
  double sigma_amplitude = 0.0;
  std::vector<double> theta_poly;  // used by "poly_sine"
};

inline DiffusionModel make_model(const ModelSpec& spec) {
  if (!(spec.sigma > 0.0)) throw config_error("model: sigma must be positive");
  if (spec.sigma_amplitude < 0.0) throw config_error("model: sigma_amplitude must be >= 0");
  DiffusionModel::StateMap sigma;
  if (spec.sigma_amplitude == 0.0) {
    sigma = [s = spec.sigma](double) { return s; };
  } else {
    sigma = [s = spec.sigma, amp = spec.sigma_amplitude](double x) {
      const double sx = std::sin(x);
      return s * (1.0 + amp * sx * sx);
    };
  }
  const auto sine = [](double x) { return std::sin(x); };
  if (spec.name == "sine") return DiffusionModel::separable("sine", {0.0, 1.0}, sine, sigma, spec.sigma);
  if (spec.name == "tanh")
    return DiffusionModel::separable("tanh", {0.0, 1.0}, [](double x) { return std::tanh(x); }, sigma,
                                     spec.sigma);
  if (spec.name == "linear")
    return DiffusionModel::separable("linear", {0.0, 1.0}, [](double x) { return x; }, sigma,
                                     spec.sigma, /*bounded_drift=*/false);
  if (spec.name == "zero")
    return DiffusionModel::separable("zero", {0.0}, [](double) { return 0.0; }, sigma, spec.sigma);
  if (spec.name == "theta_free") return DiffusionModel::separable("theta_free", {1.0}, sine, sigma, spec.sigma);
  if (spec.name == "poly_sine") {
    if (spec.theta_poly.empty()) throw config_error("model poly_sine: theta_poly is required");
    return DiffusionModel::separable("poly_sine", spec.theta_poly, sine, sigma, spec.sigma);
  }
  if (spec.name == "phase") {
    // b(theta, x) = sin(x - 2 theta); d^k/dtheta^k = (-2)^k sin(x - 2 theta + k pi/2).
    auto family = [](double theta, double x, std::span<double> out) {
      const double u = x - 2.0 * theta;
      const double s = std::sin(u);
      const double c = std::cos(u);
      double scale = 1.0;
      for (std::size_t k = 0; k < out.size(); ++k) {
        const double v = (k % 4 == 0) ? s : (k % 4 == 1) ? c : (k % 4 == 2) ? -s : -c;
        out[k] = scale * v;
        scale *= -2.0;
      }
    };
    return DiffusionModel::general("phase", family, std::numeric_limits<int>::max(), sigma, spec.sigma);
  }
  throw config_error("unknown model '" + spec.name + "'");
}

struct InitialLaw {
  enum class Kind { kPoint, kGaussian };
  Kind kind = Kind::kPoint;
  double mean = 0.0;
  double sd = 0.0;

  static InitialLaw point(double x0) { return {Kind::kPoint, x0, 0.0}; }
  static InitialLaw gaussian(double mean, double sd) { return {Kind::kGaussian, mean, sd}; }

  double sample(CounterStream& stream) const {
    return kind == Kind::kPoint ? mean : mean + sd * stream.normal();
  }
};

struct SimulationOptions {
  int substeps = 10;  // Euler sub-steps per observation interval
  int threads = 1;
};

// N x (n+1) observations, row i is individual i.
struct PathPanel {
  int paths = 0;
  TimeGrid grid{1.0, 1};
  double theta_star = 0.0;
  std::uint64_t seed = 0;
  int substeps = 1;
  std::vector<double> data;

  int steps() const { return grid.steps(); }
  std::size_t width() const { return static_cast<std::size_t>(grid.steps()) + 1; }
  double at(int i, int j) const { return data[static_cast<std::size_t>(i) * width() + static_cast<std::size_t>(j)]; }
  double& at(int i, int j) { return data[static_cast<std::size_t>(i) * width() + static_cast<std::size_t>(j)]; }
  std::span<const double> row(int i) const {
    return std::span<const double>(data).subspan(static_cast<std::size_t>(i) * width(), width());
  }
};

namespace detail {

inline void simulate_path(const DiffusionModel& model, double theta, const TimeGrid& grid,
                          const InitialLaw& x0, std::uint64_t seed, int substeps, int path,
                          std::span<double> out) {
  CounterStream init(seed, stream_id(StreamTag::kInitialState, {static_cast<std::uint64_t>(path)}));
  CounterStream noise(seed, stream_id(StreamTag::kBrownian, {static_cast<std::uint64_t>(path)}));
  const double h = grid.delta() / substeps;
  const double sqrt_h = std::sqrt(h);
  double x = x0.sample(init);
  out[0] = x;
  for (int j = 1; j <= grid.steps(); ++j) {
    for (int s = 0; s < substeps; ++s) {
      const double sig = model.diffusion(x);
      if (!(sig > 0.0))
        throw config_error("simulate: non-positive diffusion " + std::to_string(sig) + " at x=" +
                           std::to_string(x) + " (path " + std::to_string(path) + ")");
      x += model.drift(theta, x) * h + sig * sqrt_h * noise.normal();
    }
    if (!std::isfinite(x))
      throw numerical_error("simulate: non-finite value at cell (i=" + std::to_string(path) +
                            ", j=" + std::to_string(j) + ")");
    out[static_cast<std::size_t>(j)] = x;
  }
  if (!std::isfinite(out[0]))
    throw numerical_error("simulate: non-finite value at cell (i=" + std::to_string(path) + ", j=0)");
}

}  // namespace detail

// Euler-Maruyama paths observed every `substeps` sub-steps. Path i draws
// only from its own streams, so the panel is a function of the seed alone.
inline PathPanel simulate_panel(const DiffusionModel& model, double theta_star, int paths,
                                const TimeGrid& grid, const InitialLaw& x0, std::uint64_t seed,
                                const SimulationOptions& options = {}) {
  if (paths < 1) throw config_error("simulate: N must be >= 1");
  if (options.substeps < 1) throw config_error("simulate: substeps must be >= 1");
  PathPanel panel;
  panel.paths = paths;
  panel.grid = grid;
  panel.theta_star = theta_star;
  panel.seed = seed;
  panel.substeps = options.substeps;
  panel.data.assign(static_cast<std::size_t>(paths) * panel.width(), 0.0);
  parallel_for(static_cast<std::size_t>(paths), options.threads, [&](std::size_t i) {
    detail::simulate_path(model, theta_star, grid, x0, seed, options.substeps, static_cast<int>(i),
                          std::span<double>(panel.data).subspan(i * panel.width(), panel.width()));
  });
  return panel;
}

struct MonteCarloEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};

namespace detail {

// Mean and standard error of per-path Riemann sums Delta * sum_j g(X_{t_{j-1}}).
template <typename PerPoint>
MonteCarloEstimate path_functional(const PathPanel& panel, PerPoint&& g) {
  const double dt = panel.grid.delta();
  std::vector<double> per_path(static_cast<std::size_t>(panel.paths));
  for (int i = 0; i < panel.paths; ++i) {
    double acc = 0.0;
    for (int j = 1; j <= panel.steps(); ++j) acc += g(panel.at(i, j - 1));
    per_path[static_cast<std::size_t>(i)] = dt * acc;
  }
  const double m = pairwise_sum(per_path) / panel.paths;
  double ss = 0.0;
  for (double v : per_path) ss += (v - m) * (v - m);
  const double var = panel.paths > 1 ? ss / (panel.paths - 1) : 0.0;
  return {m, std::sqrt(var / panel.paths)};
}

}  // namespace detail

// Sigma_0(theta) = int_0^T E[(d_theta b(theta, X_s) / sigma(X_s))^2] ds with X
// simulated at theta, by a left Riemann sum over M paths.
inline MonteCarloEstimate estimate_sigma0(const DiffusionModel& model, double theta,
                                          const TimeGrid& grid, int replications, std::uint64_t seed,
                                          const InitialLaw& x0 = {},
                                          const SimulationOptions& options = {}) {
  if (replications < 100) throw config_error("estimate_sigma0: need M >= 100 replications");
  const PathPanel panel = simulate_panel(model, theta, replications, grid, x0, seed, options);
  return detail::path_functional(panel, [&](double x) {
    const double r = model.drift_dtheta(1, theta, x) / model.diffusion(x);
    return r * r;
  });
}

// C_inf(theta) = -int_0^T E[(b(theta, X_s) - b(theta*, X_s))^2 / sigma^2(X_s)] ds, X under theta*.
inline MonteCarloEstimate estimate_c_infinity(const DiffusionModel& model, double theta,
                                              double theta_star, const TimeGrid& grid,
                                              int replications, std::uint64_t seed,
                                              const InitialLaw& x0 = {},
                                              const SimulationOptions& options = {}) {
  if (replications < 100) throw config_error("estimate_c_infinity: need M >= 100 replications");
  const PathPanel panel = simulate_panel(model, theta_star, replications, grid, x0, seed, options);
  auto est = detail::path_functional(panel, [&](double x) {
    const double d = model.drift(theta, x) - model.drift(theta_star, x);
    const double s = model.diffusion(x);
    return d * d / (s * s);
  });
  est.value = -est.value;
  return est;
}

}  // namespace ldpdrift
