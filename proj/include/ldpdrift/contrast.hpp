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

// Euler pseudo-likelihood contrast
//
//   f(theta; x, y) = (2 b(theta, x) (y - x) - Delta b(theta, x)^2) / sigma(x)^2
//
// and its theta-derivatives. Derivatives are analytic: d^k b comes from the
// model, d^k (b^2) from the Leibniz rule over the same family.

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "ldpdrift/diffusion.hpp"
#include "ldpdrift/errors.hpp"
#include "ldpdrift/parallel.hpp"
#include "ldpdrift/polynomial.hpp"

namespace ldpdrift {

struct ContrastTerm {
  std::vector<double> value_by_order;  // entry k is d^k f / d theta^k

  double operator[](int k) const { return value_by_order[static_cast<std::size_t>(k)]; }
  int max_order() const { return static_cast<int>(value_by_order.size()) - 1; }
};

namespace detail {

// out[k] = sum_k f^(k) from drift derivatives d[0..K].
inline void contrast_from_drift(std::span<const double> d, double increment, double delta,
                                double inv_var, std::span<double> out) {
  for (std::size_t k = 0; k < out.size(); ++k) {
    double square = 0.0;
    for (std::size_t m = 0; m <= k; ++m)
      square += binomial(static_cast<int>(k), static_cast<int>(m)) * d[m] * d[k - m];
    out[k] = (2.0 * d[k] * increment - delta * square) * inv_var;
  }
}

}  // namespace detail

inline ContrastTerm contrast_derivatives(const DiffusionModel& model, double theta, double x_prev,
                                         double x_next, double delta, int max_order) {
  if (max_order < 0) throw config_error("contrast: max_order must be >= 0");
  const double sig = model.diffusion(x_prev);
  if (!(sig > 0.0)) throw config_error("contrast: non-positive diffusion at x_prev");
  std::vector<double> d(static_cast<std::size_t>(max_order) + 1);
  model.drift_derivatives(theta, x_prev, d);
  ContrastTerm term{std::vector<double>(d.size())};
  detail::contrast_from_drift(d, x_next - x_prev, delta, 1.0 / (sig * sig), term.value_by_order);
  return term;
}

// Evaluates f^(k)(theta_l; x, y) for a fixed set of grid points and all
// orders k <= max_order at once. Separable models reuse the polynomial
// derivatives per grid point, so only g(x) and sigma(x) are evaluated per
// observation pair.
class ContrastKernel {
 public:
  ContrastKernel(const DiffusionModel& model, std::span<const double> thetas, int max_order,
                 double delta)
      : model_(&model),
        thetas_(thetas.begin(), thetas.end()),
        orders_(max_order + 1),
        delta_(delta) {
    if (max_order < 0) throw config_error("contrast: max_order must be >= 0");
    if (max_order > model.max_theta_order())
      throw config_error("model '" + model.name() + "': drift derivative of order " +
                         std::to_string(max_order) + " not available");
    if (const auto* sep = model.separable_form()) {
      const auto square = poly_multiply(sep->theta_poly, sep->theta_poly);
      linear_.resize(thetas_.size() * static_cast<std::size_t>(orders_));
      quadratic_.resize(linear_.size());
      for (std::size_t l = 0; l < thetas_.size(); ++l) {
        poly_derivatives(sep->theta_poly, thetas_[l], std::span<double>(linear_).subspan(l * orders_, orders_));
        poly_derivatives(square, thetas_[l], std::span<double>(quadratic_).subspan(l * orders_, orders_));
      }
    }
    scratch_.resize(static_cast<std::size_t>(orders_));
  }

  int orders() const { return orders_; }
  std::size_t grid_size() const { return thetas_.size(); }
  std::size_t width() const { return thetas_.size() * static_cast<std::size_t>(orders_); }

  // out has width() entries laid out as [l * orders + k].
  void evaluate(double x_prev, double x_next, std::span<double> out) {
    const double sig = model_->diffusion(x_prev);
    if (!(sig > 0.0)) throw config_error("contrast: non-positive diffusion at x_prev");
    const double inv_var = 1.0 / (sig * sig);
    const double increment = x_next - x_prev;
    if (const auto* sep = model_->separable_form()) {
      const double g = sep->state_factor(x_prev);
      const double lin = 2.0 * g * increment * inv_var;
      const double quad = delta_ * g * g * inv_var;
      for (std::size_t c = 0; c < out.size(); ++c) out[c] = linear_[c] * lin - quadratic_[c] * quad;
      return;
    }
    for (std::size_t l = 0; l < thetas_.size(); ++l) {
      model_->drift_derivatives(thetas_[l], x_prev, scratch_);
      detail::contrast_from_drift(scratch_, increment, delta_, inv_var,
                                  out.subspan(l * orders_, static_cast<std::size_t>(orders_)));
    }
  }

 private:
  const DiffusionModel* model_;
  std::vector<double> thetas_;
  int orders_;
  double delta_;
  std::vector<double> linear_;
  std::vector<double> quadratic_;
  std::vector<double> scratch_;
};

// S_n^{N,0}(theta) = sum_i sum_j f(theta; X^i_{t_{j-1}}, X^i_{t_j}); rows are
// summed in order and combined by a pairwise tree.
inline double nonprivate_contrast(const PathPanel& panel, const DiffusionModel& model, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw config_error("contrast: theta must lie in [0, 1]");
  const double thetas[] = {theta};
  ContrastKernel kernel(model, thetas, 0, panel.grid.delta());
  std::vector<double> rows(static_cast<std::size_t>(panel.paths));
  double f = 0.0;
  for (int i = 0; i < panel.paths; ++i) {
    double acc = 0.0;
    for (int j = 1; j <= panel.steps(); ++j) {
      kernel.evaluate(panel.at(i, j - 1), panel.at(i, j), std::span<double>(&f, 1));
      acc += f;
    }
    rows[static_cast<std::size_t>(i)] = acc;
  }
  return pairwise_sum(rows);
}

}  // namespace ldpdrift
