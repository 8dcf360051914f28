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

// Hermite interpolation with B-splines of degree p = 2a + 1 on a knot
// vector in which every interpolation point has multiplicity a + 1 (the
// end points 2(a + 1)). The interpolant matches values and the first a
// derivatives at every node and is C^a between the end points.
//
// Basis functions are indexed either globally (h = 0 .. (a+1)(Lambda+1)-1)
// or by start position and shape, B_i^k with i = -1 .. Lambda-1 and
// k = 0 .. a, where h = (i + 1)(a + 1) + k. B_i^k is supported on
// [xi_i, xi_{i+2}] and its coefficient depends only on the data at xi_{i+1}.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ldpdrift/errors.hpp"
#include "ldpdrift/polynomial.hpp"

namespace ldpdrift {

enum class EndpointRule {
  kHalfOpen,         // order-0 pieces are 1 on [t_h, t_{h+1})
  kLeftLimitAtEnd,   // additionally take the left limit at the window's last knot
};

namespace detail {

inline double bspline_recursive(std::span<const double> w, double x, int degree, int order,
                                EndpointRule rule, double end) {
  if (w[static_cast<std::size_t>(degree) + 1] == w[0]) return 0.0;
  if (degree == 0) {
    if (order > 0) return 0.0;
    if (w[0] <= x && x < w[1]) return 1.0;
    if (rule == EndpointRule::kLeftLimitAtEnd && x == w[1] && w[1] == end && w[0] < w[1]) return 1.0;
    return 0.0;
  }
  const auto p = static_cast<std::size_t>(degree);
  const double left_span = w[p] - w[0];
  const double right_span = w[p + 1] - w[1];
  const auto head = w.first(p + 1);
  const auto tail = w.subspan(1, p + 1);
  if (order == 0) {
    double v = 0.0;
    if (left_span > 0.0) v += (x - w[0]) / left_span * bspline_recursive(head, x, degree - 1, 0, rule, end);
    if (right_span > 0.0) v += (w[p + 1] - x) / right_span * bspline_recursive(tail, x, degree - 1, 0, rule, end);
    return v;
  }
  // B' = p [B_{h,p-1} / (t_{h+p} - t_h) - B_{h+1,p-1} / (t_{h+p+1} - t_{h+1})]
  double v = 0.0;
  if (left_span > 0.0) v += bspline_recursive(head, x, degree - 1, order - 1, rule, end) / left_span;
  if (right_span > 0.0) v -= bspline_recursive(tail, x, degree - 1, order - 1, rule, end) / right_span;
  return degree * v;
}

}  // namespace detail

// Value of the m-th derivative of the B-spline defined by the p + 2 knots in
// `window` (degree p = window.size() - 2), by the Cox-de Boor recursion.
// Zero outside [t_h, t_{h+p+1}]; terms with a vanishing knot span are zero.
inline double bspline_eval(std::span<const double> window, double x, int derivative_order,
                           EndpointRule rule = EndpointRule::kHalfOpen) {
  if (window.size() < 2) throw config_error("bspline_eval: need at least two knots");
  for (std::size_t i = 1; i < window.size(); ++i)
    if (window[i] < window[i - 1]) throw config_error("bspline_eval: knots must be non-decreasing");
  const int degree = static_cast<int>(window.size()) - 2;
  if (derivative_order < 0 || derivative_order > degree)
    throw config_error("bspline_eval: unsupported derivative order " + std::to_string(derivative_order));
  return detail::bspline_recursive(window, x, degree, derivative_order, rule, window.back());
}

// Knots of the normalized piece Bbar_k on {0, 1, 2}: 0 repeated a+1-k times,
// 1 repeated a+1 times and 2 repeated k+1 times. On a uniform grid with
// spacing h, B_l^k(x) = Bbar_k((x - xi_l) / h).
inline std::vector<double> normalized_basis_knots(int k, int a) {
  std::vector<double> w;
  w.insert(w.end(), static_cast<std::size_t>(a + 1 - k), 0.0);
  w.insert(w.end(), static_cast<std::size_t>(a + 1), 1.0);
  w.insert(w.end(), static_cast<std::size_t>(k + 1), 2.0);
  return w;
}

// Interpolation points xi_0 < ... < xi_Lambda with uniform spacing and the
// associated expanded knot sequence of length (a + 1)(Lambda + 3).
class KnotVector {
 public:
  KnotVector(double xi0, double spacing, int lambda, int a) : a_(a) {
    if (!(spacing > 0.0)) throw config_error("knots: spacing must be positive");
    init_nodes(lambda, [&](int l) { return xi0 + l * spacing; });
  }

  // Nodes given explicitly (e.g. a shifted parameter grid); must be strictly
  // increasing and uniformly spaced to 1e-9 relative.
  static KnotVector from_nodes(std::span<const double> nodes, int a) {
    if (nodes.size() < 2) throw config_error("knots: need at least two interpolation points");
    const double h = (nodes.back() - nodes.front()) / static_cast<double>(nodes.size() - 1);
    for (std::size_t l = 1; l < nodes.size(); ++l) {
      if (!(nodes[l] > nodes[l - 1])) throw config_error("knots: nodes must be strictly increasing");
      if (std::abs(nodes[l] - nodes[l - 1] - h) > 1e-9 * h)
        throw config_error("knots: nodes must be uniformly spaced");
    }
    return KnotVector(nodes, a);
  }

  int a() const { return a_; }
  int degree() const { return 2 * a_ + 1; }
  int lambda() const { return static_cast<int>(nodes_.size()) - 1; }
  double spacing() const { return (nodes_.back() - nodes_.front()) / lambda(); }
  std::span<const double> nodes() const { return nodes_; }
  double node(int l) const { return nodes_[static_cast<std::size_t>(std::clamp(l, 0, lambda()))]; }
  double front() const { return nodes_.front(); }
  double back() const { return nodes_.back(); }
  std::span<const double> expanded() const { return expanded_; }
  int basis_count() const { return (a_ + 1) * (lambda() + 1); }

  // The p + 2 knots of global basis function h.
  std::span<const double> window(int h) const {
    return std::span<const double>(expanded_).subspan(static_cast<std::size_t>(h),
                                                      static_cast<std::size_t>(degree()) + 2);
  }

  // Interval l with x in [xi_l, xi_{l+1}); the last interval is closed.
  int interval_of(double x) const {
    const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
    const int l = static_cast<int>(it - nodes_.begin()) - 1;
    return std::clamp(l, 0, lambda() - 1);
  }

 private:
  KnotVector(std::span<const double> nodes, int a) : a_(a) {
    init_nodes(static_cast<int>(nodes.size()) - 1, [&](int l) { return nodes[static_cast<std::size_t>(l)]; });
  }

  template <typename NodeAt>
  void init_nodes(int lambda, NodeAt&& node_at) {
    if (a_ < 1) throw config_error("knots: Hermite order a must be >= 1");
    if (lambda < 1) throw config_error("knots: need Lambda >= 1 intervals");
    nodes_.resize(static_cast<std::size_t>(lambda) + 1);
    for (int l = 0; l <= lambda; ++l) nodes_[static_cast<std::size_t>(l)] = node_at(l);
    expanded_.clear();
    for (int l = -1; l <= lambda + 1; ++l)
      expanded_.insert(expanded_.end(), static_cast<std::size_t>(a_ + 1), node(l));
  }

  int a_;
  std::vector<double> nodes_;
  std::vector<double> expanded_;
};

namespace detail {

// Derivatives 0..n of the p + 1 basis functions that are non-zero on knot
// span s (t[s] < t[s+1]); ders[k * (p + 1) + r] is the k-th derivative of
// N_{s-p+r}. Piegl & Tiller, The NURBS Book, algorithm A2.3.
inline void basis_derivatives(std::span<const double> t, int s, double x, int p, int n,
                              std::vector<double>& ders) {
  const auto P = static_cast<std::size_t>(p) + 1;
  std::vector<double> ndu(P * P), left(P), right(P), a(2 * P);
  auto NDU = [&](int r, int c) -> double& { return ndu[static_cast<std::size_t>(r) * P + static_cast<std::size_t>(c)]; };
  auto A = [&](int r, int c) -> double& { return a[static_cast<std::size_t>(r) * P + static_cast<std::size_t>(c)]; };
  NDU(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[static_cast<std::size_t>(j)] = x - t[static_cast<std::size_t>(s + 1 - j)];
    right[static_cast<std::size_t>(j)] = t[static_cast<std::size_t>(s + j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      NDU(j, r) = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      const double temp = NDU(r, j - 1) / NDU(j, r);
      NDU(r, j) = saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    NDU(j, j) = saved;
  }
  ders.assign(static_cast<std::size_t>(n + 1) * P, 0.0);
  auto D = [&](int k, int r) -> double& { return ders[static_cast<std::size_t>(k) * P + static_cast<std::size_t>(r)]; };
  for (int r = 0; r <= p; ++r) D(0, r) = NDU(r, p);
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    A(0, 0) = 1.0;
    for (int k = 1; k <= n; ++k) {
      double d = 0.0;
      const int rk = r - k, pk = p - k;
      if (r >= k) {
        A(s2, 0) = A(s1, 0) / NDU(pk + 1, rk);
        d = A(s2, 0) * NDU(rk, pk);
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        A(s2, j) = (A(s1, j) - A(s1, j - 1)) / NDU(pk + 1, rk + j);
        d += A(s2, j) * NDU(rk + j, pk);
      }
      if (r <= pk) {
        A(s2, k) = -A(s1, k - 1) / NDU(pk + 1, r);
        d += A(s2, k) * NDU(r, pk);
      }
      D(k, r) = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= n; ++k) {
    for (int r = 0; r <= p; ++r) D(k, r) *= factor;
    factor *= (p - k);
  }
}

}  // namespace detail

// sum_{i,k} c_i^k B_i^k restricted to [xi_0, xi_Lambda], left-continuous at
// xi_Lambda and zero outside the domain.
class SplineInterpolant {
 public:
  SplineInterpolant(KnotVector knots, std::vector<double> coeffs)
      : knots_(std::move(knots)), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != static_cast<std::size_t>(knots_.basis_count()))
      throw config_error("spline: coefficient count does not match the knot vector");
  }

  const KnotVector& knots() const { return knots_; }
  int a() const { return knots_.a(); }
  int degree() const { return knots_.degree(); }
  std::span<const double> coeffs() const { return coeffs_; }
  double coeff(int i, int k) const { return coeffs_[static_cast<std::size_t>((i + 1) * (a() + 1) + k)]; }
  double lower() const { return knots_.front(); }
  double upper() const { return knots_.back(); }

  // Derivatives 0..max_order at x into out[0..max_order]. Orders above a are
  // piecewise (taken within the interval containing x). Returns false and
  // zeros when x is outside the domain.
  bool derivatives(double x, int max_order, std::span<double> out) const {
    if (max_order < 0 || max_order > degree())
      throw config_error("spline: unsupported derivative order " + std::to_string(max_order));
    std::fill(out.begin(), out.begin() + max_order + 1, 0.0);
    if (!(x >= lower() && x <= upper())) return false;
    const int l = knots_.interval_of(x);
    const int p = degree();
    const int span = (a() + 1) * (l + 2) - 1;
    detail::basis_derivatives(knots_.expanded(), span, x, p, max_order, scratch_);
    const int first = span - p;
    for (int k = 0; k <= max_order; ++k) {
      double acc = 0.0;
      for (int r = 0; r <= p; ++r)
        acc += coeffs_[static_cast<std::size_t>(first + r)] * scratch_[static_cast<std::size_t>(k * (p + 1) + r)];
      out[static_cast<std::size_t>(k)] = acc;
    }
    return true;
  }

  double evaluate(double x, int order = 0) const {
    std::vector<double> d(static_cast<std::size_t>(order) + 1);
    derivatives(x, order, d);
    return d.back();
  }

 private:
  KnotVector knots_;
  std::vector<double> coeffs_;
  mutable std::vector<double> scratch_;
};

// Weight of the v-th derivative datum at xi_{i+1} in c_i^k:
//   (-1)^v (g_i^k)^{(p-v)}(xi_{i+1}),
//   g_i^k(x) = (x - xi_i)^{a-k} (x - xi_{i+1})^{a+1} (x - xi_{i+2})^k / p!.
// With u = x - xi_{i+1} the (p-v)-th derivative at u = 0 is
// (p-v)!/p! times the u^{a-v} coefficient of (u + d1)^{a-k} (u - d2)^k.
inline double hermite_dual_weight(int a, int k, int v, double d1, double d2) {
  const int p = 2 * a + 1;
  const auto q = poly_multiply(poly_shifted_power(d1, a - k), poly_shifted_power(-d2, k));
  const double coeff = q[static_cast<std::size_t>(a - v)];
  const double sign = (v % 2 == 0) ? 1.0 : -1.0;
  return sign * factorial(p - v) / factorial(p) * coeff;
}

// data[l * (a + 1) + v] is the prescribed v-th derivative at xi_l.
inline SplineInterpolant hermite_interpolate(std::span<const double> data, const KnotVector& knots) {
  const int a = knots.a();
  const int lambda = knots.lambda();
  const auto width = static_cast<std::size_t>(a + 1);
  if (data.size() != static_cast<std::size_t>(lambda + 1) * width)
    throw config_error("hermite_interpolate: data shape " + std::to_string(data.size()) +
                       " does not match (Lambda+1)(a+1) = " +
                       std::to_string(static_cast<std::size_t>(lambda + 1) * width));
  std::vector<double> coeffs(static_cast<std::size_t>(knots.basis_count()), 0.0);
  std::vector<double> weights(width * width);
  for (int i = -1; i <= lambda - 1; ++i) {
    const double d1 = knots.node(i + 1) - knots.node(i);
    const double d2 = knots.node(i + 2) - knots.node(i + 1);
    const auto node_data = data.subspan(static_cast<std::size_t>(i + 1) * width, width);
    for (int k = 0; k <= a; ++k) {
      double c = 0.0;
      for (int v = 0; v <= a; ++v) c += hermite_dual_weight(a, k, v, d1, d2) * node_data[static_cast<std::size_t>(v)];
      coeffs[static_cast<std::size_t>(i + 1) * width + static_cast<std::size_t>(k)] = c;
    }
  }
  return SplineInterpolant(knots, std::move(coeffs));
}

// Dense-sample estimate of sup |d^u H(x)| over the domain; knots are
// included from both sides.
inline double interpolant_derivative_sup(const SplineInterpolant& interp, int order,
                                         int samples_per_interval = 256) {
  if (order < 0 || order > interp.a())
    throw config_error("interpolant_derivative_sup: order must be in [0, a]");
  const auto& knots = interp.knots();
  std::vector<double> d(static_cast<std::size_t>(order) + 1);
  double sup = 0.0;
  for (int l = 0; l < knots.lambda(); ++l) {
    const double x0 = knots.node(l), x1 = knots.node(l + 1);
    for (int s = 0; s <= samples_per_interval; ++s) {
      double x = x0 + (x1 - x0) * s / samples_per_interval;
      if (s == samples_per_interval && l + 1 < knots.lambda()) x = std::nextafter(x1, x0);
      interp.derivatives(x, order, d);
      sup = std::max(sup, std::abs(d.back()));
    }
  }
  return sup;
}

// sum_k Bbar_k'(x) = (2a+1) C(2a,a) [x^a (1-x)^a 1_[0,1] - (x-1)^a (2-x)^a 1_[1,2]].
inline double gsum_closed_form(double x, int a) {
  const double scale = (2 * a + 1) * binomial(2 * a, a);
  if (x >= 0.0 && x <= 1.0) return scale * std::pow(x, a) * std::pow(1.0 - x, a);
  if (x > 1.0 && x <= 2.0) return -scale * std::pow(x - 1.0, a) * std::pow(2.0 - x, a);
  return 0.0;
}

// vbar(s) = (2a+1)^2 C(2a,a)^2 s^{2a} (1-s)^{2a}, s in [0, 1].
inline double vbar(double s, int a) {
  if (!(s >= 0.0 && s <= 1.0)) throw config_error("vbar: s must lie in [0, 1]");
  const double scale = (2 * a + 1) * binomial(2 * a, a);
  return scale * scale * std::pow(s, 2 * a) * std::pow(1.0 - s, 2 * a);
}

// E[vbar(U)] for U uniform on (0, 1): (2a+1)^2 C(2a,a)^2 B(2a+1, 2a+1).
inline double vbar_mean(int a) {
  const double scale = (2 * a + 1) * binomial(2 * a, a);
  return scale * scale * factorial(2 * a) * factorial(2 * a) / factorial(4 * a + 1);
}

}  // namespace ldpdrift
