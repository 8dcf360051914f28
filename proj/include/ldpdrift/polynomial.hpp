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

// Small dense polynomial helpers. Coefficients are stored in increasing
// degree order: c[0] + c[1] x + c[2] x^2 + ...

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ldpdrift {

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

inline std::vector<double> poly_multiply(std::span<const double> p, std::span<const double> q) {
  if (p.empty() || q.empty()) return {};
  std::vector<double> r(p.size() + q.size() - 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
  return r;
}

// (x + shift)^power expanded by the binomial theorem.
inline std::vector<double> poly_shifted_power(double shift, int power) {
  std::vector<double> r(static_cast<std::size_t>(power) + 1);
  double s = 1.0;
  for (int m = power; m >= 0; --m) {
    r[static_cast<std::size_t>(m)] = binomial(power, m) * s;
    s *= shift;
  }
  return r;
}

// out[k] = d^k/dx^k p(x) for k = 0 .. out.size()-1 (Horner on each derivative).
inline void poly_derivatives(std::span<const double> coeffs, double x, std::span<double> out) {
  const int degree = static_cast<int>(coeffs.size()) - 1;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const int order = static_cast<int>(k);
    double acc = 0.0;
    for (int m = degree; m >= order; --m) {
      double falling = 1.0;
      for (int t = 0; t < order; ++t) falling *= (m - t);
      acc = acc * x + falling * coeffs[static_cast<std::size_t>(m)];
    }
    out[k] = acc;
  }
}

inline double poly_eval(std::span<const double> coeffs, double x) {
  double acc = 0.0;
  for (std::size_t m = coeffs.size(); m-- > 0;) acc = acc * x + coeffs[m];
  return acc;
}

}  // namespace ldpdrift
