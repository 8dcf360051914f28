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

// File formats: panels (CSV and binary), public tensors, aggregates,
// interpolant dumps and estimation results. docs/formats.md describes them.

#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ldpdrift/diffusion.hpp"
#include "ldpdrift/errors.hpp"
#include "ldpdrift/estimator.hpp"
#include "ldpdrift/privacy.hpp"
#include "ldpdrift/spline.hpp"

namespace ldpdrift::io {

// Shortest form that round-trips a double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw config_error("failed writing '" + path + "'");
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Columns i,j,t,x; rows ordered by j, then i.
inline std::string panel_to_csv(const PathPanel& panel) {
  std::string s = "i,j,t,x\n";
  for (int j = 0; j <= panel.steps(); ++j) {
    const std::string t = format_double(panel.grid.time(j));
    for (int i = 0; i < panel.paths; ++i)
      s += std::to_string(i) + "," + std::to_string(j) + "," + t + "," + format_double(panel.at(i, j)) + "\n";
  }
  return s;
}

inline constexpr char kPanelMagic[4] = {'L', 'D', 'P', 'P'};
inline constexpr std::uint32_t kPanelVersion = 1;

namespace detail {

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw config_error("binary panel: truncated file");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace detail

// Header: magic "LDPP", u32 version, i64 N, i64 n, f64 T, f64 theta_star,
// u64 seed; then N (n + 1) f64 values row by row. Host byte order.
inline std::string panel_to_binary(const PathPanel& panel) {
  std::string out(kPanelMagic, 4);
  detail::put(out, kPanelVersion);
  detail::put(out, static_cast<std::int64_t>(panel.paths));
  detail::put(out, static_cast<std::int64_t>(panel.steps()));
  detail::put(out, panel.grid.horizon());
  detail::put(out, panel.theta_star);
  detail::put(out, panel.seed);
  out.append(reinterpret_cast<const char*>(panel.data.data()), panel.data.size() * sizeof(double));
  return out;
}

inline PathPanel panel_from_binary(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kPanelMagic, 4) != 0)
    throw config_error("binary panel: bad magic (expected LDPP)");
  std::size_t pos = 4;
  const auto version = detail::get<std::uint32_t>(bytes, pos);
  if (version != kPanelVersion) throw config_error("binary panel: unsupported version " + std::to_string(version));
  const auto paths = detail::get<std::int64_t>(bytes, pos);
  const auto steps = detail::get<std::int64_t>(bytes, pos);
  const double horizon = detail::get<double>(bytes, pos);
  PathPanel panel;
  if (paths < 1 || steps < 1) throw config_error("binary panel: invalid shape");
  panel.paths = static_cast<int>(paths);
  panel.grid = TimeGrid(horizon, static_cast<int>(steps));
  panel.theta_star = detail::get<double>(bytes, pos);
  panel.seed = detail::get<std::uint64_t>(bytes, pos);
  const std::size_t count = static_cast<std::size_t>(paths) * static_cast<std::size_t>(steps + 1);
  if (bytes.size() - pos != count * sizeof(double)) throw config_error("binary panel: payload size mismatch");
  panel.data.resize(count);
  std::memcpy(panel.data.data(), bytes.data() + pos, count * sizeof(double));
  return panel;
}

inline nlohmann::json grid_to_json(const ThetaGrid& grid) {
  return {{"L", grid.size()}, {"shift", grid.shift()}, {"points", grid.points()}};
}

inline nlohmann::json public_header(const PublicPanel& pub) {
  return {{"N", pub.paths},
          {"n", pub.steps},
          {"L_n", pub.grid.size()},
          {"a", pub.a},
          {"alphas", pub.budget.alphas()},
          {"seed", pub.seed},
          {"clip_sup", pub.clip.clip_sup()},
          {"clip_kind", to_string(pub.clip.kind())},
          {"tau_n", pub.clip.tau()},
          {"noise", pub.noise},
          {"theta_grid", grid_to_json(pub.grid)},
          {"laplace_scale_by_j", pub.laplace_scale_by_j},
          {"layout", "float64, host byte order, index ((i*n + j)*L_n + l)*(a+1) + k"}};
}

inline std::string public_tensor_bytes(const PublicPanel& pub) {
  return std::string(reinterpret_cast<const char*>(pub.z.data()), pub.z.size() * sizeof(double));
}

inline std::string aggregate_to_csv(const PublicAggregate& agg) {
  std::string s = "l,k,sum_z\n";
  for (int l = 0; l < agg.grid.size(); ++l)
    for (int k = 0; k < agg.orders(); ++k)
      s += std::to_string(l) + "," + std::to_string(k) + "," + format_double(agg.at(l, k)) + "\n";
  return s;
}

// {a, Lambda, xi, coeffs[i][k]} with i = -1 .. Lambda-1 stored from index 0.
inline nlohmann::json spline_to_json(const SplineInterpolant& s) {
  nlohmann::json coeffs = nlohmann::json::array();
  for (int i = -1; i < s.knots().lambda(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k <= s.a(); ++k) row.push_back(s.coeff(i, k));
    coeffs.push_back(row);
  }
  const auto nodes = s.knots().nodes();
  return {{"a", s.a()},
          {"Lambda", s.knots().lambda()},
          {"xi", std::vector<double>(nodes.begin(), nodes.end())},
          {"coeffs", coeffs}};
}

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json result_to_json(const EstimationResult& r, const std::string& config_digest) {
  return {{"theta_hat", r.theta_hat},
          {"contrast_at_hat", r.contrast_at_hat},
          {"theta_star", optional_json(r.theta_star)},
          {"r_nN", r.r_nN},
          {"regime", to_string(r.regime)},
          {"v_n_star", optional_json(r.v_n_star)},
          {"predicted_sd_negligible", optional_json(r.predicted_sd_negligible)},
          {"predicted_sd_significant", optional_json(r.predicted_sd_significant)},
          {"theta_grid", grid_to_json(r.grid)},
          {"seed", r.seed},
          {"config_digest", config_digest}};
}

}  // namespace ldpdrift::io
