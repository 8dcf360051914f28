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

#include "ldpdrift/io.hpp"

#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "ldpdrift/estimator.hpp"

namespace ldpdrift::io {
namespace {

PathPanel small_panel() {
  const auto model = make_model({"sine", 1.0, 0.0, {}});
  return simulate_panel(model, 0.4, 3, TimeGrid(2.0, 5), InitialLaw::gaussian(0.0, 1.0), 77);
}

TEST(PanelIoTest, BinaryRoundTripIsExact) {
  const auto panel = small_panel();
  const auto back = panel_from_binary(panel_to_binary(panel));
  EXPECT_EQ(back.paths, panel.paths);
  EXPECT_EQ(back.steps(), panel.steps());
  EXPECT_EQ(back.grid.horizon(), 2.0);
  EXPECT_EQ(back.theta_star, 0.4);
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.data, panel.data);
}

TEST(PanelIoTest, BinaryRejectsCorruption) {
  auto bytes = panel_to_binary(small_panel());
  EXPECT_THROW(panel_from_binary(bytes.substr(0, bytes.size() - 1)), config_error);
  EXPECT_THROW(panel_from_binary(bytes.substr(0, 10)), config_error);
  bytes[0] = 'X';
  EXPECT_THROW(panel_from_binary(bytes), config_error);
}

TEST(PanelIoTest, CsvRoundTripsValues) {
  const auto panel = small_panel();
  std::istringstream in(panel_to_csv(panel));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "i,j,t,x");
  int rows = 0;
  while (std::getline(in, line)) {
    int i = 0, j = 0;
    double t = 0, x = 0;
    ASSERT_EQ(std::sscanf(line.c_str(), "%d,%d,%lf,%lf", &i, &j, &t, &x), 4);
    EXPECT_EQ(x, panel.at(i, j));
    EXPECT_DOUBLE_EQ(t, j * panel.grid.delta());
    ++rows;
  }
  EXPECT_EQ(rows, 3 * 6);
}

TEST(PublicIoTest, HeaderAggregateAndSpline) {
  const auto panel = small_panel();
  const auto model = make_model({"sine", 1.0, 0.0, {}});
  const ThetaGrid grid(4, 0.0);
  const auto pub = privatize(panel, model, grid, PrivacyBudget::constant(5, 1.0), 2, 3);
  const auto header = public_header(pub);
  EXPECT_EQ(header["N"], 3);
  EXPECT_EQ(header["n"], 5);
  EXPECT_EQ(header["L_n"], 4);
  EXPECT_EQ(header["a"], 2);
  EXPECT_EQ(header["seed"], 3);
  EXPECT_EQ(header["alphas"].size(), 5u);
  EXPECT_DOUBLE_EQ(header["clip_sup"].get<double>(), pub.clip.clip_sup());
  EXPECT_EQ(public_tensor_bytes(pub).size(), 3u * 5u * 4u * 3u * sizeof(double));

  const auto agg = aggregate_public(pub);
  const std::string csv = aggregate_to_csv(agg);
  EXPECT_EQ(csv.substr(0, 10), "l,k,sum_z\n");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 4 * 3);

  const auto spline = spline_to_json(build_public_contrast(agg));
  EXPECT_EQ(spline["a"], 2);
  EXPECT_EQ(spline["Lambda"], 3);
  EXPECT_EQ(spline["xi"].size(), 4u);
  EXPECT_EQ(spline["coeffs"].size(), 4u);
  EXPECT_EQ(spline["coeffs"][0].size(), 3u);
}

TEST(FormatTest, ShortestExactRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678901234567}) EXPECT_EQ(std::stod(format_double(v)), v);
}

}  // namespace
}  // namespace ldpdrift::io
