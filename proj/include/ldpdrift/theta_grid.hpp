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

// Equispaced parameter grids theta_l = (l + S) / L, l = 0..L-1, with an
// optional shift S in [0, 1) drawn uniformly from a dedicated stream.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ldpdrift/errors.hpp"
#include "ldpdrift/rng.hpp"

namespace ldpdrift {

class ThetaGrid {
 public:
  ThetaGrid(int size, double shift = 0.0) : size_(size), shift_(shift) {
    if (size < 2) throw config_error("theta grid: L must be >= 2");
    if (!(shift >= 0.0 && shift < 1.0)) throw config_error("theta grid: shift must lie in [0, 1)");
    points_.resize(static_cast<std::size_t>(size));
    for (int l = 0; l < size; ++l) points_[static_cast<std::size_t>(l)] = (l + shift) / size;
  }

  // Grid with S ~ U[0, 1) drawn from the grid-shift stream of `seed`.
  static ThetaGrid random_shift(int size, std::uint64_t seed) {
    CounterStream stream(seed, stream_id(StreamTag::kGridShift, {}));
    double s = stream.uniform();
    if (s >= 1.0) s = std::nextafter(1.0, 0.0);
    return ThetaGrid(size, s);
  }

  int size() const { return size_; }
  double shift() const { return shift_; }
  double spacing() const { return 1.0 / size_; }
  const std::vector<double>& points() const { return points_; }
  double point(int l) const { return points_[static_cast<std::size_t>(l)]; }
  double lower() const { return points_.front(); }
  double upper() const { return points_.back(); }

  // l* with theta in [theta_l*, theta_l* + 1/L); theta must lie in
  // [theta_0, theta_{L-1} + 1/L).
  int cell_of(double theta) const {
    if (!(theta >= lower() && theta < (size_ + shift_) / size_))
      throw config_error("theta grid: theta* = " + std::to_string(theta) +
                         " is outside the grid coverage [" + std::to_string(lower()) + ", " +
                         std::to_string((size_ + shift_) / size_) + ")");
    int l = static_cast<int>(std::floor(theta * size_ - shift_));
    if (l > size_ - 1) l = size_ - 1;
    if (l < 0) l = 0;
    if (theta < point(l)) --l;
    return l;
  }

 private:
  int size_;
  double shift_;
  std::vector<double> points_;
};

}  // namespace ldpdrift
