// Copyright 2026 The qdetect Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "qdetect/error.hpp"

namespace qdetect {

// Uniform grid pi(1) = i / N, i = 0..N, over the two-state belief simplex.
class BeliefGrid {
 public:
  static constexpr int kDefaultIntervals = 1000;

  explicit BeliefGrid(int intervals = kDefaultIntervals) : n_(intervals) {
    if (intervals < 1) {
      std::ostringstream os;
      os << "belief grid needs at least one interval, got " << intervals;
      throw ConfigError(os.str());
    }
  }

  int intervals() const { return n_; }
  int size() const { return n_ + 1; }
  double point(int i) const { return static_cast<double>(i) / n_; }

  struct Bracket {
    int lower;      // grid index at or below pi1
    double weight;  // weight on lower + 1, in [0, 1]
  };

  Bracket locate(double pi1) const {
    const double x = std::clamp(pi1, 0.0, 1.0) * n_;
    int lower = static_cast<int>(std::floor(x));
    if (lower >= n_) return {n_ - 1, 1.0};
    return {lower, x - lower};
  }

  int nearest(double pi1) const {
    return static_cast<int>(std::lround(std::clamp(pi1, 0.0, 1.0) * n_));
  }

  double interpolate(const std::vector<double>& values, double pi1) const {
    const Bracket b = locate(pi1);
    return (1.0 - b.weight) * values[b.lower] + b.weight * values[b.lower + 1];
  }

  friend bool operator==(const BeliefGrid&, const BeliefGrid&) = default;

 private:
  int n_;
};

}  // namespace qdetect
