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

// Change model, sensor observations and the sensor's private filter. State 1
// (index 0) is the absorbing post-change state, state 2 (index 1) the
// pre-change state; the chain starts at pi0 = (0, 1).

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

#include "qdetect/decision_model.hpp"
#include "qdetect/error.hpp"

namespace qdetect {

class ChangeModel {
 public:
  // p is the per-step probability of staying in the pre-change state.
  static ChangeModel with_persistence(double p) { return ChangeModel(p); }
  // q is the per-step probability of jumping to the post-change state.
  static ChangeModel with_change_probability(double q) { return ChangeModel(1.0 - q); }

  double persistence() const { return p_; }
  double change_probability() const { return 1.0 - p_; }

  // P = [[1, 0], [1 - p, p]].
  Eigen::Matrix2d transition() const {
    Eigen::Matrix2d m;
    m << 1.0, 0.0,
         1.0 - p_, p_;
    return m;
  }

  BeliefVector initial_belief() const { return BeliefVector::unit(2, 1); }

  // P' pi.
  Eigen::Vector2d predict(const Eigen::Vector2d& pi) const {
    return {pi[0] + (1.0 - p_) * pi[1], p_ * pi[1]};
  }
  Eigen::Vector2d predict(const BeliefVector& pi) const {
    return predict(Eigen::Vector2d(pi[0], pi[1]));
  }

  // E[tau0] when tau0 is the first epoch n >= 1 spent in the post-change state.
  double expected_change_time() const { return 1.0 / (1.0 - p_); }

 private:
  explicit ChangeModel(double p) : p_(p) {
    if (!(p >= 0.0 && p < 1.0)) {
      std::ostringstream os;
      os << "persistence must lie in [0,1), got " << p;
      throw ConfigError(os.str());
    }
  }
  double p_;
};

class ObservationModel {
 public:
  static constexpr double kRowTolerance = 1e-12;

  // b(x, y) = p(y | x), 2 x n_obs.
  explicit ObservationModel(Eigen::MatrixXd b) : b_(std::move(b)) {
    if (b_.rows() != 2 || b_.cols() < 1) {
      throw ConfigError("observation table must have 2 rows and at least one column");
    }
    for (int x = 0; x < 2; ++x) {
      for (Eigen::Index y = 0; y < b_.cols(); ++y) {
        if (!(b_(x, y) >= 0.0) || !std::isfinite(b_(x, y))) {
          throw ConfigError("observation probabilities must be finite and nonnegative");
        }
      }
      if (std::abs(b_.row(x).sum() - 1.0) > kRowTolerance) {
        std::ostringstream os;
        os.precision(17);
        os << "observation row " << x << " sums to " << b_.row(x).sum();
        throw ConfigError(os.str());
      }
    }
  }

  int n_obs() const { return static_cast<int>(b_.cols()); }
  double likelihood(int x, int y) const { return b_(x, y); }
  const Eigen::MatrixXd& table() const { return b_; }

 private:
  Eigen::MatrixXd b_;
};

class DetectionCosts {
 public:
  DetectionCosts(double false_alarm, double delay) : f_(false_alarm), d_(delay) {
    if (!(false_alarm >= 0.0) || !(delay >= 0.0) || !std::isfinite(false_alarm) ||
        !std::isfinite(delay)) {
      std::ostringstream os;
      os << "costs must be finite and nonnegative: f=" << false_alarm << " d=" << delay;
      throw ConfigError(os.str());
    }
  }

  double false_alarm() const { return f_; }
  double delay() const { return d_; }
  double stop_cost(double pi1) const { return f_ * (1.0 - pi1); }
  double continue_cost(double pi1) const { return d_ * pi1; }

 private:
  double f_;
  double d_;
};

// B_y P' pi, the unnormalized private posterior.
inline Eigen::Vector2d private_belief_numerator(const Eigen::Vector2d& pi, int y,
                                                const ChangeModel& change,
                                                const ObservationModel& obs) {
  if (y < 0 || y >= obs.n_obs()) {
    std::ostringstream os;
    os << "observation index " << y << " outside [0," << obs.n_obs() << ")";
    throw ConfigError(os.str());
  }
  const Eigen::Vector2d pred = change.predict(pi);
  return {obs.likelihood(0, y) * pred[0], obs.likelihood(1, y) * pred[1]};
}

// sigma(pi, y) = 1' B_y P' pi.
inline double observation_probability(const Eigen::Vector2d& pi, int y, const ChangeModel& change,
                                      const ObservationModel& obs) {
  return private_belief_numerator(pi, y, change, obs).sum();
}

// T(pi, y) = B_y P' pi / sigma(pi, y).
inline BeliefVector private_belief_update(const BeliefVector& pi, int y, const ChangeModel& change,
                                          const ObservationModel& obs) {
  const Eigen::Vector2d num =
      private_belief_numerator(Eigen::Vector2d(pi[0], pi[1]), y, change, obs);
  const double sigma = num.sum();
  if (!(sigma > 0.0)) {
    std::ostringstream os;
    os << "observation y=" << y << " has zero probability under belief pi1=" << pi[0];
    throw ImpossibleObservation(os.str());
  }
  return BeliefVector::normalized(num / sigma);
}

}  // namespace qdetect
