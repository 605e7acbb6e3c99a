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

// KL-based distance between a true and an estimated action kernel and the
// resulting bound on the cost of acting on the estimated model.

#include <cmath>
#include <limits>
#include <vector>

#include "qdetect/action_kernel.hpp"
#include "qdetect/decision_model.hpp"
#include "qdetect/detection.hpp"
#include "qdetect/error.hpp"
#include "qdetect/stopping_solver.hpp"

namespace qdetect {

// D(p || q) with 0 log 0 = 0; +inf when q(a) = 0 < p(a).
template <typename P, typename Q>
double kl_divergence(const P& p, const Q& q, int n) {
  double s = 0.0;
  for (int a = 0; a < n; ++a) {
    if (p[a] <= 0.0) continue;
    if (q[a] <= 0.0) return std::numeric_limits<double>::infinity();
    s += p[a] * std::log(p[a] / q[a]);
  }
  return std::max(0.0, s);
}

struct DistanceReport {
  double value = 0.0;
  bool infinite = false;
  int argmax = 0;  // grid index attaining the supremum
};

// sqrt(2) sup_pi max_i sum_j P_ij sqrt(D(R_{j,pi} || R-hat_{j,pi})).
inline DistanceReport model_distance(const ActionKernel& kernel, const ActionKernel& kernel_hat,
                                     const ChangeModel& change) {
  if (!(kernel.grid() == kernel_hat.grid()) || kernel.n_actions() != kernel_hat.n_actions()) {
    throw ConfigError("kernels must share grid and action set");
  }
  const Eigen::Matrix2d p = change.transition();
  const int na = kernel.n_actions();
  DistanceReport rep;
  std::vector<double> rj(na), qj(na);
  for (int i = 0; i < kernel.grid().size(); ++i) {
    double root_kl[2];
    for (int j = 0; j < 2; ++j) {
      for (int a = 0; a < na; ++a) {
        rj[a] = kernel.r(i, j, a);
        qj[a] = kernel_hat.r(i, j, a);
      }
      root_kl[j] = std::sqrt(kl_divergence(rj, qj, na));
    }
    for (int row = 0; row < 2; ++row) {
      double s = 0.0;
      for (int j = 0; j < 2; ++j) {
        if (p(row, j) != 0.0) s += p(row, j) * root_kl[j];
      }
      const double d = std::sqrt(2.0) * s;
      if (std::isinf(d) && !rep.infinite) {
        rep.infinite = true;
        rep.value = d;
        rep.argmax = i;
      } else if (!rep.infinite && d > rep.value) {
        rep.value = d;
        rep.argmax = i;
      }
    }
  }
  return rep;
}

// K = max_{i,u} C(e_i, u) / p with p the persistence.
inline double sensitivity_constant(const ChangeModel& change, const DetectionCosts& costs) {
  if (change.persistence() <= 0.0) return std::numeric_limits<double>::infinity();
  return std::max(costs.false_alarm(), costs.delay()) / change.persistence();
}

struct KLBoundReport {
  double k = 0.0;
  DistanceReport distance;
  std::vector<double> lhs;     // J of the estimated-model policy on the true model
  std::vector<double> j_true;  // optimal cost on the true model
  std::vector<double> rhs;     // j_true + 2 K distance
  double worst_slack = std::numeric_limits<double>::infinity();  // min(rhs - lhs)
  int worst_index = 0;
  Solution true_solution;
  Solution estimated_solution;
};

inline KLBoundReport sensitivity_bound_check(const ActionKernel& kernel,
                                             const ActionKernel& kernel_hat,
                                             const ChangeModel& change,
                                             const DetectionCosts& costs,
                                             const SolverConfig& cfg = {}) {
  KLBoundReport rep;
  rep.k = sensitivity_constant(change, costs);
  rep.distance = model_distance(kernel, kernel_hat, change);
  rep.true_solution = value_iteration(kernel, change, costs, cfg);
  rep.estimated_solution = value_iteration(kernel_hat, change, costs, cfg);
  const ValueTable cross = evaluate_policy(kernel, change, costs, rep.estimated_solution.policy, cfg);
  rep.lhs = cross.values;
  rep.j_true = rep.true_solution.value.values;
  const double margin = rep.distance.value == 0.0 ? 0.0 : 2.0 * rep.k * rep.distance.value;
  rep.rhs.resize(rep.lhs.size());
  for (std::size_t i = 0; i < rep.lhs.size(); ++i) {
    rep.rhs[i] = rep.j_true[i] + margin;
    const double slack = rep.rhs[i] - rep.lhs[i];
    if (slack < rep.worst_slack) {
      rep.worst_slack = slack;
      rep.worst_index = static_cast<int>(i);
    }
  }
  return rep;
}

inline KLBoundReport sensitivity_bound_check(const DecisionFrame& frame, const PsychParams& truth,
                                             const ParameterMixture& mixture,
                                             const ChangeModel& change,
                                             const ObservationModel& obs,
                                             const DetectionCosts& costs, const BeliefGrid& grid,
                                             const SolverConfig& cfg = {},
                                             const SteadyStateConfig& ss = {}) {
  const ActionKernel kernel = build_action_kernel(frame, truth, change, obs, grid, ss);
  const ActionKernel kernel_hat = build_mismatched_kernel(frame, mixture, change, obs, grid, ss);
  return sensitivity_bound_check(kernel, kernel_hat, change, costs, cfg);
}

}  // namespace qdetect
