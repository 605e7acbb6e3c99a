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

// Value iteration for the stopping problem on a BeliefGrid. Both the quantum
// protocol (public belief driven by agent actions) and the classical baseline
// (belief driven by raw observations) reduce to a branch table: for every grid
// point, the probability of each outcome and the belief it leads to.

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qdetect/action_kernel.hpp"
#include "qdetect/belief_grid.hpp"
#include "qdetect/csv.hpp"
#include "qdetect/detection.hpp"
#include "qdetect/error.hpp"

namespace qdetect {

struct SolverConfig {
  double tol = 1e-8;
  int max_iter = 10000;
};

struct Branch {
  double sigma;       // outcome probability
  double next_pi1;    // updated belief
  BeliefGrid::Bracket at;
};

class BranchTable {
 public:
  BranchTable(BeliefGrid grid, int outcomes)
      : grid_(grid), outcomes_(outcomes),
        branches_(static_cast<std::size_t>(grid.size()) * outcomes) {}

  const BeliefGrid& grid() const { return grid_; }
  int outcomes() const { return outcomes_; }
  const Branch& at(int i, int k) const { return branches_[index(i, k)]; }

  void set(int i, int k, double sigma, double next_pi1) {
    branches_[index(i, k)] = Branch{sigma, next_pi1, grid_.locate(next_pi1)};
  }

  // sum_k V(next_k) sigma_k with V interpolated linearly.
  double expected_next(const std::vector<double>& v, int i) const {
    double s = 0.0;
    for (int k = 0; k < outcomes_; ++k) {
      const Branch& b = at(i, k);
      if (b.sigma == 0.0) continue;
      s += b.sigma * ((1.0 - b.at.weight) * v[b.at.lower] + b.at.weight * v[b.at.lower + 1]);
    }
    return s;
  }

 private:
  std::size_t index(int i, int k) const { return static_cast<std::size_t>(i) * outcomes_ + k; }

  BeliefGrid grid_;
  int outcomes_;
  std::vector<Branch> branches_;
};

namespace detail {

inline void set_branch(BranchTable& table, int i, int k, const Eigen::Vector2d& num) {
  const double sigma = num.sum();
  if (sigma > 0.0) {
    table.set(i, k, sigma, num[0] / sigma);
  } else {
    table.set(i, k, 0.0, table.grid().point(i));
  }
}

}  // namespace detail

// Outcomes are actions: sigma-bar(pi, a) and T-bar(pi, a)(1).
inline BranchTable quantum_branches(const ActionKernel& kernel, const ChangeModel& change) {
  const BeliefGrid& grid = kernel.grid();
  BranchTable table(grid, kernel.n_actions());
  for (int i = 0; i < grid.size(); ++i) {
    const Eigen::Vector2d pred = change.predict(Eigen::Vector2d(grid.point(i), 1.0 - grid.point(i)));
    for (int a = 0; a < kernel.n_actions(); ++a) {
      detail::set_branch(table, i, a,
                         Eigen::Vector2d(kernel.r(i, 0, a) * pred[0], kernel.r(i, 1, a) * pred[1]));
    }
  }
  return table;
}

// Outcomes are observations: sigma(pi, y) and T(pi, y)(1).
inline BranchTable classical_branches(const ChangeModel& change, const ObservationModel& obs,
                                      const BeliefGrid& grid) {
  BranchTable table(grid, obs.n_obs());
  for (int i = 0; i < grid.size(); ++i) {
    const Eigen::Vector2d pi(grid.point(i), 1.0 - grid.point(i));
    for (int y = 0; y < obs.n_obs(); ++y) {
      detail::set_branch(table, i, y, private_belief_numerator(pi, y, change, obs));
    }
  }
  return table;
}

struct ValueTable {
  BeliefGrid grid;
  std::vector<double> values;
  int iterations = 0;
  double last_delta = 0.0;
  std::vector<double> deltas;  // sup-norm change per iteration

  double at(double pi1) const { return grid.interpolate(values, pi1); }
};

// u = 1 stop, u = 2 continue, per grid point.
struct Policy {
  BeliefGrid grid;
  std::vector<int> u;

  static Policy constant(const BeliefGrid& grid, int action) {
    return Policy{grid, std::vector<int>(grid.size(), action)};
  }
  bool stops(int i) const { return u[i] == 1; }
  // Nearest grid point decides off-grid beliefs.
  bool stops_at(double pi1) const { return u[grid.nearest(pi1)] == 1; }
};

struct Solution {
  ValueTable value;
  Policy policy;
};

struct ThresholdReport {
  std::optional<double> threshold;
  int crossings = 0;  // number of u changes between neighbouring grid points
};

inline ThresholdReport extract_threshold(const Policy& policy) {
  ThresholdReport rep;
  for (std::size_t i = 1; i < policy.u.size(); ++i) {
    if (policy.u[i] != policy.u[i - 1]) ++rep.crossings;
  }
  const bool last_stops = !policy.u.empty() && policy.u.back() == 1;
  if (rep.crossings == 0 && last_stops) {
    rep.threshold = 0.0;
  } else if (rep.crossings == 1 && last_stops) {
    for (std::size_t i = 0; i < policy.u.size(); ++i) {
      if (policy.u[i] == 1) {
        rep.threshold = policy.grid.point(static_cast<int>(i));
        break;
      }
    }
  }
  return rep;
}

inline Solution solve_branches(const BranchTable& branches, const DetectionCosts& costs,
                               const SolverConfig& cfg = {}) {
  if (!(cfg.tol > 0.0)) throw ConfigError("solver tolerance must be positive");
  const BeliefGrid& grid = branches.grid();
  const int n = grid.size();
  std::vector<double> v(n, 0.0), next(n, 0.0);
  std::vector<double> deltas;
  double delta = 0.0;
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    delta = 0.0;
    for (int i = 0; i < n; ++i) {
      const double pi1 = grid.point(i);
      const double q_stop = costs.stop_cost(pi1);
      const double q_cont = costs.continue_cost(pi1) + branches.expected_next(v, i);
      next[i] = std::min(q_stop, q_cont);
      delta = std::max(delta, std::abs(next[i] - v[i]));
    }
    v.swap(next);
    deltas.push_back(delta);
    if (delta <= cfg.tol) {
      Policy policy{grid, std::vector<int>(n, 2)};
      for (int i = 0; i < n; ++i) {
        const double pi1 = grid.point(i);
        const double q_cont = costs.continue_cost(pi1) + branches.expected_next(v, i);
        policy.u[i] = costs.stop_cost(pi1) <= q_cont ? 1 : 2;
      }
      return Solution{ValueTable{grid, std::move(v), iter, delta, std::move(deltas)},
                      std::move(policy)};
    }
  }
  std::ostringstream os;
  os << "value iteration did not reach tol " << cfg.tol << " within " << cfg.max_iter
     << " iterations (last delta " << delta << ")";
  throw NonConvergence(os.str(), delta);
}

inline Solution value_iteration(const ActionKernel& kernel, const ChangeModel& change,
                                const DetectionCosts& costs, const SolverConfig& cfg = {}) {
  return solve_branches(quantum_branches(kernel, change), costs, cfg);
}

inline Solution classical_value_iteration(const ChangeModel& change, const ObservationModel& obs,
                                          const DetectionCosts& costs, const BeliefGrid& grid,
                                          const SolverConfig& cfg = {}) {
  return solve_branches(classical_branches(change, obs, grid), costs, cfg);
}

// Fixed-point cost of a given policy: V = C(pi, u(pi)) + [u = 2] E V(next).
inline ValueTable evaluate_branches(const BranchTable& branches, const DetectionCosts& costs,
                                    const Policy& policy, const SolverConfig& cfg = {}) {
  const BeliefGrid& grid = branches.grid();
  if (!(policy.grid == grid)) throw ConfigError("policy grid differs from the model grid");
  const int n = grid.size();
  std::vector<double> v(n, 0.0), next(n, 0.0);
  std::vector<double> deltas;
  double delta = 0.0;
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    delta = 0.0;
    for (int i = 0; i < n; ++i) {
      const double pi1 = grid.point(i);
      next[i] = policy.stops(i) ? costs.stop_cost(pi1)
                                : costs.continue_cost(pi1) + branches.expected_next(v, i);
      delta = std::max(delta, std::abs(next[i] - v[i]));
    }
    v.swap(next);
    deltas.push_back(delta);
    if (delta <= cfg.tol) return ValueTable{grid, std::move(v), iter, delta, std::move(deltas)};
  }
  std::ostringstream os;
  os << "policy evaluation did not reach tol " << cfg.tol << " within " << cfg.max_iter
     << " iterations (last delta " << delta << ")";
  throw NonConvergence(os.str(), delta);
}

inline ValueTable evaluate_policy(const ActionKernel& kernel, const ChangeModel& change,
                                  const DetectionCosts& costs, const Policy& policy,
                                  const SolverConfig& cfg = {}) {
  return evaluate_branches(quantum_branches(kernel, change), costs, policy, cfg);
}

// CSV layouts: value.csv is pi1,V and policy.csv is pi1,u.
inline std::string value_to_csv(const ValueTable& value, const std::string& config_hash) {
  std::string out = "# qdetect value config_hash=" + config_hash +
                    " grid=" + std::to_string(value.grid.intervals()) +
                    " iterations=" + std::to_string(value.iterations) + "\npi1,V\n";
  for (int i = 0; i < value.grid.size(); ++i) {
    out += csv::num(value.grid.point(i)) + ',' + csv::num(value.values[i]) + '\n';
  }
  return out;
}

inline std::string policy_to_csv(const Policy& policy, const std::string& config_hash) {
  const ThresholdReport thr = extract_threshold(policy);
  std::string out = "# qdetect policy config_hash=" + config_hash +
                    " grid=" + std::to_string(policy.grid.intervals()) +
                    " threshold=" + (thr.threshold ? csv::num(*thr.threshold) : "none") +
                    " crossings=" + std::to_string(thr.crossings) + "\npi1,u\n";
  for (int i = 0; i < policy.grid.size(); ++i) {
    out += csv::num(policy.grid.point(i)) + ',' + std::to_string(policy.u[i]) + '\n';
  }
  return out;
}

namespace detail {

inline BeliefGrid cached_grid(const csv::Table& table, const std::string& expected_hash,
                              const char* what) {
  const std::string hash = csv::comment_value(table, "config_hash");
  if (hash != expected_hash) {
    throw CacheMiss(std::string(what) + " cache hash '" + hash + "' does not match '" +
                    expected_hash + "'");
  }
  const BeliefGrid grid(std::stoi(csv::comment_value(table, "grid")));
  if (table.rows.size() != static_cast<std::size_t>(grid.size())) {
    throw CacheMiss(std::string(what) + " cache has an unexpected row count");
  }
  return grid;
}

}  // namespace detail

inline ValueTable value_from_csv(const csv::Table& table, const std::string& expected_hash) {
  const BeliefGrid grid = detail::cached_grid(table, expected_hash, "value");
  ValueTable value{grid, std::vector<double>(grid.size(), 0.0), 0, 0.0, {}};
  value.iterations = std::stoi(csv::comment_value(table, "iterations"));
  const auto c_pi = table.column("pi1");
  const auto c_v = table.column("V");
  for (const auto& row : table.rows) {
    value.values[grid.nearest(csv::to_double(row[c_pi]))] = csv::to_double(row[c_v]);
  }
  return value;
}

inline Policy policy_from_csv(const csv::Table& table, const std::string& expected_hash) {
  const BeliefGrid grid = detail::cached_grid(table, expected_hash, "policy");
  Policy policy{grid, std::vector<int>(grid.size(), 2)};
  const auto c_pi = table.column("pi1");
  const auto c_u = table.column("u");
  for (const auto& row : table.rows) {
    const int u = std::stoi(row[c_u]);
    if (u != 1 && u != 2) throw CacheMiss("policy cache holds an action other than 1 or 2");
    policy.u[grid.nearest(csv::to_double(row[c_pi]))] = u;
  }
  return policy;
}

}  // namespace qdetect
