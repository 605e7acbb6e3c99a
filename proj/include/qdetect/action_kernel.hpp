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

// Detector-side likelihoods R_{x,pi}(a) = sum_y Gamma_y^pi(a) B_{x,y}, where
// Gamma_y^pi is the agent's steady-state action distribution at the private
// belief T(pi, y). Tabulated on a BeliefGrid and interpolated linearly in pi(1).

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qdetect/belief_grid.hpp"
#include "qdetect/csv.hpp"
#include "qdetect/decision_model.hpp"
#include "qdetect/detection.hpp"
#include "qdetect/error.hpp"
#include "qdetect/parallel.hpp"

namespace qdetect {

class ParameterMixture {
 public:
  struct Atom {
    PsychParams params;
    double weight;
  };

  explicit ParameterMixture(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw ConfigError("parameter mixture has no atoms");
    double total = 0.0;
    for (const auto& atom : atoms_) {
      if (!(atom.weight >= 0.0) || !std::isfinite(atom.weight)) {
        throw ConfigError("mixture weights must be finite and nonnegative");
      }
      total += atom.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      std::ostringstream os;
      os.precision(17);
      os << "mixture weights sum to " << total;
      throw ConfigError(os.str());
    }
  }

  static ParameterMixture point(const PsychParams& params) {
    return ParameterMixture({{params, 1.0}});
  }

  const std::vector<Atom>& atoms() const { return atoms_; }

 private:
  std::vector<Atom> atoms_;
};

class ActionKernel {
 public:
  ActionKernel(BeliefGrid grid, int n_actions, int n_obs)
      : grid_(grid),
        n_actions_(n_actions),
        n_obs_(n_obs),
        r_(static_cast<std::size_t>(grid.size()) * 2 * n_actions, 0.0),
        gamma_(static_cast<std::size_t>(grid.size()) * n_obs * n_actions, 0.0) {}

  const BeliefGrid& grid() const { return grid_; }
  int n_actions() const { return n_actions_; }
  int n_obs() const { return n_obs_; }

  // x is 0 for the post-change state, 1 for the pre-change state.
  double r(int i, int x, int a) const { return r_[r_index(i, x, a)]; }
  double& r(int i, int x, int a) { return r_[r_index(i, x, a)]; }

  double r_at(double pi1, int x, int a) const {
    const BeliefGrid::Bracket b = grid_.locate(pi1);
    return (1.0 - b.weight) * r(b.lower, x, a) + b.weight * r(b.lower + 1, x, a);
  }

  // Gamma_y^pi(a) at grid point i. Zero when the kernel was loaded from CSV.
  double gamma(int i, int y, int a) const { return gamma_[g_index(i, y, a)]; }
  double& gamma(int i, int y, int a) { return gamma_[g_index(i, y, a)]; }
  bool has_gamma() const { return has_gamma_; }
  void set_has_gamma(bool v) { has_gamma_ = v; }

  // Largest |sum_a R - 1| and most negative entry.
  std::pair<double, double> row_defect() const {
    double worst_sum = 0.0;
    double min_entry = 0.0;
    for (int i = 0; i < grid_.size(); ++i) {
      for (int x = 0; x < 2; ++x) {
        double s = 0.0;
        for (int a = 0; a < n_actions_; ++a) {
          s += r(i, x, a);
          min_entry = std::min(min_entry, r(i, x, a));
        }
        worst_sum = std::max(worst_sum, std::abs(s - 1.0));
      }
    }
    return {worst_sum, min_entry};
  }

 private:
  std::size_t r_index(int i, int x, int a) const {
    return (static_cast<std::size_t>(i) * 2 + x) * n_actions_ + a;
  }
  std::size_t g_index(int i, int y, int a) const {
    return (static_cast<std::size_t>(i) * n_obs_ + y) * n_actions_ + a;
  }

  BeliefGrid grid_;
  int n_actions_;
  int n_obs_;
  std::vector<double> r_;
  std::vector<double> gamma_;
  bool has_gamma_ = true;
};

// Private belief fed to the agent after observing y at public belief pi. When
// y is impossible under pi the belief is irrelevant to R; the normalized
// likelihood column (or the uniform belief) stands in.
inline BeliefVector kernel_private_belief(double pi1, int y, const ChangeModel& change,
                                          const ObservationModel& obs) {
  const Eigen::Vector2d num =
      private_belief_numerator(Eigen::Vector2d(pi1, 1.0 - pi1), y, change, obs);
  if (num.sum() > 0.0) return BeliefVector::normalized(num);
  const Eigen::Vector2d column(obs.likelihood(0, y), obs.likelihood(1, y));
  if (column.sum() > 0.0) return BeliefVector::normalized(column);
  return BeliefVector::uniform(2);
}

namespace detail {

[[noreturn]] inline void rethrow_annotated(const std::string& where) {
  try {
    throw;
  } catch (const NonConvergence& e) {
    throw NonConvergence(std::string(e.what()) + " " + where, e.last_delta());
  } catch (const NumericalError& e) {
    throw NumericalError(e.kind(), std::string(e.what()) + " " + where);
  }
}

}  // namespace detail

// Steady-state Gamma_y^pi(a) for every grid point and observation.
inline void fill_kernel_gammas(ActionKernel& kernel, const DecisionFrame& frame,
                               const PsychParams& params, const ChangeModel& change,
                               const ObservationModel& obs, double weight,
                               const SteadyStateConfig& cfg) {
  const int n_obs = obs.n_obs();
  const int na = frame.n_actions();
  const BeliefGrid& grid = kernel.grid();
  std::vector<double> local(static_cast<std::size_t>(grid.size()) * n_obs * na);
  parallel_for(local.size() / na, [&](std::size_t task) {
    const int i = static_cast<int>(task / n_obs);
    const int y = static_cast<int>(task % n_obs);
    const double pi1 = grid.point(i);
    try {
      const BeliefVector eta = kernel_private_belief(pi1, y, change, obs);
      const ActionDistribution g = steady_state_distribution(frame, params, eta, cfg);
      for (int a = 0; a < na; ++a) local[task * na + a] = g[a];
    } catch (const NumericalError&) {
      std::ostringstream os;
      os.precision(17);
      os << "(pi1=" << pi1 << ", y=" << y << ")";
      detail::rethrow_annotated(os.str());
    }
  });
  for (int i = 0; i < grid.size(); ++i) {
    for (int y = 0; y < n_obs; ++y) {
      for (int a = 0; a < na; ++a) {
        kernel.gamma(i, y, a) += weight * local[(static_cast<std::size_t>(i) * n_obs + y) * na + a];
      }
    }
  }
}

inline void finish_kernel(ActionKernel& kernel, const ObservationModel& obs) {
  for (int i = 0; i < kernel.grid().size(); ++i) {
    for (int x = 0; x < 2; ++x) {
      for (int a = 0; a < kernel.n_actions(); ++a) {
        double s = 0.0;
        for (int y = 0; y < obs.n_obs(); ++y) s += kernel.gamma(i, y, a) * obs.likelihood(x, y);
        kernel.r(i, x, a) = s;
      }
    }
  }
}

inline ActionKernel build_action_kernel(const DecisionFrame& frame, const PsychParams& params,
                                        const ChangeModel& change, const ObservationModel& obs,
                                        const BeliefGrid& grid,
                                        const SteadyStateConfig& cfg = {}) {
  if (frame.n_states() != 2) throw ConfigError("change detection needs a two-state frame");
  ActionKernel kernel(grid, frame.n_actions(), obs.n_obs());
  fill_kernel_gammas(kernel, frame, params, change, obs, 1.0, cfg);
  finish_kernel(kernel, obs);
  return kernel;
}

// R-hat = sum_k w_k R_k over the mixture atoms.
inline ActionKernel build_mismatched_kernel(const DecisionFrame& frame,
                                            const ParameterMixture& mixture,
                                            const ChangeModel& change, const ObservationModel& obs,
                                            const BeliefGrid& grid,
                                            const SteadyStateConfig& cfg = {}) {
  if (frame.n_states() != 2) throw ConfigError("change detection needs a two-state frame");
  ActionKernel kernel(grid, frame.n_actions(), obs.n_obs());
  for (const auto& atom : mixture.atoms()) {
    if (atom.weight == 0.0) continue;
    fill_kernel_gammas(kernel, frame, atom.params, change, obs, atom.weight, cfg);
  }
  finish_kernel(kernel, obs);
  return kernel;
}

// T-bar(pi, a) = R_pi(a) P' pi / sigma-bar(pi, a).
inline std::pair<BeliefVector, double> public_belief_update(const BeliefVector& pi, int a,
                                                            const ChangeModel& change,
                                                            const ActionKernel& kernel) {
  if (a < 0 || a >= kernel.n_actions()) {
    std::ostringstream os;
    os << "action index " << a << " outside [0," << kernel.n_actions() << ")";
    throw ConfigError(os.str());
  }
  const Eigen::Vector2d pred = change.predict(pi);
  const Eigen::Vector2d num(kernel.r_at(pi[0], 0, a) * pred[0], kernel.r_at(pi[0], 1, a) * pred[1]);
  const double sigma = num.sum();
  if (!(sigma > 0.0)) {
    std::ostringstream os;
    os << "action a=" << a << " has zero probability under belief pi1=" << pi[0];
    throw ImpossibleAction(os.str());
  }
  return {BeliefVector::normalized(num / sigma), sigma};
}

// CSV layout: pi1,x,a,R with x in {1, 2} and a the 0-based action index.
inline std::string kernel_to_csv(const ActionKernel& kernel, const std::string& config_hash) {
  std::string out = "# qdetect kernel config_hash=" + config_hash +
                    " grid=" + std::to_string(kernel.grid().intervals()) +
                    " actions=" + std::to_string(kernel.n_actions()) +
                    " observations=" + std::to_string(kernel.n_obs()) + "\npi1,x,a,R\n";
  for (int i = 0; i < kernel.grid().size(); ++i) {
    for (int x = 0; x < 2; ++x) {
      for (int a = 0; a < kernel.n_actions(); ++a) {
        out += csv::join({csv::num(kernel.grid().point(i)), std::to_string(x + 1),
                          std::to_string(a), csv::num(kernel.r(i, x, a))});
        out += '\n';
      }
    }
  }
  return out;
}

inline ActionKernel kernel_from_csv(const csv::Table& table, const std::string& expected_hash) {
  const std::string hash = csv::comment_value(table, "config_hash");
  if (hash != expected_hash) {
    throw CacheMiss("kernel cache hash '" + hash + "' does not match '" + expected_hash + "'");
  }
  const int grid_n = std::stoi(csv::comment_value(table, "grid"));
  const int na = std::stoi(csv::comment_value(table, "actions"));
  const int ny = std::stoi(csv::comment_value(table, "observations"));
  ActionKernel kernel(BeliefGrid(grid_n), na, ny);
  kernel.set_has_gamma(false);
  const auto c_pi = table.column("pi1");
  const auto c_x = table.column("x");
  const auto c_a = table.column("a");
  const auto c_r = table.column("R");
  if (table.rows.size() != static_cast<std::size_t>(kernel.grid().size()) * 2 * na) {
    throw CacheMiss("kernel cache has an unexpected row count");
  }
  for (const auto& row : table.rows) {
    const int i = kernel.grid().nearest(csv::to_double(row[c_pi]));
    kernel.r(i, std::stoi(row[c_x]) - 1, std::stoi(row[c_a])) = csv::to_double(row[c_r]);
  }
  return kernel;
}

}  // namespace qdetect
