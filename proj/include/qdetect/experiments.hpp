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

// Batch experiments behind the qdetect CLI. Each writes its CSV output under
// the configured output directory and returns the numbers it reports.

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qdetect/action_kernel.hpp"
#include "qdetect/config.hpp"
#include "qdetect/csv.hpp"
#include "qdetect/decision_model.hpp"
#include "qdetect/episode.hpp"
#include "qdetect/region_scan.hpp"
#include "qdetect/sensitivity.hpp"
#include "qdetect/stopping_solver.hpp"

namespace qdetect {

namespace fs = std::filesystem;

// ---- stp-sweep ----

struct StpRow {
  double phi;
  double defect_known_defect;
  double defect_known_coop;
  double defect_unknown;
  bool outside_same_phi_hull;
  bool violation;  // unknown rate outside [ref_coop, ref_defect] interval
};

struct StpSweep {
  double ref_known_defect = 0.0;  // certain-state rates at phi = 0
  double ref_known_coop = 0.0;
  std::vector<StpRow> rows;
  std::optional<double> onset_grid;     // first swept phi with a violation
  std::optional<double> onset_refined;  // bisection between neighbouring phis
};

// P(defect) when the agent holds belief eta and starts from that belief.
inline double defection_rate(const DecisionFrame& frame, const PsychParams& params,
                             const BeliefVector& eta, const SteadyStateConfig& cfg = {}) {
  const DensityOperator start = belief_weighted_start(frame, eta);
  return steady_state(frame, params, eta, cfg, &start).gamma[1];
}

inline StpSweep stp_sweep(const DecisionFrame& frame, double alpha, double lambda, int points,
                          const SteadyStateConfig& cfg = {}) {
  if (frame.n_states() != 2 || frame.n_actions() != 2) {
    throw ConfigError("stp-sweep needs a two-state, two-action frame");
  }
  const BeliefVector coop = BeliefVector::unit(2, 0);
  const BeliefVector defect = BeliefVector::unit(2, 1);
  const BeliefVector unknown = BeliefVector::uniform(2);
  StpSweep sweep;
  sweep.ref_known_defect = defection_rate(frame, PsychParams(alpha, lambda, 0.0), defect, cfg);
  sweep.ref_known_coop = defection_rate(frame, PsychParams(alpha, lambda, 0.0), coop, cfg);
  const double lo = std::min(sweep.ref_known_defect, sweep.ref_known_coop);
  const double hi = std::max(sweep.ref_known_defect, sweep.ref_known_coop);
  auto violates = [&](double phi) {
    const double u = defection_rate(frame, PsychParams(alpha, lambda, phi), unknown, cfg);
    return u < lo || u > hi;
  };
  sweep.rows.resize(points);
  parallel_for(static_cast<std::size_t>(points), [&](std::size_t k) {
    const double phi = static_cast<double>(k) / (points - 1);
    const PsychParams params(alpha, lambda, phi);
    StpRow row{phi, defection_rate(frame, params, defect, cfg),
               defection_rate(frame, params, coop, cfg),
               defection_rate(frame, params, unknown, cfg), false, false};
    const double rlo = std::min(row.defect_known_defect, row.defect_known_coop);
    const double rhi = std::max(row.defect_known_defect, row.defect_known_coop);
    row.outside_same_phi_hull = row.defect_unknown < rlo || row.defect_unknown > rhi;
    row.violation = row.defect_unknown < lo || row.defect_unknown > hi;
    sweep.rows[k] = row;
  });
  for (std::size_t k = 0; k < sweep.rows.size(); ++k) {
    if (!sweep.rows[k].violation) continue;
    sweep.onset_grid = sweep.rows[k].phi;
    if (k > 0 && !sweep.rows[k - 1].violation) {
      double a = sweep.rows[k - 1].phi, b = sweep.rows[k].phi;
      for (int it = 0; it < 50; ++it) {
        const double m = 0.5 * (a + b);
        (violates(m) ? b : a) = m;
      }
      sweep.onset_refined = b;
    } else {
      sweep.onset_refined = sweep.rows[k].phi;
    }
    break;
  }
  return sweep;
}

inline std::string stp_to_csv(const StpSweep& sweep, const std::string& config_hash) {
  std::string out = "# qdetect stp-sweep config_hash=" + config_hash +
                    " ref_known_defect=" + csv::num(sweep.ref_known_defect) +
                    " ref_known_coop=" + csv::num(sweep.ref_known_coop) + " onset=" +
                    (sweep.onset_refined ? csv::num(*sweep.onset_refined) : "none") +
                    "\nphi,p_defect_known_defect,p_defect_known_coop,p_defect_unknown,"
                    "outside_same_phi_hull,violation\n";
  for (const auto& r : sweep.rows) {
    out += csv::join({csv::num(r.phi), csv::num(r.defect_known_defect),
                      csv::num(r.defect_known_coop), csv::num(r.defect_unknown),
                      r.outside_same_phi_hull ? "1" : "0", r.violation ? "1" : "0"});
    out += '\n';
  }
  return out;
}

inline StpSweep cmd_stp_sweep(const ExperimentConfig& cfg) {
  StpSweep sweep = stp_sweep(cfg.frame(), cfg.alpha, cfg.lambda, cfg.stp_points);
  csv::write_atomic(fs::path(cfg.out) / "stp_sweep.csv", stp_to_csv(sweep, cfg.hash()));
  return sweep;
}

// ---- solve ----

struct SolveOutcome {
  ActionKernel kernel;
  Solution solution;
  ThresholdReport threshold;
  fs::path cache_dir;
};

inline fs::path cache_dir(const ExperimentConfig& cfg) {
  return fs::path(cfg.out) / cfg.solve_hash();
}

inline SolveOutcome cmd_solve(const ExperimentConfig& cfg) {
  cfg.validate();
  const ChangeModel change = cfg.change();
  ActionKernel kernel =
      build_action_kernel(cfg.frame(), cfg.params(), change, cfg.observations(), cfg.belief_grid());
  Solution sol = value_iteration(kernel, change, cfg.costs(), cfg.solver());
  const fs::path dir = cache_dir(cfg);
  const std::string hash = cfg.solve_hash();
  try {
    csv::write_atomic(dir / "kernel.csv", kernel_to_csv(kernel, hash));
    csv::write_atomic(dir / "value.csv", value_to_csv(sol.value, hash));
    csv::write_atomic(dir / "policy.csv", policy_to_csv(sol.policy, hash));
  } catch (...) {
    std::error_code ec;
    fs::remove_all(dir, ec);
    throw;
  }
  ThresholdReport thr = extract_threshold(sol.policy);
  return SolveOutcome{std::move(kernel), std::move(sol), thr, dir};
}

struct CachedSolution {
  ActionKernel kernel;
  ValueTable value;
  Policy policy;
};

inline CachedSolution load_cached_solution(const ExperimentConfig& cfg) {
  const fs::path dir = cache_dir(cfg);
  const std::string hash = cfg.solve_hash();
  try {
    return CachedSolution{kernel_from_csv(csv::read_file(dir / "kernel.csv"), hash),
                          value_from_csv(csv::read_file(dir / "value.csv"), hash),
                          policy_from_csv(csv::read_file(dir / "policy.csv"), hash)};
  } catch (const CacheMiss& e) {
    throw CacheMiss(std::string(e.what()) + "; run `qdetect solve` with this config first");
  }
}

// ---- threshold-sweep ----

struct ThresholdRow {
  double f;
  ThresholdReport quantum;
  ThresholdReport classical;
};

inline std::vector<ThresholdRow> threshold_sweep(const ActionKernel& kernel,
                                                 const ChangeModel& change,
                                                 const ObservationModel& obs, double delay,
                                                 const std::vector<double>& f_values,
                                                 const SolverConfig& solver = {}) {
  const BranchTable quantum = quantum_branches(kernel, change);
  const BranchTable classical = classical_branches(change, obs, kernel.grid());
  std::vector<ThresholdRow> rows;
  for (double f : f_values) {
    const DetectionCosts costs(f, delay);
    rows.push_back({f, extract_threshold(solve_branches(quantum, costs, solver).policy),
                    extract_threshold(solve_branches(classical, costs, solver).policy)});
  }
  return rows;
}

inline std::string threshold_sweep_to_csv(const std::vector<ThresholdRow>& rows,
                                          const std::string& config_hash) {
  auto thr = [](const ThresholdReport& r) {
    return r.threshold ? csv::num(*r.threshold) : std::string("nan");
  };
  std::string out = "# qdetect threshold-sweep config_hash=" + config_hash +
                    "\nf,thr_quantum,thr_classical,crossings_quantum,crossings_classical\n";
  for (const auto& r : rows) {
    out += csv::join({csv::num(r.f), thr(r.quantum), thr(r.classical),
                      std::to_string(r.quantum.crossings), std::to_string(r.classical.crossings)});
    out += '\n';
  }
  return out;
}

inline std::vector<ThresholdRow> cmd_threshold_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const ChangeModel change = cfg.change();
  const ObservationModel obs = cfg.observations();
  const ActionKernel kernel =
      build_action_kernel(cfg.frame(), cfg.params(), change, obs, cfg.belief_grid());
  auto rows = threshold_sweep(kernel, change, obs, cfg.d, cfg.f_values, cfg.solver());
  csv::write_atomic(fs::path(cfg.out) / "threshold_sweep.csv",
                    threshold_sweep_to_csv(rows, cfg.hash()));
  return rows;
}

// ---- simulate ----

struct SimulationOutcome {
  CostEstimate estimate;
  double value_at_start = 0.0;     // V(pi0)
  double continue_at_start = 0.0;  // Q(pi0, continue): the cost episodes estimate
};

inline std::string episodes_to_csv(const CostEstimate& est, const std::string& config_hash) {
  std::string out = "# qdetect simulate config_hash=" + config_hash +
                    "\nepisode,tau0,tau,delay,false_alarm,cost\n";
  for (std::size_t k = 0; k < est.episodes.size(); ++k) {
    const auto& e = est.episodes[k];
    out += csv::join({std::to_string(k), std::to_string(e.change_time),
                      std::to_string(e.stop_time), std::to_string(e.delay),
                      e.false_alarm ? "1" : "0", csv::num(e.cost)});
    out += '\n';
  }
  return out;
}

inline SimulationOutcome cmd_simulate(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::uint64_t seed = cfg.require_seed();
  const CachedSolution cached = load_cached_solution(cfg);
  const ChangeModel change = cfg.change();
  SteadyStateCache agent(cfg.frame(), cfg.params());
  SimulationOutcome out;
  out.estimate = estimate_cost(agent, change, cfg.observations(), cfg.costs(), cached.kernel,
                               cached.policy, seed, cfg.episodes);
  out.value_at_start = cached.value.values[0];
  out.continue_at_start =
      quantum_branches(cached.kernel, change).expected_next(cached.value.values, 0);
  const std::string hash = cfg.hash();
  csv::write_atomic(fs::path(cfg.out) / "episodes.csv", episodes_to_csv(out.estimate, hash));
  const auto& e = out.estimate;
  csv::write_atomic(
      fs::path(cfg.out) / "simulate_summary.csv",
      "# qdetect simulate config_hash=" + hash +
          "\nepisodes,mean_cost,stderr,p_false_alarm,mean_delay_given_detection,V_pi0,"
          "Q_continue_pi0\n" +
          csv::join({std::to_string(e.episodes.size()), csv::num(e.mean),
                     csv::num(e.standard_error), csv::num(e.false_alarm_rate),
                     csv::num(e.mean_delay_given_detection), csv::num(out.value_at_start),
                     csv::num(out.continue_at_start)}) +
          "\n");
  return out;
}

// ---- sensitivity ----

inline std::string sensitivity_to_csv(const KLBoundReport& rep, const BeliefGrid& grid,
                                      const std::string& config_hash) {
  std::string out = "# qdetect sensitivity config_hash=" + config_hash + " K=" + csv::num(rep.k) +
                    " distance=" + csv::num(rep.distance.value) +
                    " worst_slack=" + csv::num(rep.worst_slack) + "\npi1,lhs,j_true,rhs,slack\n";
  for (int i = 0; i < grid.size(); ++i) {
    out += csv::join({csv::num(grid.point(i)), csv::num(rep.lhs[i]), csv::num(rep.j_true[i]),
                      csv::num(rep.rhs[i]), csv::num(rep.rhs[i] - rep.lhs[i])});
    out += '\n';
  }
  return out;
}

inline KLBoundReport cmd_sensitivity(const ExperimentConfig& cfg) {
  cfg.validate();
  KLBoundReport rep =
      sensitivity_bound_check(cfg.frame(), cfg.params(), cfg.mixture(), cfg.change(),
                              cfg.observations(), cfg.costs(), cfg.belief_grid(), cfg.solver());
  csv::write_atomic(fs::path(cfg.out) / "sensitivity.csv",
                    sensitivity_to_csv(rep, cfg.belief_grid(), cfg.hash()));
  return rep;
}

// ---- region-scan ----

inline RegionScanResult cmd_region_scan(const ExperimentConfig& cfg) {
  cfg.validate();
  RegionScanConfig scan;
  scan.points_per_axis = cfg.scan_points;
  scan.pi_samples = cfg.scan_pi_samples;
  scan.grid = BeliefGrid(cfg.scan_grid);
  scan.eps = cfg.scan_eps;
  scan.solver = cfg.solver();
  RegionScanResult res = region_scan(cfg.frame(), cfg.ref_box, cfg.test_box, cfg.change(),
                                     cfg.observations(), cfg.costs(), scan);
  csv::write_atomic(fs::path(cfg.out) / "region_scan.csv", scan_to_csv(res, cfg.hash()));
  return res;
}

}  // namespace qdetect
