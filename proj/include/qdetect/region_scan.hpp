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

// Sampled scan of two parameter boxes for Blackwell-ordered pairs. For each
// (reference, test) pair the scan looks for garbling certificates at every
// sampled public belief in both directions, and where one is found compares
// the two optimal value functions.

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qdetect/action_kernel.hpp"
#include "qdetect/csv.hpp"
#include "qdetect/decision_model.hpp"
#include "qdetect/detection.hpp"
#include "qdetect/dominance.hpp"
#include "qdetect/error.hpp"
#include "qdetect/parallel.hpp"
#include "qdetect/stopping_solver.hpp"

namespace qdetect {

struct ParameterBox {
  double alpha_lo, alpha_hi;
  double lambda_lo, lambda_hi;
  double phi_lo, phi_hi;

  void validate() const {
    if (!(0.0 <= alpha_lo && alpha_lo <= alpha_hi && alpha_hi <= 1.0) ||
        !(0.0 <= phi_lo && phi_lo <= phi_hi && phi_hi <= 1.0) ||
        !(0.0 <= lambda_lo && lambda_lo <= lambda_hi && std::isfinite(lambda_hi))) {
      throw ConfigError("parameter box outside [0,1] x [0,inf) x [0,1] or with lo > hi");
    }
  }

  // points_per_axis samples per axis, collapsing degenerate axes to one.
  std::vector<PsychParams> samples(int points_per_axis) const {
    validate();
    auto axis = [points_per_axis](double lo, double hi) {
      std::vector<double> v;
      if (lo == hi || points_per_axis <= 1) {
        v.push_back(lo == hi ? lo : 0.5 * (lo + hi));
        return v;
      }
      for (int k = 0; k < points_per_axis; ++k) {
        v.push_back(lo + (hi - lo) * k / (points_per_axis - 1));
      }
      return v;
    };
    std::vector<PsychParams> out;
    for (double a : axis(alpha_lo, alpha_hi)) {
      for (double l : axis(lambda_lo, lambda_hi)) {
        for (double p : axis(phi_lo, phi_hi)) out.emplace_back(a, l, p);
      }
    }
    return out;
  }
};

enum class Direction { kNone, kRefDominates, kTestDominates, kMutual, kUnresolved };

inline const char* direction_name(Direction d) {
  switch (d) {
    case Direction::kNone: return "none";
    case Direction::kRefDominates: return "ref_dominates";
    case Direction::kTestDominates: return "test_dominates";
    case Direction::kMutual: return "mutual";
    case Direction::kUnresolved: return "unresolved";
  }
  return "unknown";
}

struct PairResult {
  PsychParams ref;
  PsychParams test;
  Direction direction = Direction::kNone;
  double residual_ref_over_test = 0.0;  // worst over sampled pi of the best residual
  double residual_test_over_ref = 0.0;
  // min over grid of V_garbled - V_dominating for each certified direction;
  // NaN when not certified.
  double margin_ref_over_test = std::numeric_limits<double>::quiet_NaN();
  double margin_test_over_ref = std::numeric_limits<double>::quiet_NaN();
  std::string note;
};

struct RegionScanConfig {
  int points_per_axis = 5;
  int pi_samples = 11;
  double eps = 1e-6;
  double v_tolerance = 1e-6;
  BeliefGrid grid{200};
  SolverConfig solver{};
  SteadyStateConfig steady{};
};

struct RegionScanResult {
  std::vector<PairResult> pairs;
  std::string ref_tag;   // dominating | dominated | unresolved
  std::string test_tag;
  bool witness_found = false;  // a one-way certificate with V margin >= -v_tolerance
  int certified_ref = 0;
  int certified_test = 0;
};

namespace detail {

// Gamma_y at the private belief T(pi, y), for every sampled pi.
inline std::vector<DistributionFamily> sampled_families(const DecisionFrame& frame,
                                                        const PsychParams& params,
                                                        const ChangeModel& change,
                                                        const ObservationModel& obs,
                                                        int pi_samples,
                                                        const SteadyStateConfig& cfg) {
  std::vector<DistributionFamily> out;
  for (int k = 0; k < pi_samples; ++k) {
    const double pi1 = pi_samples == 1 ? 0.5 : static_cast<double>(k) / (pi_samples - 1);
    DistributionFamily fam;
    for (int y = 0; y < obs.n_obs(); ++y) {
      fam.push_back(steady_state_distribution(frame, params,
                                              kernel_private_belief(pi1, y, change, obs), cfg)
                        .probabilities());
    }
    out.push_back(std::move(fam));
  }
  return out;
}

// Worst best-fit residual over samples for "dominating garbles into garbled".
inline double worst_residual(const std::vector<DistributionFamily>& dominating,
                             const std::vector<DistributionFamily>& garbled, double eps,
                             bool& all_certified) {
  double worst = 0.0;
  all_certified = true;
  for (std::size_t k = 0; k < dominating.size(); ++k) {
    const DominanceCertificate cert = best_garbling(dominating[k], garbled[k]);
    worst = std::max(worst, cert.residual);
    if (!certificate_valid(cert, eps)) all_certified = false;
  }
  return worst;
}

inline double min_difference(const std::vector<double>& a, const std::vector<double>& b) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); ++i) m = std::min(m, a[i] - b[i]);
  return m;
}

}  // namespace detail

inline RegionScanResult region_scan(const DecisionFrame& frame, const ParameterBox& ref_box,
                                    const ParameterBox& test_box, const ChangeModel& change,
                                    const ObservationModel& obs, const DetectionCosts& costs,
                                    const RegionScanConfig& cfg = {}) {
  const std::vector<PsychParams> refs = ref_box.samples(cfg.points_per_axis);
  const std::vector<PsychParams> tests = test_box.samples(cfg.points_per_axis);
  std::vector<PsychParams> points = refs;
  points.insert(points.end(), tests.begin(), tests.end());

  // Per-point sampled families; failures mark the point unresolved.
  std::vector<std::vector<DistributionFamily>> families(points.size());
  std::vector<std::string> failures(points.size());
  parallel_for(points.size(), [&](std::size_t k) {
    try {
      families[k] = detail::sampled_families(frame, points[k], change, obs, cfg.pi_samples,
                                              cfg.steady);
    } catch (const NumericalError& e) {
      failures[k] = e.kind();
    }
  });

  // Optimal values, solved lazily for points in certified pairs.
  std::map<std::size_t, std::vector<double>> values;
  auto value_of = [&](std::size_t k) -> const std::vector<double>& {
    auto it = values.find(k);
    if (it == values.end()) {
      const ActionKernel kernel = build_action_kernel(frame, points[k], change, obs, cfg.grid,
                                                      cfg.steady);
      it = values.emplace(k, value_iteration(kernel, change, costs, cfg.solver).value.values).first;
    }
    return it->second;
  };

  RegionScanResult res;
  bool all_ref = true, all_test = true;
  for (std::size_t r = 0; r < refs.size(); ++r) {
    for (std::size_t t = 0; t < tests.size(); ++t) {
      const std::size_t tk = refs.size() + t;
      PairResult pr{refs[r],
                    tests[t],
                    Direction::kNone,
                    0.0,
                    0.0,
                    std::numeric_limits<double>::quiet_NaN(),
                    std::numeric_limits<double>::quiet_NaN(),
                    {}};
      if (!failures[r].empty() || !failures[tk].empty()) {
        pr.direction = Direction::kUnresolved;
        pr.note = !failures[r].empty() ? failures[r] : failures[tk];
        res.pairs.push_back(pr);
        all_ref = all_test = false;
        continue;
      }
      bool ref_dom = false, test_dom = false;
      pr.residual_ref_over_test =
          detail::worst_residual(families[r], families[tk], cfg.eps, ref_dom);
      pr.residual_test_over_ref =
          detail::worst_residual(families[tk], families[r], cfg.eps, test_dom);
      try {
        if (ref_dom) pr.margin_ref_over_test = detail::min_difference(value_of(tk), value_of(r));
        if (test_dom) pr.margin_test_over_ref = detail::min_difference(value_of(r), value_of(tk));
      } catch (const NumericalError& e) {
        pr.direction = Direction::kUnresolved;
        pr.note = e.kind();
        res.pairs.push_back(pr);
        all_ref = all_test = false;
        continue;
      }
      pr.direction = ref_dom && test_dom ? Direction::kMutual
                     : ref_dom           ? Direction::kRefDominates
                     : test_dom          ? Direction::kTestDominates
                                         : Direction::kNone;
      if (ref_dom) ++res.certified_ref;
      if (test_dom) ++res.certified_test;
      all_ref = all_ref && ref_dom;
      all_test = all_test && test_dom;
      const bool one_way = ref_dom != test_dom;
      const double margin = ref_dom ? pr.margin_ref_over_test : pr.margin_test_over_ref;
      if (one_way && margin >= -cfg.v_tolerance) res.witness_found = true;
      res.pairs.push_back(pr);
    }
  }
  res.ref_tag = all_ref ? "dominating" : all_test ? "dominated" : "unresolved";
  res.test_tag = all_ref ? "dominated" : all_test ? "dominating" : "unresolved";
  return res;
}

// CSV layout: alpha_ref,lambda_ref,phi_ref,alpha_test,lambda_test,phi_test,
// direction,residual,worst_V_margin. residual is the one of the reported
// direction (the smaller of the two when none holds); worst_V_margin is
// min over the grid of V_garbled - V_dominating.
inline std::string scan_to_csv(const RegionScanResult& res, const std::string& config_hash) {
  std::string out = "# qdetect region-scan config_hash=" + config_hash +
                    " ref=" + res.ref_tag + " test=" + res.test_tag +
                    " witness=" + (res.witness_found ? "1" : "0") +
                    "\nalpha_ref,lambda_ref,phi_ref,alpha_test,lambda_test,phi_test,direction,"
                    "residual,worst_V_margin\n";
  for (const auto& p : res.pairs) {
    double residual = std::min(p.residual_ref_over_test, p.residual_test_over_ref);
    double margin = std::numeric_limits<double>::quiet_NaN();
    if (p.direction == Direction::kRefDominates) {
      residual = p.residual_ref_over_test;
      margin = p.margin_ref_over_test;
    } else if (p.direction == Direction::kTestDominates) {
      residual = p.residual_test_over_ref;
      margin = p.margin_test_over_ref;
    } else if (p.direction == Direction::kMutual) {
      residual = std::max(p.residual_ref_over_test, p.residual_test_over_ref);
      margin = std::min(p.margin_ref_over_test, p.margin_test_over_ref);
    }
    out += csv::join({csv::num(p.ref.alpha()), csv::num(p.ref.lambda()), csv::num(p.ref.phi()),
                      csv::num(p.test.alpha()), csv::num(p.test.lambda()),
                      csv::num(p.test.phi()), direction_name(p.direction), csv::num(residual),
                      csv::num(margin)});
    out += '\n';
  }
  return out;
}

}  // namespace qdetect
