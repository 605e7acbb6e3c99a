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

// Experiment configuration: an INI file (sections of key = value lines) read
// with boost::property_tree. Lists are comma or space separated; table rows
// are separated by ';'.
//
//   [frame]        payoffs = a, b, c, d        (prisoner's dilemma payoffs)
//   [agent]        alpha, lambda, phi
//   [mixture]      atoms = alpha lambda phi weight ; ...      (optional)
//   [change]       change_probability = q  or  persistence = p
//   [observation]  rows = b11 b12 ... ; b21 b22 ...
//   [costs]        f, d
//   [solver]       grid = 1000, tol = 1e-8, max_iter = 10000
//   [run]          seed, episodes = 10000, out = out
//   [stp]          points = 101
//   [sweep]        f_values = 1 2 3 ...
//   [scan]         ref_alpha = lo hi, ref_lambda, ref_phi, test_alpha,
//                  test_lambda, test_phi, points_per_axis = 5,
//                  pi_samples = 11, grid = 200, eps = 1e-6

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <type_traits>
#include <string>
#include <vector>

#include "qdetect/action_kernel.hpp"
#include "qdetect/belief_grid.hpp"
#include "qdetect/csv.hpp"
#include "qdetect/decision_model.hpp"
#include "qdetect/detection.hpp"
#include "qdetect/error.hpp"
#include "qdetect/region_scan.hpp"
#include "qdetect/stopping_solver.hpp"

namespace qdetect {

inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

inline std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::string cleaned = text;
  for (char& c : cleaned) {
    if (c == ',') c = ' ';
  }
  std::istringstream is(cleaned);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) out.push_back(csv::to_double(tok));
  if (out.empty()) throw ConfigError("key '" + key + "' holds no numbers");
  return out;
}

inline std::vector<std::vector<double>> parse_rows(const std::string& text, const std::string& key) {
  std::vector<std::vector<double>> rows;
  std::istringstream is(text);
  std::string row;
  while (std::getline(is, row, ';')) {
    if (row.find_first_not_of(" \t") == std::string::npos) continue;
    rows.push_back(parse_list(row, key));
  }
  if (rows.empty()) throw ConfigError("key '" + key + "' holds no rows");
  return rows;
}

}  // namespace detail

struct ExperimentConfig {
  std::vector<double> payoffs{20, 5, 10, 25};
  double alpha = 0.812, lambda = 10.495, phi = 0.9;
  std::vector<std::vector<double>> mixture_atoms;  // alpha lambda phi weight
  std::optional<double> change_probability;
  std::optional<double> persistence;
  std::vector<std::vector<double>> observation{{0.6, 0.25, 0.15}, {0.15, 0.25, 0.6}};
  double f = 5.0, d = 1.0;
  int grid = BeliefGrid::kDefaultIntervals;
  double tol = 1e-8;
  int max_iter = 10000;
  std::optional<std::uint64_t> seed;
  int episodes = 10000;
  std::string out = "out";
  int stp_points = 101;
  std::vector<double> f_values{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  ParameterBox ref_box{0.8, 1.0, 10.0, 100.0, 0.1, 0.5};
  ParameterBox test_box{0.1, 0.5, 10.0, 100.0, 0.1, 0.5};
  int scan_points = 5;
  int scan_pi_samples = 11;
  int scan_grid = 200;
  double scan_eps = 1e-6;

  DecisionFrame frame() const {
    if (payoffs.size() != 4) throw ConfigError("frame.payoffs needs four values a, b, c, d");
    return DecisionFrame::prisoners_dilemma(payoffs[0], payoffs[1], payoffs[2], payoffs[3]);
  }
  PsychParams params() const { return PsychParams(alpha, lambda, phi); }
  ChangeModel change() const {
    if (change_probability && persistence) {
      throw ConfigError("set only one of change.change_probability and change.persistence");
    }
    if (change_probability) return ChangeModel::with_change_probability(*change_probability);
    if (persistence) return ChangeModel::with_persistence(*persistence);
    throw ConfigError("change model missing: set change.change_probability or change.persistence");
  }
  ObservationModel observations() const {
    if (observation.size() != 2 || observation[0].size() != observation[1].size()) {
      throw ConfigError("observation.rows needs two rows of equal length");
    }
    Eigen::MatrixXd b(2, observation[0].size());
    for (int x = 0; x < 2; ++x) {
      for (std::size_t y = 0; y < observation[x].size(); ++y) b(x, y) = observation[x][y];
    }
    return ObservationModel(b);
  }
  DetectionCosts costs() const { return DetectionCosts(f, d); }
  BeliefGrid belief_grid() const { return BeliefGrid(grid); }
  SolverConfig solver() const {
    if (!(tol > 0.0)) throw ConfigError("solver.tol must be positive");
    if (max_iter < 1) throw ConfigError("solver.max_iter must be positive");
    return SolverConfig{tol, max_iter};
  }
  ParameterMixture mixture() const {
    if (mixture_atoms.empty()) throw ConfigError("mixture.atoms missing");
    std::vector<ParameterMixture::Atom> atoms;
    for (const auto& a : mixture_atoms) {
      if (a.size() != 4) throw ConfigError("each mixture atom needs alpha lambda phi weight");
      atoms.push_back({PsychParams(a[0], a[1], a[2]), a[3]});
    }
    return ParameterMixture(std::move(atoms));
  }
  std::uint64_t require_seed() const {
    if (!seed) throw ConfigError("this experiment is stochastic: set run.seed or pass --seed");
    return *seed;
  }

  // Validates every constituent type that the experiments construct.
  void validate() const {
    frame();
    params();
    change();
    observations();
    costs();
    belief_grid();
    solver();
    if (!mixture_atoms.empty()) mixture();
    ref_box.validate();
    test_box.validate();
    if (stp_points < 2) throw ConfigError("stp.points must be at least 2");
    if (episodes < 1) throw ConfigError("run.episodes must be at least 1");
  }

  // Canonical text of the fields that determine the kernel and solution.
  std::string solve_key() const {
    std::ostringstream os;
    os << "payoffs";
    for (double v : payoffs) os << ' ' << csv::num(v);
    os << "\nagent " << csv::num(alpha) << ' ' << csv::num(lambda) << ' ' << csv::num(phi)
       << "\npersistence " << csv::num(change().persistence()) << "\nobservation";
    for (const auto& row : observation) {
      for (double v : row) os << ' ' << csv::num(v);
      os << " ;";
    }
    os << "\ncosts " << csv::num(f) << ' ' << csv::num(d) << "\nsolver " << grid << ' '
       << csv::num(tol) << ' ' << max_iter << '\n';
    return os.str();
  }

  std::string canonical() const {
    std::ostringstream os;
    os << solve_key() << "mixture";
    for (const auto& a : mixture_atoms) {
      for (double v : a) os << ' ' << csv::num(v);
      os << " ;";
    }
    os << "\nseed " << (seed ? std::to_string(*seed) : "none") << "\nepisodes " << episodes
       << "\nstp " << stp_points << "\nf_values";
    for (double v : f_values) os << ' ' << csv::num(v);
    auto box = [&os](const ParameterBox& b) {
      os << ' ' << csv::num(b.alpha_lo) << ' ' << csv::num(b.alpha_hi) << ' '
         << csv::num(b.lambda_lo) << ' ' << csv::num(b.lambda_hi) << ' ' << csv::num(b.phi_lo)
         << ' ' << csv::num(b.phi_hi);
    };
    os << "\nscan";
    box(ref_box);
    box(test_box);
    os << ' ' << scan_points << ' ' << scan_pi_samples << ' ' << scan_grid << ' '
       << csv::num(scan_eps) << '\n';
    return os.str();
  }

  std::string solve_hash() const { return fnv1a_hex(solve_key()); }
  std::string hash() const { return fnv1a_hex(canonical()); }
};

inline ExperimentConfig parse_config(std::istream& is) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  static const std::vector<std::string> known = {
      "frame.payoffs", "agent.alpha", "agent.lambda", "agent.phi", "mixture.atoms",
      "change.change_probability", "change.persistence", "observation.rows", "costs.f",
      "costs.d", "solver.grid", "solver.tol", "solver.max_iter", "run.seed", "run.episodes",
      "run.out", "stp.points", "sweep.f_values", "scan.ref_alpha", "scan.ref_lambda",
      "scan.ref_phi", "scan.test_alpha", "scan.test_lambda", "scan.test_phi",
      "scan.points_per_axis", "scan.pi_samples", "scan.grid", "scan.eps"};
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw ConfigError("key '" + section + "' must sit inside a section");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      if (std::find(known.begin(), known.end(), full) == known.end()) {
        throw ConfigError("unknown config key '" + full + "'");
      }
    }
  }
  ExperimentConfig cfg;
  auto num = [&](const char* key, auto& target) {
    if (auto v = tree.get_optional<std::string>(key)) {
      const double x = csv::to_double(*v);
      using T = std::decay_t<decltype(target)>;
      if constexpr (std::is_integral_v<T>) {
        if (x != static_cast<double>(static_cast<long long>(x))) {
          throw ConfigError(std::string(key) + " must be an integer");
        }
      }
      target = static_cast<std::decay_t<decltype(target)>>(x);
    }
  };
  auto list = [&](const char* key, std::vector<double>& target) {
    if (auto v = tree.get_optional<std::string>(key)) target = detail::parse_list(*v, key);
  };
  auto range = [&](const char* key, double& lo, double& hi) {
    if (auto v = tree.get_optional<std::string>(key)) {
      const auto vals = detail::parse_list(*v, key);
      if (vals.size() != 2) throw ConfigError(std::string(key) + " needs 'lo hi'");
      lo = vals[0];
      hi = vals[1];
    }
  };
  list("frame.payoffs", cfg.payoffs);
  num("agent.alpha", cfg.alpha);
  num("agent.lambda", cfg.lambda);
  num("agent.phi", cfg.phi);
  if (auto v = tree.get_optional<std::string>("mixture.atoms")) {
    cfg.mixture_atoms = detail::parse_rows(*v, "mixture.atoms");
  }
  if (auto v = tree.get_optional<std::string>("change.change_probability")) {
    cfg.change_probability = csv::to_double(*v);
  }
  if (auto v = tree.get_optional<std::string>("change.persistence")) {
    cfg.persistence = csv::to_double(*v);
  }
  if (auto v = tree.get_optional<std::string>("observation.rows")) {
    cfg.observation = detail::parse_rows(*v, "observation.rows");
  }
  num("costs.f", cfg.f);
  num("costs.d", cfg.d);
  num("solver.grid", cfg.grid);
  num("solver.tol", cfg.tol);
  num("solver.max_iter", cfg.max_iter);
  if (auto v = tree.get_optional<std::string>("run.seed")) {
    const double x = csv::to_double(*v);
    if (!(x >= 0.0) || x != static_cast<double>(static_cast<std::uint64_t>(x))) {
      throw ConfigError("run.seed must be a nonnegative integer");
    }
    cfg.seed = static_cast<std::uint64_t>(std::stoull(*v));
  }
  num("run.episodes", cfg.episodes);
  if (auto v = tree.get_optional<std::string>("run.out")) cfg.out = *v;
  num("stp.points", cfg.stp_points);
  list("sweep.f_values", cfg.f_values);
  range("scan.ref_alpha", cfg.ref_box.alpha_lo, cfg.ref_box.alpha_hi);
  range("scan.ref_lambda", cfg.ref_box.lambda_lo, cfg.ref_box.lambda_hi);
  range("scan.ref_phi", cfg.ref_box.phi_lo, cfg.ref_box.phi_hi);
  range("scan.test_alpha", cfg.test_box.alpha_lo, cfg.test_box.alpha_hi);
  range("scan.test_lambda", cfg.test_box.lambda_lo, cfg.test_box.lambda_hi);
  range("scan.test_phi", cfg.test_box.phi_lo, cfg.test_box.phi_hi);
  num("scan.points_per_axis", cfg.scan_points);
  num("scan.pi_samples", cfg.scan_pi_samples);
  num("scan.grid", cfg.scan_grid);
  num("scan.eps", cfg.scan_eps);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  return parse_config(is);
}

}  // namespace qdetect
