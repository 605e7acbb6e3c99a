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

// qdetect: command-line driver for the change-detection experiments.
//
//   qdetect --config FILE [--out DIR] [--seed N] [--grid N] [--tol X] <command>
//
// Commands: stp-sweep, solve, threshold-sweep, simulate, sensitivity,
// region-scan. Results go to stdout as key=value lines and to CSV files under
// the output directory. Failures print one line
//   error code=<exit code> kind=<kind> message=<text>
// to stderr and exit with 2 (config), 3 (numerical) or 4 (cache miss).

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qdetect/qdetect.hpp"

namespace {

using qdetect::csv::num;

void print(const std::string& key, const std::string& value) {
  std::cout << key << '=' << value << '\n';
}

std::string threshold_text(const qdetect::ThresholdReport& r) {
  return r.threshold ? num(*r.threshold) : std::string("none");
}

int fail(const qdetect::Error& e) {
  std::cerr << "error code=" << static_cast<int>(e.code()) << " kind=" << e.kind()
            << " message=" << e.what() << '\n';
  return static_cast<int>(e.code());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quickest change detection with open-quantum decision makers"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> grid;
  std::optional<double> tol;
  app.add_option("--config", config_path, "experiment config (INI)")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--grid", grid, "belief grid intervals N");
  app.add_option("--tol", tol, "value iteration tolerance");

  std::optional<int> episodes;
  std::vector<double> f_values;
  std::optional<int> scan_points;

  auto* stp = app.add_subcommand("stp-sweep", "defection rates across phi");
  auto* solve = app.add_subcommand("solve", "build the action kernel and solve for the policy");
  auto* sweep = app.add_subcommand("threshold-sweep", "quantum and classical thresholds across f");
  sweep->add_option("--f-values", f_values, "false alarm penalties");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo episodes under the solved policy");
  simulate->add_option("--episodes", episodes, "number of episodes");
  auto* sensitivity = app.add_subcommand("sensitivity", "cost bound under a parameter mixture");
  auto* scan = app.add_subcommand("region-scan", "Blackwell ordering between parameter boxes");
  scan->add_option("--points-per-axis", scan_points, "samples per box axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(qdetect::ExitCode::kConfig);
  }

  try {
    qdetect::ExperimentConfig cfg = qdetect::load_config(config_path);
    if (out_dir) cfg.out = *out_dir;
    if (seed) cfg.seed = *seed;
    if (grid) cfg.grid = *grid;
    if (tol) cfg.tol = *tol;
    if (episodes) cfg.episodes = *episodes;
    if (!f_values.empty()) cfg.f_values = f_values;
    if (scan_points) cfg.scan_points = *scan_points;
    cfg.validate();
    print("config_hash", cfg.hash());

    if (stp->parsed()) {
      const auto s = qdetect::cmd_stp_sweep(cfg);
      print("ref_p_defect_known_defect", num(s.ref_known_defect));
      print("ref_p_defect_known_coop", num(s.ref_known_coop));
      print("violation_onset_phi", s.onset_refined ? num(*s.onset_refined) : "none");
      print("output", (std::filesystem::path(cfg.out) / "stp_sweep.csv").string());
    } else if (solve->parsed()) {
      const auto s = qdetect::cmd_solve(cfg);
      print("threshold", threshold_text(s.threshold));
      print("crossings", std::to_string(s.threshold.crossings));
      print("iterations", std::to_string(s.solution.value.iterations));
      print("V_pi0", num(s.solution.value.values[0]));
      print("cache", s.cache_dir.string());
    } else if (sweep->parsed()) {
      for (const auto& r : qdetect::cmd_threshold_sweep(cfg)) {
        std::cout << "f=" << num(r.f) << " thr_quantum=" << threshold_text(r.quantum)
                  << " thr_classical=" << threshold_text(r.classical) << '\n';
      }
      print("output", (std::filesystem::path(cfg.out) / "threshold_sweep.csv").string());
    } else if (simulate->parsed()) {
      const auto s = qdetect::cmd_simulate(cfg);
      print("episodes", std::to_string(s.estimate.episodes.size()));
      print("mean_cost", num(s.estimate.mean));
      print("stderr", num(s.estimate.standard_error));
      print("p_false_alarm", num(s.estimate.false_alarm_rate));
      print("mean_delay_given_detection", num(s.estimate.mean_delay_given_detection));
      print("V_pi0", num(s.value_at_start));
      print("Q_continue_pi0", num(s.continue_at_start));
    } else if (sensitivity->parsed()) {
      const auto r = qdetect::cmd_sensitivity(cfg);
      print("K", num(r.k));
      print("distance", r.distance.infinite ? "inf" : num(r.distance.value));
      print("worst_slack", num(r.worst_slack));
      print("bound_holds", r.worst_slack >= 0.0 ? "1" : "0");
    } else if (scan->parsed()) {
      const auto r = qdetect::cmd_region_scan(cfg);
      print("pairs", std::to_string(r.pairs.size()));
      print("certified_ref_dominates", std::to_string(r.certified_ref));
      print("certified_test_dominates", std::to_string(r.certified_test));
      print("ref_box", r.ref_tag);
      print("test_box", r.test_tag);
      print("witness", r.witness_found ? "1" : "0");
    }
  } catch (const qdetect::Error& e) {
    return fail(e);
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(qdetect::ConfigError(e.what()));
  }
  return 0;
}
