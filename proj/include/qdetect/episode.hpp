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

// Monte Carlo simulation of the detection protocol: the change happens at a
// geometric epoch, the sensor observes y, forms its private belief, acts from
// the steady state at that belief, and the detector updates its public belief
// from the action and applies the stopping policy.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qdetect/action_kernel.hpp"
#include "qdetect/csv.hpp"
#include "qdetect/decision_model.hpp"
#include "qdetect/detection.hpp"
#include "qdetect/error.hpp"
#include "qdetect/parallel.hpp"
#include "qdetect/stopping_solver.hpp"

namespace qdetect {

// Uniform, categorical and geometric draws on top of mt19937_64, written out
// so results do not depend on the standard library's distribution classes.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  // [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  template <typename Probabilities>
  int categorical(const Probabilities& p, int n) {
    const double u = uniform();
    double acc = 0.0;
    int last_positive = 0;
    for (int k = 0; k < n; ++k) {
      if (p[k] > 0.0) last_positive = k;
      acc += p[k];
      if (u < acc) return k;
    }
    return last_positive;
  }

  // Number of trials up to and including the first success; success
  // probability q in (0, 1].
  std::int64_t geometric(double q) {
    if (q >= 1.0) return 1;
    const double u = 1.0 - uniform();  // (0, 1]
    return 1 + static_cast<std::int64_t>(std::floor(std::log(u) / std::log1p(-q)));
  }

 private:
  std::mt19937_64 engine_;
};

// Memoizes steady-state action distributions by exact private belief; safe to
// share across threads.
class SteadyStateCache {
 public:
  SteadyStateCache(const DecisionFrame& frame, const PsychParams& params,
                   SteadyStateConfig cfg = {})
      : frame_(frame), params_(params), cfg_(cfg) {}

  Eigen::VectorXd get(const BeliefVector& eta) {
    std::uint64_t key = 0;
    const double eta1 = eta[0];
    std::memcpy(&key, &eta1, sizeof key);
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = memo_.find(key);
      if (it != memo_.end()) return it->second;
    }
    Eigen::VectorXd g = steady_state_distribution(frame_, params_, eta, cfg_).probabilities();
    std::lock_guard<std::mutex> lock(mu_);
    memo_.emplace(key, g);
    return g;
  }

 private:
  DecisionFrame frame_;
  PsychParams params_;
  SteadyStateConfig cfg_;
  std::mutex mu_;
  std::map<std::uint64_t, Eigen::VectorXd> memo_;
};

struct EpisodeStep {
  std::int64_t n;
  int x;       // 1 post-change, 2 pre-change
  int y;       // 0-based observation index
  double eta1;
  int a;       // 0-based action index
  double pi1;
  int u;       // 1 stop, 2 continue
};

struct EpisodeTrace {
  std::int64_t change_time = 0;
  std::int64_t stop_time = 0;
  std::vector<EpisodeStep> steps;
  double cost = 0.0;

  bool false_alarm() const { return stop_time < change_time; }
  std::int64_t delay() const { return stop_time > change_time ? stop_time - change_time : 0; }
};

struct EpisodeOptions {
  std::int64_t step_cap = 0;  // 0 selects 10 E[tau0] + 1000
  bool record_steps = true;
};

inline EpisodeTrace simulate_episode(SteadyStateCache& agent, const ChangeModel& change,
                                     const ObservationModel& obs, const DetectionCosts& costs,
                                     const ActionKernel& kernel, const Policy& policy,
                                     std::uint64_t seed, std::uint64_t stream = 0,
                                     const EpisodeOptions& opts = {}) {
  Rng rng(seed, stream);
  EpisodeTrace trace;
  trace.change_time = rng.geometric(change.change_probability());
  const std::int64_t cap =
      opts.step_cap > 0
          ? opts.step_cap
          : static_cast<std::int64_t>(10.0 * change.expected_change_time()) + 1000;
  BeliefVector pi = change.initial_belief();
  for (std::int64_t n = 1;; ++n) {
    if (n > cap) {
      std::ostringstream os;
      os << "episode exceeded " << cap << " steps without stopping";
      throw RunawayEpisode(os.str());
    }
    const int x = n >= trace.change_time ? 0 : 1;
    const int y = rng.categorical(obs.table().row(x), obs.n_obs());
    const BeliefVector eta = private_belief_update(pi, y, change, obs);
    const Eigen::VectorXd gamma = agent.get(eta);
    const int a = rng.categorical(gamma, static_cast<int>(gamma.size()));
    pi = public_belief_update(pi, a, change, kernel).first;
    const int u = policy.stops_at(pi[0]) ? 1 : 2;
    if (opts.record_steps) trace.steps.push_back({n, x + 1, y, eta[0], a, pi[0], u});
    if (u == 1) {
      trace.stop_time = n;
      break;
    }
  }
  trace.cost = costs.delay() * static_cast<double>(trace.delay()) +
               (trace.false_alarm() ? costs.false_alarm() : 0.0);
  return trace;
}

// CSV layout: n,x,y,eta1,a,pi1,u.
inline std::string trace_to_csv(const EpisodeTrace& trace, const std::string& config_hash) {
  std::string out = "# qdetect episode config_hash=" + config_hash +
                    " change_time=" + std::to_string(trace.change_time) +
                    " stop_time=" + std::to_string(trace.stop_time) +
                    " cost=" + csv::num(trace.cost) + "\nn,x,y,eta1,a,pi1,u\n";
  for (const auto& s : trace.steps) {
    out += csv::join({std::to_string(s.n), std::to_string(s.x), std::to_string(s.y),
                      csv::num(s.eta1), std::to_string(s.a), csv::num(s.pi1),
                      std::to_string(s.u)});
    out += '\n';
  }
  return out;
}

struct EpisodeSummary {
  std::int64_t change_time;
  std::int64_t stop_time;
  std::int64_t delay;
  bool false_alarm;
  double cost;
};

struct CostEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  double false_alarm_rate = 0.0;
  double mean_delay_given_detection = 0.0;  // NaN when every episode false-alarms
  std::vector<EpisodeSummary> episodes;
};

// Episode k uses stream k of the seed.
inline CostEstimate estimate_cost(SteadyStateCache& agent, const ChangeModel& change,
                                  const ObservationModel& obs, const DetectionCosts& costs,
                                  const ActionKernel& kernel, const Policy& policy,
                                  std::uint64_t seed, int n_episodes,
                                  const EpisodeOptions& opts = {}) {
  if (n_episodes < 1) throw ConfigError("n_episodes must be at least 1");
  EpisodeOptions quiet = opts;
  quiet.record_steps = false;
  CostEstimate est;
  est.episodes.resize(n_episodes);
  parallel_for(static_cast<std::size_t>(n_episodes), [&](std::size_t k) {
    const EpisodeTrace t = simulate_episode(agent, change, obs, costs, kernel, policy, seed, k, quiet);
    est.episodes[k] = {t.change_time, t.stop_time, t.delay(), t.false_alarm(), t.cost};
  });
  double sum = 0.0, sum_sq = 0.0, delay_sum = 0.0;
  int alarms = 0;
  for (const auto& e : est.episodes) {
    sum += e.cost;
    sum_sq += e.cost * e.cost;
    if (e.false_alarm) {
      ++alarms;
    } else {
      delay_sum += static_cast<double>(e.delay);
    }
  }
  const double n = n_episodes;
  est.mean = sum / n;
  const double var = n > 1 ? std::max(0.0, (sum_sq - n * est.mean * est.mean) / (n - 1)) : 0.0;
  est.standard_error = std::sqrt(var / n);
  est.false_alarm_rate = alarms / n;
  est.mean_delay_given_detection =
      alarms < n_episodes ? delay_sum / (n - alarms) : std::nan("");
  return est;
}

}  // namespace qdetect
