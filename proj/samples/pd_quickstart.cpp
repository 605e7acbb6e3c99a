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

// Builds the prisoner's dilemma detection model, solves for the stopping
// policy and replays one episode.

#include <iostream>

#include "qdetect/qdetect.hpp"

int main() {
  using namespace qdetect;
  const DecisionFrame frame = DecisionFrame::prisoners_dilemma(20, 5, 10, 25);
  const PsychParams params(0.812, 10.495, 0.9);
  const ChangeModel change = ChangeModel::with_change_probability(0.95);
  Eigen::MatrixXd b(2, 3);
  b << 0.6, 0.25, 0.15,
       0.15, 0.25, 0.6;
  const ObservationModel obs(b);
  const DetectionCosts costs(5.0, 1.0);

  const PsychParams no_belief_coupling(params.alpha(), params.lambda(), 0.0);
  for (int s : {1, 0}) {
    std::cout << "P(defect | opponent " << (s == 1 ? "defects" : "cooperates")
              << ") = " << defection_rate(frame, no_belief_coupling, BeliefVector::unit(2, s))
              << '\n';
  }

  const ActionKernel kernel = build_action_kernel(frame, params, change, obs, BeliefGrid(1000));
  const Solution quantum = value_iteration(kernel, change, costs);
  const Solution classical = classical_value_iteration(change, obs, costs, BeliefGrid(1000));
  std::cout << "threshold (agent actions) = " << *extract_threshold(quantum.policy).threshold
            << "\nthreshold (raw observations) = "
            << *extract_threshold(classical.policy).threshold << '\n';

  SteadyStateCache agent(frame, params);
  const EpisodeTrace trace =
      simulate_episode(agent, change, obs, costs, kernel, quantum.policy, /*seed=*/7);
  std::cout << trace_to_csv(trace, "sample");
  return 0;
}
