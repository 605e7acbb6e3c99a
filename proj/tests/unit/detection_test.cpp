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

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qdetect/qdetect.hpp"

namespace qdetect {
namespace {

DecisionFrame pd() { return DecisionFrame::prisoners_dilemma(20, 5, 10, 25); }

Eigen::MatrixXd pd_b() {
  Eigen::MatrixXd b(2, 3);
  b << 0.6, 0.25, 0.15,
       0.15, 0.25, 0.6;
  return b;
}

const PsychParams kPd(0.812, 10.495, 0.9);

TEST(ChangeModel, TransitionMatrixAndReadings) {
  const ChangeModel m = ChangeModel::with_persistence(0.95);
  Eigen::Matrix2d expected;
  expected << 1, 0, 0.05, 0.95;
  EXPECT_LT((m.transition() - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_DOUBLE_EQ(ChangeModel::with_change_probability(0.95).persistence(), 1.0 - 0.95);
  EXPECT_EQ(m.initial_belief().probabilities(), Eigen::Vector2d(0, 1));
  EXPECT_THROW(ChangeModel::with_persistence(1.0), ConfigError);
}

TEST(ObservationModel, RowsMustBeDistributions) {
  Eigen::MatrixXd b = pd_b();
  b(0, 0) = 0.7;
  EXPECT_THROW(ObservationModel{b}, ConfigError);
  EXPECT_NO_THROW(ObservationModel{pd_b()});
}

TEST(PrivateBelief, AbsorbingStateIsFixed) {
  const ChangeModel ch = ChangeModel::with_persistence(0.95);
  for (int y = 0; y < 3; ++y) {
    const BeliefVector t = private_belief_update(BeliefVector::unit(2, 0), y, ch, ObservationModel(pd_b()));
    EXPECT_EQ(t[0], 1.0);
  }
}

TEST(PrivateBelief, UninformativeObservationsOnlyPredict) {
  Eigen::MatrixXd b(2, 2);
  b << 0.3, 0.7, 0.3, 0.7;
  const ChangeModel ch = ChangeModel::with_persistence(0.8);
  const BeliefVector t = private_belief_update(BeliefVector::binary(0.25), 1, ch, ObservationModel(b));
  EXPECT_NEAR(t[0], 0.25 + 0.2 * 0.75, 1e-15);
}

TEST(PrivateBelief, WorkedExample) {
  const BeliefVector t = private_belief_update(BeliefVector::uniform(2), 0,
                                               ChangeModel::with_persistence(0.95), ObservationModel(pd_b()));
  EXPECT_NEAR(t[0], 0.31500 / 0.38625, 1e-12);
  EXPECT_NEAR(t[1], 0.07125 / 0.38625, 1e-12);
  EXPECT_NEAR(t[0], 0.81553, 1e-5);
}

TEST(PrivateBelief, MatchesBayesRule) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double pi1 = u(rng), p = 0.99 * u(rng);
    const int y = static_cast<int>(rng() % 3);
    const auto [post, sigma] = oracle::bayes(pi1, y, p, pd_b());
    const ChangeModel ch = ChangeModel::with_persistence(p);
    const BeliefVector t = private_belief_update(BeliefVector::binary(pi1), y, ch, ObservationModel(pd_b()));
    EXPECT_NEAR(t[0], post, 1e-12);
    EXPECT_NEAR(t.probabilities().sum(), 1.0, 1e-12);
    EXPECT_NEAR(observation_probability(Eigen::Vector2d(pi1, 1 - pi1), y, ch, ObservationModel(pd_b())),
                sigma, 1e-14);
  }
}

TEST(PrivateBelief, ImpossibleObservationThrows) {
  Eigen::MatrixXd b(2, 2);
  b << 1.0, 0.0, 0.5, 0.5;
  // Post-change belief only emits y = 0.
  EXPECT_THROW(private_belief_update(BeliefVector::unit(2, 0), 1, ChangeModel::with_persistence(0.5),
                                     ObservationModel(b)),
               ImpossibleObservation);
}

class KernelTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    change_ = new ChangeModel(ChangeModel::with_persistence(0.95));
    kernel_ = new ActionKernel(build_action_kernel(pd(), kPd, *change_, ObservationModel(pd_b()), BeliefGrid(1000)));
  }
  static void TearDownTestSuite() {
    delete kernel_;
    delete change_;
  }
  static ChangeModel* change_;
  static ActionKernel* kernel_;
};
ChangeModel* KernelTest::change_ = nullptr;
ActionKernel* KernelTest::kernel_ = nullptr;

TEST_F(KernelTest, RowsAreDistributions) {
  const auto [sum_defect, min_entry] = kernel_->row_defect();
  EXPECT_LE(sum_defect, 1e-9);
  EXPECT_GE(min_entry, 0.0);
}

TEST_F(KernelTest, MatchesBruteForceAtEvenBelief) {
  const ObservationModel obs(pd_b());
  const int i = 500;
  ASSERT_DOUBLE_EQ(kernel_->grid().point(i), 0.5);
  for (int x = 0; x < 2; ++x) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(2);
    for (int y = 0; y < 3; ++y) {
      const auto [post, sigma] = oracle::bayes(0.5, y, 0.95, pd_b());
      r += oracle::long_time_gamma(pd(), kPd, BeliefVector::binary(post)) * pd_b()(x, y);
    }
    for (int a = 0; a < 2; ++a) EXPECT_NEAR(kernel_->r(i, x, a), r[a], 1e-8);
  }
}

TEST_F(KernelTest, BeliefBlindAgentGivesStateIndependentRows) {
  const ActionKernel k = build_action_kernel(pd(), PsychParams(0.812, 10.495, 0.0), *change_,
                                             ObservationModel(pd_b()), BeliefGrid(20));
  for (int i = 0; i < k.grid().size(); ++i) {
    for (int a = 0; a < 2; ++a) EXPECT_NEAR(k.r(i, 0, a), k.r(i, 1, a), 1e-12);
  }
}

TEST_F(KernelTest, PublicUpdateAbsorbingAndUninformative) {
  for (int a = 0; a < 2; ++a) {
    EXPECT_EQ(public_belief_update(BeliefVector::unit(2, 0), a, *change_, *kernel_).first[0], 1.0);
  }
  ActionKernel flat(BeliefGrid(4), 2, 1);
  for (int i = 0; i < 5; ++i) {
    for (int x = 0; x < 2; ++x) {
      flat.r(i, x, 0) = 0.3;
      flat.r(i, x, 1) = 0.7;
    }
  }
  const auto [t, sigma] = public_belief_update(BeliefVector::binary(0.4), 1, *change_, flat);
  EXPECT_NEAR(t[0], 0.4 + 0.05 * 0.6, 1e-15);
  EXPECT_NEAR(sigma, 0.7, 1e-15);
}

TEST_F(KernelTest, PublicUpdateDecomposesOverPrivateUpdates) {
  const ObservationModel obs(pd_b());
  std::mt19937_64 rng(9);
  for (int k = 0; k < 100; ++k) {
    const int i = static_cast<int>(rng() % kernel_->grid().size());
    const BeliefVector pi = BeliefVector::binary(kernel_->grid().point(i));
    for (int a = 0; a < 2; ++a) {
      const auto [tbar, sigma_bar] = public_belief_update(pi, a, *change_, *kernel_);
      Eigen::Vector2d sum = Eigen::Vector2d::Zero();
      for (int y = 0; y < 3; ++y) {
        const Eigen::Vector2d pv(pi[0], pi[1]);
        const double sigma = observation_probability(pv, y, *change_, obs);
        if (sigma == 0.0) continue;
        const BeliefVector t = private_belief_update(pi, y, *change_, obs);
        sum += t.probabilities() * (sigma / sigma_bar) * kernel_->gamma(i, y, a);
      }
      EXPECT_LT((sum - tbar.probabilities()).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST_F(KernelTest, ZeroProbabilityActionThrows) {
  ActionKernel k(BeliefGrid(2), 2, 1);
  for (int i = 0; i < 3; ++i) {
    for (int x = 0; x < 2; ++x) k.r(i, x, 0) = 1.0;
  }
  EXPECT_THROW(public_belief_update(BeliefVector::uniform(2), 1, *change_, k), ImpossibleAction);
}

TEST_F(KernelTest, PointMassMixtureReproducesKernel) {
  const BeliefGrid grid(50);
  const ObservationModel obs(pd_b());
  const ActionKernel a = build_action_kernel(pd(), kPd, *change_, obs, grid);
  const ActionKernel b = build_mismatched_kernel(pd(), ParameterMixture::point(kPd), *change_, obs, grid);
  for (int i = 0; i < grid.size(); ++i) {
    for (int x = 0; x < 2; ++x) {
      for (int act = 0; act < 2; ++act) EXPECT_NEAR(a.r(i, x, act), b.r(i, x, act), 1e-12);
    }
  }
}

TEST_F(KernelTest, EqualWeightMixtureIsElementwiseMean) {
  const BeliefGrid grid(50);
  const ObservationModel obs(pd_b());
  const PsychParams other(0.4, 30.0, 0.5);
  const ActionKernel a = build_action_kernel(pd(), kPd, *change_, obs, grid);
  const ActionKernel b = build_action_kernel(pd(), other, *change_, obs, grid);
  const ActionKernel m = build_mismatched_kernel(pd(), ParameterMixture({{kPd, 0.5}, {other, 0.5}}), *change_, obs, grid);
  for (int i = 0; i < grid.size(); ++i) {
    for (int x = 0; x < 2; ++x) {
      for (int act = 0; act < 2; ++act) {
        EXPECT_NEAR(m.r(i, x, act), 0.5 * (a.r(i, x, act) + b.r(i, x, act)), 1e-12);
      }
    }
  }
}

TEST_F(KernelTest, TwoAtomMixtureMatchesDoubleSum) {
  const BeliefGrid grid(20);
  const ObservationModel obs(pd_b());
  const PsychParams alt(0.7, 10.495, 0.9);
  const ActionKernel m = build_mismatched_kernel(pd(), ParameterMixture({{kPd, 0.8}, {alt, 0.2}}), *change_, obs, grid);
  for (int i = 0; i < grid.size(); ++i) {
    for (int x = 0; x < 2; ++x) {
      for (int a = 0; a < 2; ++a) {
        double s = 0.0;
        for (const auto& [params, w] : {std::pair{kPd, 0.8}, std::pair{alt, 0.2}}) {
          for (int y = 0; y < 3; ++y) {
            const BeliefVector eta = kernel_private_belief(grid.point(i), y, *change_, obs);
            s += w * steady_state_distribution(pd(), params, eta)[a] * pd_b()(x, y);
          }
        }
        EXPECT_NEAR(m.r(i, x, a), s, 1e-10);
      }
    }
  }
}

TEST_F(KernelTest, CsvRoundTripAndHashCheck) {
  const std::string text = kernel_to_csv(*kernel_, "abc");
  std::istringstream is(text);
  const csv::Table table = csv::parse(is);
  const ActionKernel back = kernel_from_csv(table, "abc");
  for (int i = 0; i < back.grid().size(); i += 37) {
    for (int x = 0; x < 2; ++x) {
      for (int a = 0; a < 2; ++a) EXPECT_EQ(back.r(i, x, a), kernel_->r(i, x, a));
    }
  }
  EXPECT_THROW(kernel_from_csv(table, "other"), CacheMiss);
}

TEST_F(KernelTest, ExpectedPublicBeliefDriftsTowardChange) {
  SteadyStateCache agent(pd(), kPd);
  const ObservationModel obs(pd_b());
  Rng rng(42);
  BeliefVector pi = change_->initial_belief();
  int x = 1;
  for (int n = 0; n < 1000; ++n) {
    double expected = 0.0;
    for (int a = 0; a < 2; ++a) {
      const auto [t, sigma] = public_belief_update(pi, a, *change_, *kernel_);
      expected += t[0] * sigma;
    }
    EXPECT_GE(expected, pi[0] - 1e-12);
    if (x == 1 && rng.uniform() >= change_->persistence()) x = 0;
    const int y = rng.categorical(obs.table().row(x), 3);
    const Eigen::VectorXd g = agent.get(private_belief_update(pi, y, *change_, obs));
    pi = public_belief_update(pi, rng.categorical(g, 2), *change_, *kernel_).first;
    EXPECT_NEAR(pi.probabilities().sum(), 1.0, 1e-12);
  }
}

TEST(Episode, AlwaysStopCostsFalseAlarmBeforeChange) {
  const ChangeModel ch = ChangeModel::with_persistence(0.7);
  const ObservationModel obs(pd_b());
  const ActionKernel k = build_action_kernel(pd(), kPd, ch, obs, BeliefGrid(20));
  const Policy stop = Policy::constant(k.grid(), 1);
  SteadyStateCache agent(pd(), kPd);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const EpisodeTrace t = simulate_episode(agent, ch, obs, DetectionCosts(5, 1), k, stop, s);
    EXPECT_EQ(t.stop_time, 1);
    ASSERT_EQ(t.steps.size(), 1u);
    EXPECT_EQ(t.cost, t.change_time > 1 ? 5.0 : 0.0);
  }
  const CostEstimate est = estimate_cost(agent, ch, obs, DetectionCosts(5, 1), k, stop, 3, 20000);
  const double se = std::sqrt(0.7 * 0.3 / 20000);
  EXPECT_NEAR(est.false_alarm_rate, 0.7, 3 * se);
}

TEST(Episode, ImmediateChangeAndStopIsFree) {
  const ChangeModel ch = ChangeModel::with_persistence(0.0);
  const ObservationModel obs(pd_b());
  const ActionKernel k = build_action_kernel(pd(), kPd, ch, obs, BeliefGrid(10));
  SteadyStateCache agent(pd(), kPd);
  const CostEstimate est = estimate_cost(agent, ch, obs, DetectionCosts(5, 1), k,
                                         Policy::constant(k.grid(), 1), 1, 500);
  EXPECT_EQ(est.mean, 0.0);
  EXPECT_EQ(est.standard_error, 0.0);
}

TEST(Episode, SeedDeterminesTraceAndCsv) {
  const ChangeModel ch = ChangeModel::with_persistence(0.9);
  const ObservationModel obs(pd_b());
  const ActionKernel k = build_action_kernel(pd(), kPd, ch, obs, BeliefGrid(100));
  const Solution sol = value_iteration(k, ch, DetectionCosts(5, 1));
  SteadyStateCache agent(pd(), kPd);
  const EpisodeTrace a = simulate_episode(agent, ch, obs, DetectionCosts(5, 1), k, sol.policy, 99);
  const EpisodeTrace b = simulate_episode(agent, ch, obs, DetectionCosts(5, 1), k, sol.policy, 99);
  EXPECT_EQ(trace_to_csv(a, "h"), trace_to_csv(b, "h"));
  EXPECT_EQ(a.steps.back().u, 1);
  for (std::size_t n = 0; n + 1 < a.steps.size(); ++n) EXPECT_EQ(a.steps[n].u, 2);
  const double expected = (a.stop_time < a.change_time ? 5.0 : 0.0) +
                          std::max<std::int64_t>(a.stop_time - a.change_time, 0);
  EXPECT_EQ(a.cost, expected);
}

TEST(Episode, StepCapRaisesRunaway) {
  const ChangeModel ch = ChangeModel::with_persistence(0.5);
  const ObservationModel obs(pd_b());
  const ActionKernel k = build_action_kernel(pd(), kPd, ch, obs, BeliefGrid(10));
  SteadyStateCache agent(pd(), kPd);
  EpisodeOptions opts;
  opts.step_cap = 25;
  EXPECT_THROW(simulate_episode(agent, ch, obs, DetectionCosts(5, 1), k, Policy::constant(k.grid(), 2), 0, 0, opts),
               RunawayEpisode);
}

TEST(Episode, DoublingEpisodesHalvesVarianceOfMean) {
  const ChangeModel ch = ChangeModel::with_persistence(0.9);
  const ObservationModel obs(pd_b());
  const ActionKernel k = build_action_kernel(pd(), kPd, ch, obs, BeliefGrid(100));
  const Solution sol = value_iteration(k, ch, DetectionCosts(5, 1));
  SteadyStateCache agent(pd(), kPd);
  const CostEstimate small = estimate_cost(agent, ch, obs, DetectionCosts(5, 1), k, sol.policy, 5, 4000);
  const CostEstimate large = estimate_cost(agent, ch, obs, DetectionCosts(5, 1), k, sol.policy, 6, 8000);
  const double ratio = std::pow(small.standard_error / large.standard_error, 2);
  EXPECT_GT(ratio, 1.6);
  EXPECT_LT(ratio, 2.5);
}

TEST(Episode, MonteCarloMatchesDynamicProgramming) {
  for (const ChangeModel ch : {ChangeModel::with_change_probability(0.95), ChangeModel::with_persistence(0.9)}) {
    const ObservationModel obs(pd_b());
    const ActionKernel k = build_action_kernel(pd(), kPd, ch, obs, BeliefGrid(1000));
    const Solution sol = value_iteration(k, ch, DetectionCosts(5, 1));
    const double dp = quantum_branches(k, ch).expected_next(sol.value.values, 0);
    SteadyStateCache agent(pd(), kPd);
    const CostEstimate est = estimate_cost(agent, ch, obs, DetectionCosts(5, 1), k, sol.policy, 2026, 10000);
    EXPECT_NEAR(est.mean, dp, 3 * est.standard_error) << "persistence " << ch.persistence();
  }
}

}  // namespace
}  // namespace qdetect
