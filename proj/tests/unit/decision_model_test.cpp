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

Eigen::MatrixXcd random_density(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXcd g(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) g(i, j) = Complex(n(rng), n(rng));
  }
  Eigen::MatrixXcd rho = g * g.adjoint();
  return rho / rho.trace();
}

BeliefVector random_belief(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return BeliefVector::binary(u(rng));
}

PsychParams random_params(std::mt19937_64& rng, double alpha_lo = 0.1) {
  std::uniform_real_distribution<double> a(alpha_lo, 1.0), l(0.0, 100.0), p(0.0, 1.0);
  return PsychParams(a(rng), l(rng), p(rng));
}

TEST(PsychParams, RejectsOutOfDomain) {
  EXPECT_THROW(PsychParams(-0.1, 1, 0.5), ConfigError);
  EXPECT_THROW(PsychParams(1.1, 1, 0.5), ConfigError);
  EXPECT_THROW(PsychParams(0.5, -1, 0.5), ConfigError);
  EXPECT_THROW(PsychParams(0.5, 1, 1.5), ConfigError);
  EXPECT_NO_THROW(PsychParams(0.0, 0.0, 1.0));
}

TEST(DecisionFrame, RejectsNonpositiveUtility) {
  EXPECT_THROW(DecisionFrame::prisoners_dilemma(20, 0, 10, 25), ConfigError);
  EXPECT_THROW(DecisionFrame::prisoners_dilemma(20, 5, -1, 25), ConfigError);
}

TEST(BeliefVector, ValidatesSimplex) {
  EXPECT_THROW(BeliefVector(Eigen::Vector2d(0.6, 0.6)), ConfigError);
  EXPECT_THROW(BeliefVector(Eigen::Vector2d(-0.1, 1.1)), ConfigError);
  EXPECT_NO_THROW(BeliefVector(Eigen::Vector2d(0.25, 0.75)));
}

TEST(SubjectiveChoice, LambdaZeroIsUniform) {
  const Eigen::MatrixXd pi = subjective_choice_matrix(pd(), 0.0);
  for (int i = 0; i < 4; ++i) {
    const int block = i / 2 * 2;
    EXPECT_DOUBLE_EQ(pi(i, block), 0.5);
    EXPECT_DOUBLE_EQ(pi(i, block + 1), 0.5);
  }
}

TEST(SubjectiveChoice, LambdaOneMatchesPayoffRatio) {
  const Eigen::MatrixXd pi = subjective_choice_matrix(pd(), 1.0);
  EXPECT_NEAR(pi(0, 1), 25.0 / 45.0, 1e-12);
  EXPECT_NEAR(pi(2, 3), 10.0 / 15.0, 1e-12);
}

TEST(SubjectiveChoice, LargeLambdaSaturates) {
  const Eigen::MatrixXd pi = subjective_choice_matrix(pd(), 1000.0);
  EXPECT_NEAR(pi(0, 1), 1.0, 1e-9);
  EXPECT_NEAR(pi(2, 3), 1.0, 1e-9);
  EXPECT_TRUE(pi.allFinite());
}

TEST(SubjectiveChoice, MatchesDirectPowersAndRowsSumToOne) {
  for (double lambda : {0.3, 2.0, 10.495, 40.0}) {
    const Eigen::MatrixXd pi = subjective_choice_matrix(pd(), lambda);
    EXPECT_LT((pi - oracle::choice_matrix(pd(), lambda)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((pi.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
  }
}

TEST(BeliefMatrix, MatchesPrisonersDilemmaPattern) {
  for (double e1 : {1.0, 0.5, 0.3}) {
    Eigen::Matrix4d expected;
    expected << e1, 0, 1 - e1, 0,
                0, e1, 0, 1 - e1,
                e1, 0, 1 - e1, 0,
                0, e1, 0, 1 - e1;
    EXPECT_EQ(belief_matrix(pd(), BeliefVector::binary(e1)), Eigen::MatrixXd(expected));
  }
}

TEST(BeliefMatrix, UniformBeliefOnLargerFrame) {
  Eigen::MatrixXd u = Eigen::MatrixXd::Constant(3, 4, 2.0);
  const DecisionFrame frame(u);
  const Eigen::MatrixXd b = belief_matrix(frame, BeliefVector::uniform(4));
  for (int r = 0; r < b.rows(); ++r) {
    for (int c = 0; c < b.cols(); ++c) {
      if (b(r, c) != 0.0) {
        EXPECT_DOUBLE_EQ(b(r, c), 0.25);
      }
    }
  }
  EXPECT_THROW(belief_matrix(frame, BeliefVector::uniform(2)), ConfigError);
}

TEST(CognitiveMatrix, EndpointsAndMidpoint) {
  const BeliefVector eta = BeliefVector::uniform(2);
  const Eigen::MatrixXd pi_t = subjective_choice_matrix(pd(), 1.0).transpose();
  const Eigen::MatrixXd b_t = belief_matrix(pd(), eta).transpose();
  EXPECT_EQ(cognitive_matrix(pd(), PsychParams(0.5, 1.0, 0.0), eta), pi_t);
  EXPECT_EQ(cognitive_matrix(pd(), PsychParams(0.5, 1.0, 1.0), eta), b_t);
  const Eigen::MatrixXd mid = cognitive_matrix(pd(), PsychParams(0.5, 1.0, 0.5), eta);
  EXPECT_LT((mid - 0.5 * (pi_t + b_t)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Lindbladian, HamiltonianMatchesBlockOnes) {
  Eigen::Matrix4d expected;
  expected << 1, 1, 0, 0,
              1, 1, 0, 0,
              0, 0, 1, 1,
              0, 0, 1, 1;
  EXPECT_EQ(decision_hamiltonian(pd()), Eigen::MatrixXd(expected));
}

TEST(Lindbladian, PureCommutatorAnnihilatesIdentity) {
  const Superoperator l = assemble_lindbladian(pd(), PsychParams(0.0, 3.0, 0.4), BeliefVector::uniform(2));
  const Eigen::MatrixXcd out = l.apply(Eigen::MatrixXcd::Identity(4, 4) / 4.0);
  EXPECT_LT(out.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Lindbladian, DissipatorIsTraceFree) {
  std::mt19937_64 rng(11);
  const Superoperator l = assemble_lindbladian(pd(), PsychParams(1.0, 5.0, 0.6), BeliefVector::binary(0.2));
  for (int k = 0; k < 10; ++k) {
    EXPECT_LT(std::abs(l.apply(random_density(rng, 4)).trace()), 1e-12);
  }
}

TEST(Lindbladian, AgreesWithExplicitJumpOperators) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const PsychParams p = random_params(rng, 0.0);
    const BeliefVector eta = random_belief(rng);
    const Eigen::MatrixXcd rho = random_density(rng, 4);
    const Eigen::MatrixXcd lib = assemble_lindbladian(pd(), p, eta).apply(rho);
    EXPECT_LT((lib - oracle::lindblad_rhs(pd(), p, eta, rho)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Lindbladian, TraceZeroHermitianDirectionsStayTraceZero) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const Superoperator l = assemble_lindbladian(pd(), random_params(rng, 0.0), random_belief(rng));
    Eigen::MatrixXcd x = random_density(rng, 4) - random_density(rng, 4);
    x = 0.5 * (x + x.adjoint()).eval();
    EXPECT_LT(std::abs(l.apply(x).trace()), 1e-9);
  }
}

TEST(Evolve, ZeroTimeIsIdentity) {
  std::mt19937_64 rng(7);
  const DensityOperator rho0(random_density(rng, 4));
  const Superoperator l = assemble_lindbladian(pd(), PsychParams(0.5, 2.0, 0.5), BeliefVector::uniform(2));
  EXPECT_EQ(evolve(l, rho0, 0.0).matrix(), rho0.matrix());
  EXPECT_THROW(evolve(l, rho0, -1.0), ConfigError);
}

TEST(Evolve, PreservesDensityInvariants) {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 20; ++k) {
    const Superoperator l = assemble_lindbladian(pd(), random_params(rng, 0.0), random_belief(rng));
    const DensityOperator rho0(random_density(rng, 4));
    for (double t : {0.1, 1.0, 10.0}) {
      const DensityDiagnostics diag = evolve(l, rho0, t).diagnose();
      EXPECT_LE(diag.trace_error, 1e-9);
      EXPECT_LE(diag.hermiticity_error, 1e-10);
      EXPECT_GE(diag.min_eigenvalue, -1e-9);
    }
  }
}

TEST(Evolve, MatchesRungeKuttaIntegration) {
  std::mt19937_64 rng(23);
  const PsychParams p(0.6, 4.0, 0.3);
  const BeliefVector eta = BeliefVector::binary(0.7);
  const Eigen::MatrixXcd rho0 = random_density(rng, 4);
  const Eigen::MatrixXcd lib =
      evolve(assemble_lindbladian(pd(), p, eta), DensityOperator(rho0), 2.5).matrix();
  const Eigen::MatrixXcd rk = oracle::integrate(pd(), p, eta, rho0, 2.5, 1e-3);
  EXPECT_LT((lib - rk).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SteadyState, AlphaZeroUnsupported) {
  EXPECT_THROW(steady_state_distribution(pd(), PsychParams(0.0, 1.0, 0.5), BeliefVector::uniform(2)),
               UnsupportedParameter);
}

TEST(SteadyState, KnownOpponentDefectionRates) {
  // Belief coupling off: the agent relaxes inside the block of the known state.
  const PsychParams p(0.812, 10.495, 0.0);
  EXPECT_NEAR(defection_rate(pd(), p, BeliefVector::unit(2, 1)), 0.91, 0.02);
  EXPECT_NEAR(defection_rate(pd(), p, BeliefVector::unit(2, 0)), 0.84, 0.02);
}

TEST(SteadyState, NullSpaceAgreesWithLongTimeLimit) {
  const PsychParams p(1.0, 10.495, 0.9);
  const BeliefVector eta = BeliefVector::unit(2, 1);
  const SteadyState ss = steady_state(pd(), p, eta);
  EXPECT_FALSE(ss.used_long_time_fallback);
  const DensityOperator late = evolve(assemble_lindbladian(pd(), p, eta),
                                      DensityOperator::maximally_mixed(4), 400.0);
  const ActionDistribution g = action_distribution(pd(), late);
  EXPECT_LT((g.probabilities() - ss.gamma.probabilities()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(SteadyState, StationaryStateIsADensityOperatorInTheKernel) {
  std::mt19937_64 rng(29);
  for (int k = 0; k < 20; ++k) {
    const PsychParams p = random_params(rng);
    const BeliefVector eta = random_belief(rng);
    const SteadyState ss = steady_state(pd(), p, eta);
    const DensityOperator rho = DensityOperator::unchecked(ss.rho);
    EXPECT_TRUE(rho.diagnose().valid()) << "alpha=" << p.alpha() << " phi=" << p.phi();
    EXPECT_LT(assemble_lindbladian(pd(), p, eta).apply(ss.rho).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_NEAR(ss.gamma.probabilities().sum(), 1.0, 1e-9);
  }
}

TEST(SteadyState, IndependentOfInitialState) {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 10; ++k) {
    const PsychParams p = random_params(rng);
    const BeliefVector eta = random_belief(rng);
    if (p.phi() == 0.0) continue;
    const Superoperator l = assemble_lindbladian(pd(), p, eta);
    const SteadyState a = long_time_steady_state(pd(), l, DensityOperator(random_density(rng, 4)));
    const SteadyState b = long_time_steady_state(pd(), l, DensityOperator(random_density(rng, 4)));
    EXPECT_LT((a.gamma.probabilities() - b.gamma.probabilities()).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(SteadyState, DecoupledBlocksUseLongTimeFallback) {
  const SteadyState ss = steady_state(pd(), PsychParams(0.8, 5.0, 0.0), BeliefVector::uniform(2));
  EXPECT_TRUE(ss.used_long_time_fallback);
  EXPECT_NEAR(ss.gamma.probabilities().sum(), 1.0, 1e-9);
}

TEST(SteadyState, ContinuousInBelief) {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int k = 0; k < 20; ++k) {
    const PsychParams p = random_params(rng);
    const double e1 = u(rng);
    const auto g0 = steady_state_distribution(pd(), p, BeliefVector::binary(e1));
    const auto g1 = steady_state_distribution(pd(), p, BeliefVector::binary(e1 + 1e-6));
    EXPECT_LE((g0.probabilities() - g1.probabilities()).cwiseAbs().maxCoeff(), 1e-3);
  }
}

TEST(ActionDistribution, ClampsRoundoffAndRejectsRealNegatives) {
  const ActionDistribution ok(Eigen::Vector2d(1.0 + 5e-13, -5e-13));
  EXPECT_EQ(ok[1], 0.0);
  EXPECT_THROW(ActionDistribution(Eigen::Vector2d(1.1, -0.1)), NumericalError);
}

TEST(MatrixCsv, RowMajorWithRealAndImaginaryColumns) {
  Eigen::MatrixXcd m(1, 2);
  m << Complex(1.5, -2.0), Complex(0.0, 3.0);
  EXPECT_EQ(matrix_to_csv(m), "row,col,re,im\n0,0,1.5,-2\n0,1,0,3\n");
}

}  // namespace
}  // namespace qdetect
