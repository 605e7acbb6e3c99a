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

// Open-system (Lindblad) model of a human decision maker. The agent's
// psychological state is a density operator on H_X (x) H_A, with basis index
// state * n_actions + action (state-major blocks). Decisions are drawn from
// the stationary action distribution of the generator.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <sstream>
#include <string>
#include <vector>

#include "qdetect/csv.hpp"
#include "qdetect/error.hpp"

namespace qdetect {

using Complex = std::complex<double>;

class PsychParams {
 public:
  PsychParams(double alpha, double lambda, double phi)
      : alpha_(alpha), lambda_(lambda), phi_(phi) {
    if (!(alpha >= 0.0 && alpha <= 1.0) || !(phi >= 0.0 && phi <= 1.0) ||
        !(lambda >= 0.0) || !std::isfinite(lambda)) {
      std::ostringstream os;
      os << "psych params out of domain [0,1]x[0,inf)x[0,1]: alpha=" << alpha
         << " lambda=" << lambda << " phi=" << phi;
      throw ConfigError(os.str());
    }
  }

  double alpha() const { return alpha_; }
  double lambda() const { return lambda_; }
  double phi() const { return phi_; }

  // Convex combination w * a + (1 - w) * b, componentwise.
  static PsychParams blend(const PsychParams& a, const PsychParams& b, double w) {
    return PsychParams(w * a.alpha_ + (1 - w) * b.alpha_,
                       w * a.lambda_ + (1 - w) * b.lambda_,
                       w * a.phi_ + (1 - w) * b.phi_);
  }

  friend bool operator==(const PsychParams&, const PsychParams&) = default;

 private:
  double alpha_;
  double lambda_;
  double phi_;
};

class DecisionFrame {
 public:
  // utility(a, x) = u(a | x); shape n_actions x n_states, all entries > 0.
  explicit DecisionFrame(Eigen::MatrixXd utility) : utility_(std::move(utility)) {
    if (utility_.rows() < 1 || utility_.cols() < 1) {
      throw ConfigError("decision frame needs at least one state and one action");
    }
    for (Eigen::Index a = 0; a < utility_.rows(); ++a) {
      for (Eigen::Index x = 0; x < utility_.cols(); ++x) {
        const double u = utility_(a, x);
        if (!(u > 0.0) || !std::isfinite(u)) {
          std::ostringstream os;
          os << "utility u(a=" << a << "|x=" << x << ") = " << u
             << " must be finite and strictly positive";
          throw ConfigError(os.str());
        }
      }
    }
  }

  // Prisoner's Dilemma frame. States and actions are ordered
  // {0: cooperate, 1: defect}; payoffs a = u(C|C), b = u(C|D), c = u(D|D),
  // d = u(D|C).
  static DecisionFrame prisoners_dilemma(double a, double b, double c, double d) {
    Eigen::MatrixXd u(2, 2);
    u << a, b,
         d, c;
    return DecisionFrame(std::move(u));
  }

  int n_states() const { return static_cast<int>(utility_.cols()); }
  int n_actions() const { return static_cast<int>(utility_.rows()); }
  int dim() const { return n_states() * n_actions(); }
  int index(int state, int action) const { return state * n_actions() + action; }
  double utility(int action, int state) const { return utility_(action, state); }
  const Eigen::MatrixXd& utility_table() const { return utility_; }

 private:
  Eigen::MatrixXd utility_;
};

class BeliefVector {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit BeliefVector(Eigen::VectorXd p) : p_(std::move(p)) {
    if (p_.size() < 1) throw ConfigError("belief vector is empty");
    for (Eigen::Index i = 0; i < p_.size(); ++i) {
      if (!(p_[i] >= 0.0) || !std::isfinite(p_[i])) {
        throw ConfigError("belief entries must be finite and nonnegative");
      }
    }
    if (std::abs(p_.sum() - 1.0) > kSumTolerance) {
      std::ostringstream os;
      os.precision(17);
      os << "belief does not sum to 1 (sum=" << p_.sum() << ")";
      throw ConfigError(os.str());
    }
  }

  // Renormalizes a nonnegative vector, clamping round-off negatives.
  static BeliefVector normalized(Eigen::VectorXd v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (v[i] < 0.0 && v[i] > -1e-12) v[i] = 0.0;
    }
    const double s = v.sum();
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw ConfigError("cannot normalize belief with nonpositive mass");
    }
    v /= s;
    return BeliefVector(std::move(v));
  }

  // Two-state belief (pi(1), 1 - pi(1)).
  static BeliefVector binary(double pi1) {
    Eigen::VectorXd v(2);
    v << pi1, 1.0 - pi1;
    return BeliefVector(std::move(v));
  }

  static BeliefVector uniform(int n) {
    return BeliefVector(Eigen::VectorXd::Constant(n, 1.0 / n));
  }

  static BeliefVector unit(int n, int k) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    v[k] = 1.0;
    return BeliefVector(std::move(v));
  }

  int size() const { return static_cast<int>(p_.size()); }
  double operator[](int i) const { return p_[i]; }
  const Eigen::VectorXd& probabilities() const { return p_; }

 private:
  Eigen::VectorXd p_;
};

struct DensityDiagnostics {
  double hermiticity_error = 0.0;  // max |rho - rho^dagger| elementwise
  double trace_error = 0.0;        // |tr(rho) - 1|
  double min_eigenvalue = 0.0;     // of the Hermitian part

  bool valid(double herm_tol = 1e-10, double trace_tol = 1e-10,
             double psd_tol = 1e-9) const {
    return hermiticity_error <= herm_tol && trace_error <= trace_tol &&
           min_eigenvalue >= -psd_tol;
  }
};

class DensityOperator {
 public:
  // Validates Hermiticity, unit trace and positivity.
  explicit DensityOperator(Eigen::MatrixXcd rho) : rho_(std::move(rho)) {
    if (rho_.rows() != rho_.cols() || rho_.rows() == 0) {
      throw ConfigError("density operator must be a nonempty square matrix");
    }
    const DensityDiagnostics diag = diagnose();
    if (!diag.valid()) {
      std::ostringstream os;
      os << "not a density operator: hermiticity error " << diag.hermiticity_error
         << ", trace error " << diag.trace_error << ", min eigenvalue "
         << diag.min_eigenvalue;
      throw ConfigError(os.str());
    }
  }

  static DensityOperator maximally_mixed(int d) {
    return DensityOperator(Eigen::MatrixXcd::Identity(d, d) / static_cast<double>(d));
  }

  // Skips validation; used for evolved states whose invariants are checked
  // by the caller through diagnose().
  static DensityOperator unchecked(Eigen::MatrixXcd rho) {
    DensityOperator out;
    out.rho_ = std::move(rho);
    return out;
  }

  DensityDiagnostics diagnose() const {
    DensityDiagnostics diag;
    diag.hermiticity_error = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
    diag.trace_error = std::abs(rho_.trace() - Complex(1.0, 0.0));
    const Eigen::MatrixXcd herm = 0.5 * (rho_ + rho_.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
    diag.min_eigenvalue = es.eigenvalues().minCoeff();
    return diag;
  }

  int dim() const { return static_cast<int>(rho_.rows()); }
  const Eigen::MatrixXcd& matrix() const { return rho_; }

 private:
  DensityOperator() = default;
  Eigen::MatrixXcd rho_;
};

class ActionDistribution {
 public:
  static constexpr double kNegativeTolerance = 1e-12;
  static constexpr double kSumTolerance = 1e-9;

  explicit ActionDistribution(Eigen::VectorXd p) : p_(std::move(p)) {
    for (Eigen::Index i = 0; i < p_.size(); ++i) {
      if (!std::isfinite(p_[i]) || p_[i] < -kNegativeTolerance) {
        std::ostringstream os;
        os << "action probability " << i << " = " << p_[i] << " is invalid";
        throw NumericalError("InvalidDistribution", os.str());
      }
      if (p_[i] < 0.0) p_[i] = 0.0;
    }
    if (std::abs(p_.sum() - 1.0) > kSumTolerance) {
      std::ostringstream os;
      os.precision(17);
      os << "action distribution sums to " << p_.sum();
      throw NumericalError("InvalidDistribution", os.str());
    }
  }

  int size() const { return static_cast<int>(p_.size()); }
  double operator[](int a) const { return p_[a]; }
  const Eigen::VectorXd& probabilities() const { return p_; }

 private:
  Eigen::VectorXd p_;
};

// Generator acting on column-stacked density operators:
// vec(rho)[p + q * d] = rho(p, q).
class Superoperator {
 public:
  explicit Superoperator(Eigen::MatrixXcd generator)
      : generator_(std::move(generator)),
        dim_(static_cast<int>(std::lround(std::sqrt(static_cast<double>(generator_.rows()))))) {
    if (generator_.rows() != generator_.cols() ||
        static_cast<Eigen::Index>(dim_) * dim_ != generator_.rows()) {
      throw ConfigError("superoperator must be a d^2 x d^2 matrix");
    }
  }

  int dim() const { return dim_; }
  const Eigen::MatrixXcd& generator() const { return generator_; }

  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& rho) const {
    return devectorize(generator_ * vectorize(rho), dim_);
  }

  static Eigen::VectorXcd vectorize(const Eigen::MatrixXcd& m) {
    return Eigen::Map<const Eigen::VectorXcd>(m.data(), m.size());
  }

  static Eigen::MatrixXcd devectorize(const Eigen::VectorXcd& v, int d) {
    return Eigen::Map<const Eigen::MatrixXcd>(v.data(), d, d);
  }

 private:
  Eigen::MatrixXcd generator_;
  int dim_;
};

struct SteadyStateConfig {
  double null_tolerance = 1e-9;   // |eigenvalue| regarded as zero
  double probe_start = 50.0;      // first long-time probe T
  double probe_agreement = 1e-8;  // max |Gamma(T) - Gamma(2T)|
  int max_doublings = 24;
};

// Pi(lambda): block diagonal, block l has every row equal to the softmax
// p(a_j | state l) = u(a_j|l)^lambda / sum_j u(a_j|l)^lambda.
inline Eigen::MatrixXd subjective_choice_matrix(const DecisionFrame& frame, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("lambda must be finite and nonnegative");
  }
  const int n = frame.n_states();
  const int na = frame.n_actions();
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(frame.dim(), frame.dim());
  Eigen::VectorXd logw(na);
  for (int l = 0; l < n; ++l) {
    for (int j = 0; j < na; ++j) logw[j] = lambda * std::log(frame.utility(j, l));
    const double top = logw.maxCoeff();
    Eigen::VectorXd w = (logw.array() - top).exp().matrix();
    w /= w.sum();
    if (!w.allFinite()) {
      throw NumericalError("NonFinite", "subjective choice probabilities are not finite");
    }
    for (int i = 0; i < na; ++i) {
      pi.block(frame.index(l, i), frame.index(l, 0), 1, na) = w.transpose();
    }
  }
  return pi;
}

// B(eta): B[(k,i),(l,j)] = eta(l) * delta_ij. Every row moves the agent to
// state l with probability eta(l) while keeping the action.
inline Eigen::MatrixXd belief_matrix(const DecisionFrame& frame, const BeliefVector& eta) {
  if (eta.size() != frame.n_states()) {
    std::ostringstream os;
    os << "belief has " << eta.size() << " entries, frame has " << frame.n_states()
       << " states";
    throw ConfigError(os.str());
  }
  const int n = frame.n_states();
  const int na = frame.n_actions();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(frame.dim(), frame.dim());
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < na; ++i) {
      for (int l = 0; l < n; ++l) b(frame.index(k, i), frame.index(l, i)) = eta[l];
    }
  }
  return b;
}

// C = (1 - phi) Pi^T(lambda) + phi B^T; entry (m, n) is the rate of the jump
// |m><n|.
inline Eigen::MatrixXd cognitive_matrix(const DecisionFrame& frame, const PsychParams& params,
                                        const BeliefVector& eta) {
  return (1.0 - params.phi()) * subjective_choice_matrix(frame, params.lambda()).transpose() +
         params.phi() * belief_matrix(frame, eta).transpose();
}

// H = diag(1_A, ..., 1_A): all-ones block per state.
inline Eigen::MatrixXd decision_hamiltonian(const DecisionFrame& frame) {
  const int na = frame.n_actions();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(frame.dim(), frame.dim());
  for (int l = 0; l < frame.n_states(); ++l) {
    h.block(frame.index(l, 0), frame.index(l, 0), na, na).setOnes();
  }
  return h;
}

inline Superoperator assemble_lindbladian(const DecisionFrame& frame, const PsychParams& params,
                                          const BeliefVector& eta) {
  const int d = frame.dim();
  const Eigen::MatrixXd rates = cognitive_matrix(frame, params, eta);
  const Eigen::MatrixXd h = decision_hamiltonian(frame);
  const Complex coherent(0.0, -(1.0 - params.alpha()));
  const double alpha = params.alpha();
  auto idx = [d](int p, int q) { return p + q * d; };

  Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(d * d, d * d);
  // -i(1-alpha)[H, rho]
  for (int p = 0; p < d; ++p) {
    for (int q = 0; q < d; ++q) {
      for (int j = 0; j < d; ++j) {
        if (h(p, j) != 0.0) g(idx(p, q), idx(j, q)) += coherent * h(p, j);
        if (h(j, q) != 0.0) g(idx(p, q), idx(p, j)) -= coherent * h(j, q);
      }
    }
  }
  // alpha * gamma_(m,k) * (L rho L^dag - 1/2 {L^dag L, rho}),  L = |m><k|
  for (int m = 0; m < d; ++m) {
    for (int k = 0; k < d; ++k) {
      const double rate = alpha * rates(m, k);
      if (rate == 0.0) continue;
      g(idx(m, m), idx(k, k)) += rate;
      for (int q = 0; q < d; ++q) g(idx(k, q), idx(k, q)) -= 0.5 * rate;
      for (int p = 0; p < d; ++p) g(idx(p, k), idx(p, k)) -= 0.5 * rate;
    }
  }
  return Superoperator(std::move(g));
}

// rho(t) = devec(exp(L t) vec(rho0)).
inline DensityOperator evolve(const Superoperator& superop, const DensityOperator& rho0, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("evolution time must be finite and >= 0");
  if (rho0.dim() != superop.dim()) throw ConfigError("initial state dimension mismatch");
  if (t == 0.0) return rho0;
  const Eigen::MatrixXcd propagator = (superop.generator() * t).exp();
  Eigen::VectorXcd v = propagator * Superoperator::vectorize(rho0.matrix());
  if (!v.allFinite()) {
    throw NumericalError("NonFinite", "matrix exponential produced non-finite entries");
  }
  return DensityOperator::unchecked(Superoperator::devectorize(v, superop.dim()));
}

// Gamma(a) = tr(P_a rho P_a) with P_a projecting onto every basis vector
// whose action index is a.
inline Eigen::VectorXd action_marginal(const DecisionFrame& frame, const Eigen::MatrixXcd& rho) {
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(frame.n_actions());
  for (int x = 0; x < frame.n_states(); ++x) {
    for (int a = 0; a < frame.n_actions(); ++a) {
      gamma[a] += rho(frame.index(x, a), frame.index(x, a)).real();
    }
  }
  return gamma;
}

inline ActionDistribution action_distribution(const DecisionFrame& frame, const DensityOperator& rho) {
  return ActionDistribution(action_marginal(frame, rho.matrix()));
}

struct SteadyState {
  Eigen::MatrixXcd rho;
  ActionDistribution gamma;
  bool used_long_time_fallback = false;
};

// Long-time limit of the action distribution from a given initial state:
// probes at T and 2T with T doubling from probe_start until they agree.
inline SteadyState long_time_steady_state(const DecisionFrame& frame, const Superoperator& superop,
                                          const DensityOperator& rho0,
                                          const SteadyStateConfig& cfg = {}) {
  double t = cfg.probe_start;
  Eigen::MatrixXcd propagator = (superop.generator() * t).exp();
  Eigen::VectorXcd v0 = Superoperator::vectorize(rho0.matrix());
  Eigen::VectorXd last_first, last_second;
  for (int doubling = 0; doubling <= cfg.max_doublings; ++doubling) {
    const Eigen::VectorXcd at_t = propagator * v0;
    const Eigen::VectorXcd at_2t = propagator * at_t;
    if (!at_2t.allFinite()) {
      throw NumericalError("NonFinite", "long-time evolution produced non-finite entries");
    }
    const int d = superop.dim();
    last_first = action_marginal(frame, Superoperator::devectorize(at_t, d));
    last_second = action_marginal(frame, Superoperator::devectorize(at_2t, d));
    if ((last_first - last_second).cwiseAbs().maxCoeff() <= cfg.probe_agreement) {
      Eigen::MatrixXcd rho = Superoperator::devectorize(at_2t, d);
      rho = 0.5 * (rho + rho.adjoint()).eval();
      return SteadyState{rho, ActionDistribution(last_second / last_second.sum()), true};
    }
    propagator = (propagator * propagator).eval();
    t *= 2.0;
  }
  std::ostringstream os;
  os.precision(17);
  os << "long-time probes disagree at T=" << t / 2 << ": Gamma(T)=[" << last_first.transpose()
     << "] Gamma(2T)=[" << last_second.transpose() << "]";
  throw NonConvergence(os.str(), (last_first - last_second).cwiseAbs().maxCoeff());
}

// sum_l eta(l) |l><l| (x) I_A / A: the agent starts with the belief eta over
// states and no action preference.
inline DensityOperator belief_weighted_start(const DecisionFrame& frame, const BeliefVector& eta) {
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(frame.dim(), frame.dim());
  for (int l = 0; l < frame.n_states(); ++l) {
    for (int a = 0; a < frame.n_actions(); ++a) {
      rho(frame.index(l, a), frame.index(l, a)) = eta[l] / frame.n_actions();
    }
  }
  return DensityOperator(std::move(rho));
}

// Stationary state of the generator. Uses the one-dimensional null space when
// it exists; otherwise falls back to long-time evolution from fallback_start
// (I/d when absent).
inline SteadyState steady_state(const DecisionFrame& frame, const PsychParams& params,
                                const BeliefVector& eta, const SteadyStateConfig& cfg = {},
                                const DensityOperator* fallback_start = nullptr) {
  if (params.alpha() <= 1e-12) {
    throw UnsupportedParameter(
        "alpha = 0 is purely Hamiltonian and has no attracting steady state");
  }
  const Superoperator superop = assemble_lindbladian(frame, params, eta);
  const int d = superop.dim();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(superop.generator(), true);
  if (es.info() == Eigen::Success) {
    int zero_count = 0;
    Eigen::Index zero_at = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      if (std::abs(es.eigenvalues()[i]) <= cfg.null_tolerance) {
        ++zero_count;
        zero_at = i;
      }
    }
    if (zero_count == 1) {
      Eigen::MatrixXcd rho = Superoperator::devectorize(es.eigenvectors().col(zero_at), d);
      const Complex tr = rho.trace();
      if (std::abs(tr) > 1e-12) {
        rho /= tr;
        rho = 0.5 * (rho + rho.adjoint()).eval();
        Eigen::VectorXd gamma = action_marginal(frame, rho);
        return SteadyState{rho, ActionDistribution(gamma / gamma.sum()), false};
      }
    }
  }
  if (fallback_start != nullptr) return long_time_steady_state(frame, superop, *fallback_start, cfg);
  return long_time_steady_state(frame, superop, DensityOperator::maximally_mixed(d), cfg);
}

inline ActionDistribution steady_state_distribution(const DecisionFrame& frame,
                                                    const PsychParams& params,
                                                    const BeliefVector& eta,
                                                    const SteadyStateConfig& cfg = {}) {
  return steady_state(frame, params, eta, cfg).gamma;
}

// Debug dump, one row per entry in row-major order: row,col,re,im.
inline std::string matrix_to_csv(const Eigen::MatrixXcd& m) {
  std::string out = "row,col,re,im\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out += csv::join({std::to_string(r), std::to_string(c), csv::num(m(r, c).real()),
                        csv::num(m(r, c).imag())});
      out += '\n';
    }
  }
  return out;
}

}  // namespace qdetect
