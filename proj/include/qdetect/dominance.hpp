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

// Blackwell dominance between two families of action distributions indexed by
// observation y: Gamma_y = Gamma-hat_y M for one row-stochastic M shared by
// every y.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "qdetect/decision_model.hpp"
#include "qdetect/detection.hpp"
#include "qdetect/error.hpp"
#include "qdetect/lp.hpp"

namespace qdetect {

using DistributionFamily = std::vector<Eigen::VectorXd>;  // one distribution per y

struct StochasticityDefect {
  double row_sum = 0.0;     // max |row sum - 1|
  double column_sum = 0.0;  // max |column sum - 1|
  double min_entry = 0.0;   // most negative entry (0 when none)
};

inline StochasticityDefect stochasticity_defect(const Eigen::MatrixXd& m) {
  StochasticityDefect d;
  d.row_sum = (m.rowwise().sum().array() - 1.0).abs().maxCoeff();
  d.column_sum = (m.colwise().sum().array() - 1.0).abs().maxCoeff();
  d.min_entry = std::min(0.0, m.minCoeff());
  return d;
}

struct DominanceCertificate {
  Eigen::MatrixXd m;
  double residual = 0.0;  // max_{y,a} |Gamma_y(a) - sum_i Gamma-hat_y(i) M(i,a)|
  StochasticityDefect defect;
};

inline double garbling_residual(const DistributionFamily& gamma_hat,
                                const DistributionFamily& gamma, const Eigen::MatrixXd& m) {
  double worst = 0.0;
  for (std::size_t y = 0; y < gamma.size(); ++y) {
    const Eigen::VectorXd mixed = m.transpose() * gamma_hat[y];
    worst = std::max(worst, (gamma[y] - mixed).cwiseAbs().maxCoeff());
  }
  return worst;
}

namespace detail {

inline void check_families(const DistributionFamily& gamma_hat, const DistributionFamily& gamma) {
  if (gamma_hat.empty() || gamma_hat.size() != gamma.size()) {
    throw ConfigError("dominance families need the same nonzero number of observations");
  }
  const auto na = gamma_hat.front().size();
  for (std::size_t y = 0; y < gamma.size(); ++y) {
    if (gamma_hat[y].size() != na || gamma[y].size() != na) {
      throw ConfigError("dominance families need the same action count");
    }
  }
}

inline DominanceCertificate certify(const DistributionFamily& gamma_hat,
                                    const DistributionFamily& gamma, Eigen::MatrixXd m) {
  DominanceCertificate cert;
  cert.residual = garbling_residual(gamma_hat, gamma, m);
  cert.defect = stochasticity_defect(m);
  cert.m = std::move(m);
  return cert;
}

}  // namespace detail

// Two actions: M = [[1-s, s], [t, 1-t]] and the residual of action 1 at y is
// g_y - h_y(0) s - h_y(1) (1 - t) (action 0 has the negated residual). The
// minimax problem over (s, t, r) is a 3-variable LP whose optimum sits on a
// vertex cut out by three of the planes r = +-residual_y, s in {0,1},
// t in {0,1}; all triples are enumerated.
inline DominanceCertificate best_garbling_two_actions(const DistributionFamily& gamma_hat,
                                                      const DistributionFamily& gamma) {
  struct Plane {
    Eigen::Vector3d n;  // coefficients on (s, t, r)
    double rhs;
  };
  std::vector<Plane> planes;
  // residual_y = c_y + u_y s + v_y t with c = g - h1, u = -h0, v = h1.
  std::vector<Eigen::Vector3d> affine;  // (c, u, v)
  for (std::size_t y = 0; y < gamma.size(); ++y) {
    const double c = gamma[y][1] - gamma_hat[y][1];
    const double u = -gamma_hat[y][0];
    const double v = gamma_hat[y][1];
    affine.emplace_back(c, u, v);
    planes.push_back({Eigen::Vector3d(-u, -v, 1.0), c});   // r = residual
    planes.push_back({Eigen::Vector3d(u, v, 1.0), -c});    // r = -residual
  }
  planes.push_back({Eigen::Vector3d(1, 0, 0), 0.0});
  planes.push_back({Eigen::Vector3d(1, 0, 0), 1.0});
  planes.push_back({Eigen::Vector3d(0, 1, 0), 0.0});
  planes.push_back({Eigen::Vector3d(0, 1, 0), 1.0});

  const double slack = 1e-12;
  double best_r = std::numeric_limits<double>::infinity();
  Eigen::Vector2d best_st(0.0, 0.0);
  const std::size_t np = planes.size();
  for (std::size_t i = 0; i < np; ++i) {
    for (std::size_t j = i + 1; j < np; ++j) {
      for (std::size_t k = j + 1; k < np; ++k) {
        Eigen::Matrix3d a;
        a.row(0) = planes[i].n;
        a.row(1) = planes[j].n;
        a.row(2) = planes[k].n;
        const Eigen::FullPivLU<Eigen::Matrix3d> lu(a);
        if (!lu.isInvertible()) continue;
        const Eigen::Vector3d p = lu.solve(Eigen::Vector3d(planes[i].rhs, planes[j].rhs, planes[k].rhs));
        const double s = p[0], t = p[1], r = p[2];
        if (s < -slack || s > 1 + slack || t < -slack || t > 1 + slack) continue;
        bool feasible = true;
        for (const auto& f : affine) {
          if (std::abs(f[0] + f[1] * s + f[2] * t) > r + 1e-12) {
            feasible = false;
            break;
          }
        }
        if (feasible && r < best_r) {
          best_r = r;
          best_st = {std::clamp(s, 0.0, 1.0), std::clamp(t, 0.0, 1.0)};
        }
      }
    }
  }
  Eigen::MatrixXd m(2, 2);
  m << 1.0 - best_st[0], best_st[0],
       best_st[1], 1.0 - best_st[1];
  return detail::certify(gamma_hat, gamma, std::move(m));
}

// Any action count: minimize r subject to |Gamma_y(a) - (Gamma-hat_y M)(a)| <= r,
// M >= 0, rows of M summing to 1. Variables are M row-major then r.
inline DominanceCertificate best_garbling_simplex(const DistributionFamily& gamma_hat,
                                                  const DistributionFamily& gamma) {
  const int na = static_cast<int>(gamma.front().size());
  const int ny = static_cast<int>(gamma.size());
  const int nv = na * na + 1;
  const int r_col = na * na;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(nv);
  c[r_col] = 1.0;
  Eigen::MatrixXd a_ub = Eigen::MatrixXd::Zero(2 * ny * na, nv);
  Eigen::VectorXd b_ub(2 * ny * na);
  int row = 0;
  for (int y = 0; y < ny; ++y) {
    for (int a = 0; a < na; ++a) {
      for (int i = 0; i < na; ++i) {
        a_ub(row, i * na + a) = gamma_hat[y][i];
        a_ub(row + 1, i * na + a) = -gamma_hat[y][i];
      }
      a_ub(row, r_col) = -1.0;
      a_ub(row + 1, r_col) = -1.0;
      b_ub[row] = gamma[y][a];
      b_ub[row + 1] = -gamma[y][a];
      row += 2;
    }
  }
  Eigen::MatrixXd a_eq = Eigen::MatrixXd::Zero(na, nv);
  for (int i = 0; i < na; ++i) a_eq.block(i, i * na, 1, na).setOnes();
  const Eigen::VectorXd b_eq = Eigen::VectorXd::Ones(na);
  const lp::Result res = lp::solve(c, a_ub, b_ub, a_eq, b_eq);
  if (res.status != lp::Status::kOptimal) {
    throw NumericalError("LinearProgram", "garbling LP failed to reach an optimum");
  }
  Eigen::MatrixXd m(na, na);
  for (int i = 0; i < na; ++i) {
    for (int a = 0; a < na; ++a) m(i, a) = res.x[i * na + a];
  }
  return detail::certify(gamma_hat, gamma, std::move(m));
}

// Row-stochastic M minimizing the worst garbling residual; exact vertex
// enumeration at two actions, simplex otherwise.
inline DominanceCertificate best_garbling(const DistributionFamily& gamma_hat,
                                          const DistributionFamily& gamma) {
  detail::check_families(gamma_hat, gamma);
  if (gamma.front().size() == 2) return best_garbling_two_actions(gamma_hat, gamma);
  return best_garbling_simplex(gamma_hat, gamma);
}

inline bool certificate_valid(const DominanceCertificate& cert, double eps) {
  return cert.residual <= eps && cert.defect.min_entry >= -1e-9 && cert.defect.row_sum <= 1e-9;
}

// Certificate that gamma is a garbling of gamma_hat (gamma_hat dominates), or
// absent when the best M leaves a residual above eps.
inline std::optional<DominanceCertificate> find_dominance_matrix(
    const DistributionFamily& gamma_hat, const DistributionFamily& gamma, double eps = 1e-6) {
  DominanceCertificate cert = best_garbling(gamma_hat, gamma);
  if (!certificate_valid(cert, eps)) return std::nullopt;
  return cert;
}

struct MixtureMatrixReport {
  Eigen::MatrixXd m3;
  StochasticityDefect defect;
};

// M3(i, a) = w_a M1(i, a) + (1 - w_a) M2(i, a).
inline MixtureMatrixReport convex_mixture_matrix(const Eigen::MatrixXd& m1,
                                                 const Eigen::MatrixXd& m2,
                                                 const Eigen::VectorXd& weights) {
  if (m1.rows() != m2.rows() || m1.cols() != m2.cols() || weights.size() != m1.cols()) {
    throw ConfigError("convex mixture needs equal shapes and one weight per action");
  }
  for (Eigen::Index a = 0; a < weights.size(); ++a) {
    if (!(weights[a] >= 0.0 && weights[a] <= 1.0)) {
      throw ConfigError("mixture weights must lie in [0,1]");
    }
  }
  MixtureMatrixReport rep;
  rep.m3 = m2;
  for (Eigen::Index a = 0; a < weights.size(); ++a) {
    rep.m3.col(a) = weights[a] * m1.col(a) + (1.0 - weights[a]) * m2.col(a);
  }
  rep.defect = stochasticity_defect(rep.m3);
  return rep;
}

struct InverseReport {
  bool invertible = false;
  Eigen::MatrixXd inverse;
  StochasticityDefect defect;  // of the inverse
};

inline InverseReport inverse_check(const Eigen::MatrixXd& m, double det_tol = 1e-10) {
  InverseReport rep;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (std::abs(m.determinant()) <= det_tol || !lu.isInvertible()) return rep;
  rep.invertible = true;
  rep.inverse = lu.inverse();
  rep.defect = stochasticity_defect(rep.inverse);
  return rep;
}

struct BetweennessReport {
  int checks = 0;
  int violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();  // negative = outside
};

// For p3 = e p1 + (1 - e) p2, checks that each Gamma_3(a) lies between
// Gamma_1(a) and Gamma_2(a) at every supplied private belief.
inline BetweennessReport interpolation_betweenness_check(const DecisionFrame& frame,
                                                         const PsychParams& p1,
                                                         const PsychParams& p2,
                                                         const std::vector<double>& eps_grid,
                                                         const std::vector<BeliefVector>& beliefs,
                                                         double tol = 1e-6,
                                                         const SteadyStateConfig& cfg = {}) {
  BetweennessReport rep;
  for (const auto& eta : beliefs) {
    const Eigen::VectorXd g1 = steady_state_distribution(frame, p1, eta, cfg).probabilities();
    const Eigen::VectorXd g2 = steady_state_distribution(frame, p2, eta, cfg).probabilities();
    for (double e : eps_grid) {
      const PsychParams p3 = PsychParams::blend(p1, p2, e);
      const Eigen::VectorXd g3 = steady_state_distribution(frame, p3, eta, cfg).probabilities();
      for (Eigen::Index a = 0; a < g3.size(); ++a) {
        const double lo = std::min(g1[a], g2[a]);
        const double hi = std::max(g1[a], g2[a]);
        const double margin = std::min(g3[a] - lo, hi - g3[a]);
        ++rep.checks;
        rep.worst_margin = std::min(rep.worst_margin, margin);
        if (margin < -tol) ++rep.violations;
      }
    }
  }
  return rep;
}

// Private beliefs T(pi, y) for every supplied pi(1) and observation.
inline std::vector<BeliefVector> private_belief_samples(const std::vector<double>& pi1s,
                                                        const ChangeModel& change,
                                                        const ObservationModel& obs) {
  std::vector<BeliefVector> out;
  for (double pi1 : pi1s) {
    for (int y = 0; y < obs.n_obs(); ++y) {
      const Eigen::Vector2d num =
          private_belief_numerator(Eigen::Vector2d(pi1, 1.0 - pi1), y, change, obs);
      if (num.sum() > 0.0) out.push_back(BeliefVector::normalized(num));
    }
  }
  return out;
}

}  // namespace qdetect
