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

// Dense two-phase tableau simplex for small linear programs:
//   minimize c'x  subject to  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.
// Bland's rule keeps pivoting deterministic and cycle free.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace qdetect::lp {

enum class Status { kOptimal, kInfeasible, kUnbounded };

struct Result {
  Status status = Status::kInfeasible;
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

class Tableau {
 public:
  Tableau(int rows, int cols) : t_(Eigen::MatrixXd::Zero(rows + 1, cols + 1)), basis_(rows, -1) {}

  int rows() const { return static_cast<int>(t_.rows()) - 1; }
  int cols() const { return static_cast<int>(t_.cols()) - 1; }
  double& a(int r, int c) { return t_(r, c); }
  double& rhs(int r) { return t_(r, cols()); }
  double& cost(int c) { return t_(rows(), c); }
  double& objective() { return t_(rows(), cols()); }
  std::vector<int>& basis() { return basis_; }

  void pivot(int r, int c) {
    t_.row(r) /= t_(r, c);
    for (int i = 0; i <= rows(); ++i) {
      if (i != r && t_(i, c) != 0.0) t_.row(i) -= t_(i, c) * t_.row(r);
    }
    basis_[r] = c;
  }

  // Minimizes the reduced-cost row over the allowed columns. Returns false
  // when unbounded.
  bool optimize(const std::vector<bool>& allowed, double tol) {
    for (;;) {
      int enter = -1;
      for (int c = 0; c < cols(); ++c) {
        if (allowed[c] && cost(c) < -tol) {
          enter = c;
          break;
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int r = 0; r < rows(); ++r) {
        if (a(r, enter) > tol) {
          const double ratio = rhs(r) / a(r, enter);
          if (leave < 0 || ratio < best - tol ||
              (std::abs(ratio - best) <= tol && basis_[r] < basis_[leave])) {
            best = ratio;
            leave = r;
          }
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }

 private:
  Eigen::MatrixXd t_;
  std::vector<int> basis_;
};

}  // namespace detail

inline Result solve(const Eigen::VectorXd& c, const Eigen::MatrixXd& a_ub,
                    const Eigen::VectorXd& b_ub, const Eigen::MatrixXd& a_eq,
                    const Eigen::VectorXd& b_eq, double tol = 1e-11) {
  const int n = static_cast<int>(c.size());
  const int m_ub = static_cast<int>(a_ub.rows());
  const int m_eq = static_cast<int>(a_eq.rows());
  const int m = m_ub + m_eq;
  // Columns: x (n), slacks (m_ub), artificials (m).
  const int n_cols = n + m_ub + m;
  detail::Tableau tab(m, n_cols);
  for (int r = 0; r < m; ++r) {
    const bool is_ub = r < m_ub;
    double b = is_ub ? b_ub[r] : b_eq[r - m_ub];
    const double sign = b < 0.0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) tab.a(r, j) = sign * (is_ub ? a_ub(r, j) : a_eq(r - m_ub, j));
    if (is_ub) tab.a(r, n + r) = sign;
    tab.a(r, n + m_ub + r) = 1.0;
    tab.rhs(r) = sign * b;
    tab.basis()[r] = n + m_ub + r;
  }
  // Phase 1: minimize the sum of artificials.
  for (int r = 0; r < m; ++r) {
    for (int j = 0; j < n + m_ub; ++j) tab.cost(j) -= tab.a(r, j);
    tab.objective() -= tab.rhs(r);
  }
  std::vector<bool> allowed(n_cols, true);
  tab.optimize(allowed, tol);
  Result res;
  if (-tab.objective() > 1e-9) {
    res.status = Status::kInfeasible;
    return res;
  }
  // Drive artificials out of the basis where possible.
  for (int r = 0; r < m; ++r) {
    if (tab.basis()[r] >= n + m_ub) {
      for (int j = 0; j < n + m_ub; ++j) {
        if (std::abs(tab.a(r, j)) > tol) {
          tab.pivot(r, j);
          break;
        }
      }
    }
  }
  for (int j = n + m_ub; j < n_cols; ++j) allowed[j] = false;
  // Phase 2 objective in reduced form.
  for (int j = 0; j <= n_cols; ++j) tab.cost(j) = 0.0;
  for (int j = 0; j < n; ++j) tab.cost(j) = c[j];
  for (int r = 0; r < m; ++r) {
    const int b = tab.basis()[r];
    if (b < n && c[b] != 0.0) {
      const double cb = c[b];
      for (int j = 0; j < n_cols; ++j) tab.cost(j) -= cb * tab.a(r, j);
      tab.objective() -= cb * tab.rhs(r);
    }
  }
  if (!tab.optimize(allowed, tol)) {
    res.status = Status::kUnbounded;
    return res;
  }
  res.status = Status::kOptimal;
  res.x = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < m; ++r) {
    if (tab.basis()[r] < n) res.x[tab.basis()[r]] = tab.rhs(r);
  }
  res.objective = c.dot(res.x);
  return res;
}

}  // namespace qdetect::lp
