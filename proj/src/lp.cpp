// Copyright 2026 The vngale Authors
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

#include "vngale/lp.hpp"

#include <cmath>
#include <limits>

#include "vngale/error.hpp"

namespace vng {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-12;

using Matrix = Eigen::MatrixXd;

// Tableau layout: rows 0..m-1 are constraints, row m is the reduced-cost row
// (stores -c, so a negative entry marks an improving column). The last column
// holds the right-hand side.
class Tableau {
 public:
  Tableau(Matrix t, std::vector<int> basis)
      : t_(std::move(t)), basis_(std::move(basis)) {}

  int rows() const { return static_cast<int>(t_.rows()) - 1; }
  int cols() const { return static_cast<int>(t_.cols()) - 1; }
  Matrix& data() { return t_; }
  const std::vector<int>& basis() const { return basis_; }

  void pivot(int r, int c) {
    t_.row(r) /= t_(r, c);
    for (int i = 0; i < t_.rows(); ++i) {
      if (i != r && t_(i, c) != 0.0) {
        t_.row(i) -= t_(i, c) * t_.row(r);
      }
    }
    basis_[static_cast<std::size_t>(r)] = c;
  }

  // Runs primal simplex over the columns flagged in `allowed`.
  LpStatus optimize(const std::vector<bool>& allowed, int max_iterations,
                    int& iterations) {
    const int m = rows();
    while (iterations < max_iterations) {
      int enter = -1;
      for (int j = 0; j < cols(); ++j) {
        if (allowed[static_cast<std::size_t>(j)] && t_(m, j) < -kCostTol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return LpStatus::kOptimal;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        if (t_(i, enter) > kPivotTol) {
          double ratio = t_(i, cols()) / t_(i, enter);
          if (ratio < best - 1e-14 ||
              (std::abs(ratio - best) <= 1e-14 && leave >= 0 &&
               basis_[static_cast<std::size_t>(i)] <
                   basis_[static_cast<std::size_t>(leave)])) {
            best = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return LpStatus::kUnbounded;
      pivot(leave, enter);
      ++iterations;
    }
    return LpStatus::kIterationLimit;
  }

 private:
  Matrix t_;
  std::vector<int> basis_;
};

}  // namespace

void LinearProgram::add_row(const Eigen::VectorXd& coefficients, RowSense s,
                            double b) {
  if (coefficients.size() != objective.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "LP row has wrong width");
  }
  rows.conservativeResize(rows.rows() + 1, objective.size());
  rows.row(rows.rows() - 1) = coefficients.transpose();
  rhs.conservativeResize(rhs.size() + 1);
  rhs(rhs.size() - 1) = b;
  sense.push_back(s);
}

LpResult solve_lp(const LinearProgram& lp, int max_iterations) {
  const int n = static_cast<int>(lp.objective.size());
  const int m = static_cast<int>(lp.rows.rows());
  if (lp.rows.cols() != n && m > 0) {
    throw Error(ErrorCode::kDimensionMismatch, "LP matrix width mismatch");
  }

  // Normalize to b >= 0.
  Matrix a = lp.rows;
  Eigen::VectorXd b = lp.rhs;
  std::vector<RowSense> sense = lp.sense;
  for (int i = 0; i < m; ++i) {
    if (b(i) < 0.0) {
      a.row(i) *= -1.0;
      b(i) = -b(i);
      auto& s = sense[static_cast<std::size_t>(i)];
      if (s == RowSense::kLessEqual) {
        s = RowSense::kGreaterEqual;
      } else if (s == RowSense::kGreaterEqual) {
        s = RowSense::kLessEqual;
      }
    }
  }

  int slack_count = 0;
  int artificial_count = 0;
  for (RowSense s : sense) {
    if (s != RowSense::kEqual) ++slack_count;
    if (s != RowSense::kLessEqual) ++artificial_count;
  }
  const int total = n + slack_count + artificial_count;
  Matrix t = Matrix::Zero(m + 1, total + 1);
  std::vector<int> basis(static_cast<std::size_t>(m), -1);
  t.block(0, 0, m, n) = a;
  t.block(0, total, m, 1) = b;
  int next_slack = n;
  int next_art = n + slack_count;
  std::vector<bool> is_artificial(static_cast<std::size_t>(total), false);
  for (int i = 0; i < m; ++i) {
    const RowSense s = sense[static_cast<std::size_t>(i)];
    if (s == RowSense::kLessEqual) {
      t(i, next_slack) = 1.0;
      basis[static_cast<std::size_t>(i)] = next_slack++;
    } else {
      if (s == RowSense::kGreaterEqual) t(i, next_slack++) = -1.0;
      t(i, next_art) = 1.0;
      is_artificial[static_cast<std::size_t>(next_art)] = true;
      basis[static_cast<std::size_t>(i)] = next_art++;
    }
  }

  LpResult result;
  Tableau tab(std::move(t), std::move(basis));
  Matrix& d = tab.data();

  if (artificial_count > 0) {
    // Phase 1: maximize -sum(artificials); cost row holds +1 on artificials,
    // then made consistent with the starting basis.
    d.row(m).setZero();
    for (int j = 0; j < total; ++j) {
      if (is_artificial[static_cast<std::size_t>(j)]) d(m, j) = 1.0;
    }
    for (int i = 0; i < m; ++i) {
      if (is_artificial[static_cast<std::size_t>(
              tab.basis()[static_cast<std::size_t>(i)])]) {
        d.row(m) -= d.row(i);
      }
    }
    std::vector<bool> all(static_cast<std::size_t>(total), true);
    LpStatus st = tab.optimize(all, max_iterations, result.iterations);
    if (st == LpStatus::kIterationLimit) {
      result.status = st;
      return result;
    }
    const double infeasibility = -d(m, total);
    if (infeasibility > 1e-9 * (1.0 + b.lpNorm<Eigen::Infinity>())) {
      result.status = LpStatus::kInfeasible;
      return result;
    }
    // Drive zero-level artificials out of the basis where possible.
    for (int i = 0; i < m; ++i) {
      const int bv = tab.basis()[static_cast<std::size_t>(i)];
      if (!is_artificial[static_cast<std::size_t>(bv)]) continue;
      for (int j = 0; j < total; ++j) {
        if (!is_artificial[static_cast<std::size_t>(j)] &&
            std::abs(d(i, j)) > kPivotTol) {
          tab.pivot(i, j);
          break;
        }
      }
    }
  }

  // Phase 2.
  d.row(m).setZero();
  d.block(m, 0, 1, n) = -lp.objective.transpose();
  for (int i = 0; i < m; ++i) {
    const int bv = tab.basis()[static_cast<std::size_t>(i)];
    if (d(m, bv) != 0.0) d.row(m) -= d(m, bv) * d.row(i);
  }
  std::vector<bool> allowed(static_cast<std::size_t>(total), true);
  for (int j = 0; j < total; ++j) {
    if (is_artificial[static_cast<std::size_t>(j)]) {
      allowed[static_cast<std::size_t>(j)] = false;
    }
  }
  result.status = tab.optimize(allowed, max_iterations, result.iterations);
  result.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i) {
    const int bv = tab.basis()[static_cast<std::size_t>(i)];
    if (bv < n) result.x(bv) = d(i, total);
  }
  result.value = lp.objective.dot(result.x);
  return result;
}

}  // namespace vng
