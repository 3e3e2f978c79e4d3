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

#ifndef VNGALE_LP_HPP_
#define VNGALE_LP_HPP_

#include <vector>

#include <Eigen/Dense>

namespace vng {

enum class RowSense { kLessEqual, kEqual, kGreaterEqual };

// maximize c'x  subject to  A x (sense) b,  x >= 0.
struct LinearProgram {
  Eigen::VectorXd objective;
  Eigen::MatrixXd rows;
  Eigen::VectorXd rhs;
  std::vector<RowSense> sense;

  // Appends one constraint row; `coefficients` must have objective.size()
  // entries.
  void add_row(const Eigen::VectorXd& coefficients, RowSense s, double b);
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

struct LpResult {
  LpStatus status = LpStatus::kIterationLimit;
  double value = 0.0;
  Eigen::VectorXd x;
  int iterations = 0;
};

// Dense two-phase tableau simplex with Bland's anti-cycling rule. Intended
// for the small per-node programs of the certificate checks; holds no state
// between calls.
LpResult solve_lp(const LinearProgram& lp, int max_iterations = 10000);

}  // namespace vng

#endif  // VNGALE_LP_HPP_
