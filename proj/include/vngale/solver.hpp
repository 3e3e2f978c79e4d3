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

#ifndef VNGALE_SOLVER_HPP_
#define VNGALE_SOLVER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "vngale/market.hpp"
#include "vngale/objectives.hpp"

namespace vng {

// Maximize E ln psi_N(x_N) over paths from x0.
struct PathProblem {
  MarketData market;
  TerminalObjective objective;
  Vector x0;
};

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 500;  // total Newton steps
  std::uint64_t seed = 0;
  double t0 = 1.0;
  double growth = 5.0;  // barrier weight multiplier per outer iteration
};

// Sizes of the lifted program.
struct ProgramShape {
  std::size_t node_vectors = 0;  // including the pinned root
  std::size_t edge_blocks = 0;   // one self-financing block per edge
  std::size_t margin_blocks = 0;
  std::size_t objective_blocks = 0;
  std::size_t variables = 0;
  std::size_t inequalities = 0;
  double initial_radius = 0.0;  // epsilon_0 with B(x0, epsilon_0) in X_0
};

// Validates the problem (MarginTooTight, InfeasibleStart) and reports the
// program layout.
ProgramShape assemble(const PathProblem& problem);

// Lifted variables of one non-root node. Each block s satisfies
// s_i <= (two linear forms), with sum s >= 0 for the cone blocks.
struct NodeLift {
  Vector psi;        // hypograph of the self-financing function on the edge
  Vector margin;     // hypograph of the margin residual of x_n
  Vector objective;  // leaves: liquidation hypograph or l1 envelope r >= |x|
};

// Multipliers (>= 0) of the rows of each block, in the same layout.
struct NodeMultipliers {
  Vector psi_plus;
  Vector psi_minus;
  double psi_sum = 0.0;
  Vector margin_plus;
  Vector margin_minus;
  double margin_sum = 0.0;
  Vector objective_plus;
  Vector objective_minus;
};

struct KktReport {
  double primal = 0.0;           // original-space cone violations
  double lift = 0.0;             // negative lifted slacks
  double stationarity = 0.0;     // Lagrangian gradient, per unit probability
  double complementarity = 0.0;  // multiplier * slack, per unit probability
  std::string primal_node;
  std::string stationarity_node;
  std::string complementarity_node;
  bool within(double tol) const {
    return primal <= tol && lift <= tol && stationarity <= tol &&
           complementarity <= tol;
  }
};

struct Solution {
  Path path;
  std::vector<NodeLift> lifts;  // by NodeIndex; the root entry is empty
  std::vector<NodeMultipliers> multipliers;
  double objective = 0.0;
  double duality_gap = 0.0;
  double barrier_weight = 0.0;
  KktReport residuals;
  int iterations = 0;
  int outer_iterations = 0;
  double wall_time = 0.0;
  bool converged = false;
  bool floor_active = false;
  // Barrier merit after every accepted step; `centering_steps[k]` entries
  // belong to outer iteration k.
  std::vector<double> merit_trace;
  std::vector<int> centering_steps;
  // F at the end of every centering.
  std::vector<double> center_objectives;
};

// Log-barrier interior-point method started from the Slater path through x0.
// A run that exhausts max_iter returns its last iterate with converged =
// false.
Solution solve_log_optimal(const PathProblem& problem,
                           const SolverOptions& options = {});

// Recomputes every residual from the stored path, lifts and multipliers.
KktReport kkt_report(const Solution& solution, const PathProblem& problem);

}  // namespace vng

#endif  // VNGALE_SOLVER_HPP_
