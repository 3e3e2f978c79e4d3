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

#ifndef VNGALE_INSTANCES_HPP_
#define VNGALE_INSTANCES_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "vngale/solver.hpp"

namespace vng {

// Raw node list of a tree where every depth-t node has branching[t] children
// with the given conditional probabilities (equiprobable when empty). Ids
// are "r", "r.0", "r.0.1", ...
std::vector<RawNode> branching_nodes(
    const std::vector<int>& branching,
    const std::vector<std::vector<double>>& probs = {});

// Two assets, riskless R = 1 and a risky asset that is flat in the first
// period and then moves by u = 1.4 or d = 0.7 with probability 1/2.
// Frictionless, mu = 3, x0 = (0.5, 0.5), liquidation objective.
PathProblem kelly_problem();

// Root risky fraction maximizing 0.5 ln(1 + 0.4 f) + 0.5 ln(1 - 0.3 f).
inline constexpr double kKellyFraction = 5.0 / 12.0;

// One asset, one period, R = 1.2 or 0.9 with probability 1/2, x0 = 1,
// frictionless, mu = 2, liquidation objective.
PathProblem single_asset_problem();

// Deterministic chain of `horizon` periods with two assets of constant
// returns (r_best, r_worst), frictionless, margin mu, x0 = (1, 1).
PathProblem chain_problem(int horizon, double r_best, double r_worst,
                          double mu);

struct RandomInstanceOptions {
  int max_horizon = 4;
  int max_branching = 3;
  int max_assets = 4;
  double max_cost = 0.05;
  double margin_slack = 0.1;  // mu_t >= nu_t + margin_slack
  int max_nodes = 160;
};

// Seeded random instance whose margins and costs satisfy the solver's
// preconditions by construction. The
// objective cycles through liquidation, linear and both penalized forms.
PathProblem random_problem(std::uint64_t seed,
                           const RandomInstanceOptions& options = {});

}  // namespace vng

#endif  // VNGALE_INSTANCES_HPP_
