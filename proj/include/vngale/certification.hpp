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

#ifndef VNGALE_CERTIFICATION_HPP_
#define VNGALE_CERTIFICATION_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vngale/market.hpp"
#include "vngale/solver.hpp"

namespace vng {

// Price densities p_1..p_{N+1}. p[t] lives at depth min(t, N) and has the
// asset dimension; p[0] is empty.
struct DualPath {
  std::vector<AdaptedVector> p;

  int horizon() const { return static_cast<int>(p.size()) - 2; }
  // p_t at the node (depth min(t, N)).
  const Vector& at(const ScenarioTree& tree, int t, NodeIndex n) const {
    return p[static_cast<std::size_t>(t)].at(tree, n);
  }
};

// p_{N+1} = grad psi / psi at the leaves and p_t = R o kappa / P from the
// self-financing multipliers kappa of the edge into each node. Coordinates
// at a kink of the terminal objective (|x_i| <= 1e-7 |x|, or both objective
// rows active) take the supergradient selected by the objective-block
// multipliers. Throws
// NotCertified for a solution that did not converge.
DualPath extract_dual(const Solution& solution, const PathProblem& problem);

// |p_t(node) . x_{t-1}(parent) - 1|, membership of p_t(node) in the dual of
// X_{t-1}(parent), the transition LP at the node, and the feasibility of the
// path step into the node (negative part of psi_t and of the margin
// residuals). Terminal entries (t = N+1) hold p_{N+1}(leaf) . x_N(leaf) and
// membership in X_N(leaf)^*.
struct NodeCheck {
  int t = 0;
  std::string node;
  double normalization = 0.0;
  double membership = 0.0;
  double transition = 0.0;
  double feasibility = 0.0;
};

struct Witness {
  std::string check;  // "feasibility", "normalization", "membership",
                      // "transition", "supermartingale"
  int t = 0;
  std::string node;
  double value = 0.0;
  Vector a;
  Vector b;
};

struct RapidityCertificate {
  double tol = 0.0;
  std::vector<double> normalization;  // by t = 0..N, max over nodes
  std::vector<NodeCheck> nodes;       // depths 1..N, then the N+1 layer
  double max_normalization = 0.0;
  double max_membership = 0.0;
  double max_transition = 0.0;
  double max_feasibility = 0.0;
  // Filled from the competitor paths handed to verify_rapid.
  int competitors = 0;
  double supermartingale = 0.0;
  bool certified = false;
  std::optional<Witness> witness;  // the largest violation when refuted
};

// Certified iff every residual is <= tol. Competitor paths add the
// supermartingale residuals of supermartingale_check to the verdict.
RapidityCertificate verify_rapid(const Path& path, const DualPath& dual,
                                 const MarketData& market, double tol,
                                 const std::vector<Path>& competitors = {});

struct SupermartingaleReport {
  // max of p_bar_{t+1} y_t - p_t y_{t-1} over nodes at depth t >= 1.
  double nodewise = 0.0;
  // max of E_{t-1}[p_bar_{t+1} y_t] - p_bar_t y_{t-1} over depth t-1 >= 1.
  double conditional = 0.0;
  // max of E p_{t+1} y_t - E p_t y_{t-1} over t.
  double expectation = 0.0;
  // max |lhs - rhs| over the nodewise terms; 0 on a martingale.
  double largest_gap = 0.0;
  std::string node;  // where `nodewise` is attained

  double violation() const {
    return std::max({nodewise, conditional, expectation});
  }
};

// Throws ShapeMismatch when y does not match the tree.
SupermartingaleReport supermartingale_check(const DualPath& dual,
                                            const Path& y,
                                            const MarketData& market);

struct GrowthRow {
  int t = 0;
  std::string node;
  double ratio = 0.0;  // E_t[p_{t+1} y_t] / p_t y_{t-1}
  bool proviso = true; // p_t y_{t-1} > 0
};

struct GrowthTable {
  std::vector<GrowthRow> rows;  // one per node at depths 1..N
  std::vector<double> max_ratio;   // by t = 1..N; index 0 unused
  std::vector<double> mean_ratio;  // probability-weighted over valid rows
  std::vector<int> node_count;     // valid rows per t
};

// Conditional growth rates of y measured with the dual of a rapid path. With
// require_proviso a nonpositive denominator throws NonpositiveDenominator;
// otherwise the row is marked and skipped in the summaries.
GrowthTable growth_dominance(const DualPath& dual, const Path& y,
                             const MarketData& market,
                             bool require_proviso = true);

// Period-t statements for a pair of consecutive dual layers:
//   ratio        E[p_{t+1} y / p_t x] <= 1,
//   log_ratio    E ln(p_{t+1} y / p_t x) <= 0,
//   expectation  E p_{t+1} y <= E p_t x,
//   cone         p_bar_{t+1} b <= p_t a on Z_t at every depth-t node (LP).
// The first three run on sampled pairs (x, y) = (y_{t-1}, y_t) of competitor
// paths; the ratio forms skip pairs with a nonpositive ratio term.
struct EquivalenceReport {
  int t = 0;
  int samples = 0;
  int ratio_samples = 0;  // used by the ratio forms
  double worst_ratio = 0.0;   // max E[ratio] - 1
  double worst_log_ratio = 0.0;  // max E ln(ratio)
  double worst_expectation = 0.0; // max E p_{t+1} y - E p_t x
  double worst_cone = 0.0;  // max LP value
  bool ratio = true, log_ratio = true, expectation = true, cone = true;
  // The rapid pair itself: max deviation from equality in the sampled forms.
  double equality_gap = 0.0;
  // All four pass, or the cone check fails and a sampled form catches it.
  bool consistent = true;
  std::vector<std::string> counterexamples;
};

EquivalenceReport check_equivalences(const Path& path, const DualPath& dual,
                                     int t, const MarketData& market,
                                     const std::vector<Path>& samples,
                                     double tol);

// Builds p_{t+1} = l_{t+1} / (l_{t+1} . x_t) nodewise and verifies it. l has
// the DualPath layout. Throws ZeroDenominator when some l_{t+1} . x_t <= 0.
struct Reconstruction {
  DualPath dual;
  RapidityCertificate certificate;
};
Reconstruction reconstruct_dual(const DualPath& l, const Path& x,
                                 const MarketData& market, double tol);

// Competitor paths from x0: half are random_path draws, half are convex
// combinations of a draw with the rapid path (weights on the draw uniform in
// (0, 1/2]). Deterministic in the seed.
std::vector<Path> sample_competitors(const MarketData& market,
                                     const MarketConstants& constants,
                                     const Path& rapid, int count,
                                     std::uint64_t seed);

// Injected dual corruptions used to exercise the checks.
enum class Corruption {
  kScaleTerminal,  // p_{N+1} times 2
  kNegateNode,     // p_t negated at one node
  kScaleNode,      // p_t times 1.5 at one node with t >= 2 (t = N+1 if N = 1)
};
std::string_view corruption_name(Corruption c);

// Applies the corruption at a node chosen by `seed`; returns the period whose
// statements the corruption breaks.
int corrupt(DualPath& dual, const ScenarioTree& tree, Corruption c,
            std::uint64_t seed);

}  // namespace vng

#endif  // VNGALE_CERTIFICATION_HPP_
