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

#ifndef VNGALE_MARKET_HPP_
#define VNGALE_MARKET_HPP_

#include <memory>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "vngale/scenario_tree.hpp"

namespace vng {

// Default membership tolerance: a residual >= -kConeTol counts as inside.
inline constexpr double kConeTol = 1e-9;

// A path (x_0, ..., x_N): one adapted field per time.
using Path = std::vector<AdaptedVector>;

struct NodeMarket {
  Vector returns;    // gross returns R_{t,i}; ignored at the root
  Vector cost_sell;  // lambda^+ in [0, 1)
  Vector cost_buy;   // lambda^- >= 0
};

// Per-time return and cost bounds, taken as observed extremes over the
// depth-t nodes. Return bounds are 1 at t = 0.
struct TimeBounds {
  double return_lo = 1.0;
  double return_hi = 1.0;
  double sell_lo = 1.0;  // min of 1 - lambda^+
  double buy_hi = 1.0;   // max of 1 + lambda^-
};

// Market with margin requirements and proportional transaction costs on a
// scenario tree. Immutable after build().
class MarketData {
 public:
  // `nodes` is indexed by NodeIndex of `tree`; `margins[t]` is mu_t.
  static MarketData build(ScenarioTree tree, int assets,
                          std::vector<double> margins,
                          std::vector<NodeMarket> nodes);

  const ScenarioTree& tree() const { return *tree_ptr_; }
  int assets() const { return assets_; }
  int horizon() const { return tree_ptr_->horizon(); }
  double margin(int t) const { return margins_.at(static_cast<std::size_t>(t)); }
  const std::vector<double>& margins() const { return margins_; }

  const Vector& returns(NodeIndex n) const { return nodes_[n].returns; }
  const Vector& cost_sell(NodeIndex n) const { return nodes_[n].cost_sell; }
  const Vector& cost_buy(NodeIndex n) const { return nodes_[n].cost_buy; }
  // Lambda^+ = 1 - lambda^+ and Lambda^- = 1 + lambda^-.
  const Vector& sell_factor(NodeIndex n) const { return sell_[n]; }
  const Vector& buy_factor(NodeIndex n) const { return buy_[n]; }

  TimeBounds bounds(int t) const { return bounds_.at(static_cast<std::size_t>(t)); }

  // Same market with replaced margins.
  MarketData with_margins(std::vector<double> margins) const;

 private:
  MarketData() = default;

  std::shared_ptr<const ScenarioTree> tree_ptr_;
  int assets_ = 0;
  std::vector<double> margins_;
  std::vector<NodeMarket> nodes_;
  std::vector<Vector> sell_;
  std::vector<Vector> buy_;
  std::vector<TimeBounds> bounds_;
};

// R_{t,i} = S_{t,i} / S_{t-1,i}, node by node. `prices` is indexed by
// NodeIndex; the root entry is returned as all ones.
std::vector<Vector> returns_from_prices(const ScenarioTree& tree,
                                        const std::vector<Vector>& prices);

// sum_i Lambda^+_i a^+_i - mu_t sum_i Lambda^-_i a^-_i; a is in X_t(node)
// iff this is >= 0.
double margin_residual(const MarketData& market, const Vector& a,
                       NodeIndex node);

// psi_t(a, b) at `node` (depth t >= 1): cash released by rebalancing the
// parent portfolio a, grown by the node's returns, into b.
double self_financing_value(const MarketData& market, const Vector& a,
                            const Vector& b, NodeIndex node);

struct ZMembership {
  bool member = false;
  double parent_margin = 0.0;
  double child_margin = 0.0;
  double psi = 0.0;
};

// (a, b) in Z_t(node): a in X_{t-1}(parent), b in X_t(node), psi >= -tol.
ZMembership in_Z(const MarketData& market, const Vector& a, const Vector& b,
                 NodeIndex node, double tol = kConeTol);

// Largest r with B_1(a, r) inside X_t(node) (l1 ball); 0 when a is on the
// boundary, negative when a is outside.
double interior_radius(const MarketData& market, const Vector& a,
                       NodeIndex node);

// Polyhedral lift of a cone. Every lifted variable is nonnegative; the
// original coordinates are `projection * z`. The first 2k variables split the
// k original coordinates as (plus, minus) pairs stored blockwise.
// Vertices of the section {a in X_t(node) : |a| = 1}: unit vectors e_i and,
// for every pair i != j, the margin-boundary point with a_i > 0 > a_j. Any
// linear form attains its minimum over the section at one of them.
std::vector<Vector> section_vertices(const MarketData& market, NodeIndex node);

struct ConeLift {
  int original_dim = 0;
  int lifted_dim = 0;
  Eigen::MatrixXd projection;
  Eigen::MatrixXd inequalities;  // rows * z >= 0
  Eigen::MatrixXd equalities;    // rows * z == 0
  Eigen::VectorXd norm_weights;  // |original| <= norm_weights . z
};

// X_t(node): z = (u, v), a = u - v.
ConeLift lift_X(const MarketData& market, NodeIndex node);
// Z_t(node): z = (a+, a-, b+, b-, d+, d-) with d+ - d- = R a - b.
ConeLift lift_Z(const MarketData& market, NodeIndex node);

// Whether `point` lies in the projection of the lift (LP feasibility, with
// inequality rows relaxed by tol).
bool lift_contains(const ConeLift& lift, const Vector& point,
                   double tol = kConeTol);

struct DualConeCheck {
  double violation = 0.0;  // max of the linear form on the normalized cone
  Vector a;                // maximizing pair (for Z) or vector (for X)
  Vector b;
};

// max { p_bar . b - p . a : (a, b) in Z_t(node), |a| + |b| <= 1 }. A value
// <= tol certifies p_bar b <= p a on the whole cone at this node.
DualConeCheck dual_cone_violation(const MarketData& market, const Vector& p,
                                  const Vector& p_bar, NodeIndex node);

// max { -p . a : a in X_t(node), |a| <= 1 }; <= tol means p in X_t^*(node).
DualConeCheck dual_membership_violation(const MarketData& market,
                                        const Vector& p, NodeIndex node);

struct MarketConstants {
  // Indexed by t = 0..N. c2 and k are meaningful for t >= 1 only.
  std::vector<double> nu;
  std::vector<double> c1;
  std::vector<double> c2;
  std::vector<double> k;
  std::vector<double> h;
};

enum class SectionMethod { kAuto, kGrid, kSignPatternLp };

// min over {a : mu |a-| <= |a+|, |a| = 1} of |a+| - weight |a-|.
// kGrid scans ~1e5 lattice directions and then zooms in on the best one;
// kSignPatternLp solves one LP per sign pattern. kAuto uses the grid for
// m <= 3.
double cone_section_minimum(double mu, double weight, int m,
                            SectionMethod method = SectionMethod::kAuto);

// nu_t from the return and cost bounds.
std::vector<double> compute_nu(const MarketData& market);

// nu_t, C^1_t, C^2_t, K_t, H_t. Throws MarginTooTight when mu_t <= nu_t.
MarketConstants market_constants(const MarketData& market,
                                 SectionMethod method = SectionMethod::kAuto);

// b with (a, b) in Z_t(node): (C^2_t / 2) |a| e / |e|, or 0 if that fails the
// membership test. Throws NotInCone when a fails the parent margin test.
Vector feasible_completion(const MarketData& market,
                           const MarketConstants& constants, const Vector& a,
                           NodeIndex node);

// (v_0, u_1, v_1, ..., u_N, v_N, u_{N+1}). v[t] lives at depth t; u[t] lives
// at depth min(t, N) and u[0] is unused.
struct RelaxedSequence {
  std::vector<AdaptedVector> v;
  std::vector<AdaptedVector> u;
};

// Builds a path y with y_0 = v_0 and y_t - v_t in X_t from a relaxed
// sequence, by completing y_n - u_{n+1} at every node.
Path dominating_path(const MarketData& market, const MarketConstants& constants,
                     const RelaxedSequence& seq);

struct SlaterPath {
  Path path;
  RelaxedSequence witness;
  std::vector<double> radius;      // min interiority radius of x_t over nodes
  std::vector<double> min_psi;     // min psi_t(x_{t-1}, x_t); [0] unused
  std::vector<double> min_margin;  // min margin residual of x_t
};

// Strictly interior path starting at x0 (default e = (1, ..., 1)). The
// interior relaxed sequence uses multiples of e scaled by delta / (2 |e|);
// the path itself comes from dominating_path.
SlaterPath slater_path(const MarketData& market,
                       const MarketConstants& constants,
                       const Vector& x0 = Vector());

// Random members of X_t(node) and Z_t(node). With `boundary` the sample sits
// on the margin (resp. self-financing) boundary.
Vector sample_X(const MarketData& market, NodeIndex node, std::mt19937_64& rng,
                bool boundary = false);
Vector sample_X_outside(const MarketData& market, NodeIndex node,
                        std::mt19937_64& rng);

// Largest s >= 0 with psi_t(a, base + s w) >= 0, for w in X_t(node); 0 when
// psi_t(a, base) < 0. An empty `base` means 0.
double max_rebalance_scale(const MarketData& market, const Vector& a,
                           const Vector& w, NodeIndex node,
                           const Vector& base = Vector());

struct ZSample {
  Vector a;
  Vector b;
};
ZSample sample_Z(const MarketData& market, NodeIndex node,
                 std::mt19937_64& rng, bool boundary = false);

// Random path from x0: at every node b = completion(a) + s w with w a random
// member of X_t and s uniform on [lo, hi] times the largest feasible scale.
Path random_path(const MarketData& market, const MarketConstants& constants,
                 const Vector& x0, std::mt19937_64& rng, double lo = 0.0,
                 double hi = 1.0);

}  // namespace vng

#endif  // VNGALE_MARKET_HPP_
