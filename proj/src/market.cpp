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

#include "vngale/market.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>

#include <fmt/format.h>

#include "vngale/error.hpp"
#include "vngale/lp.hpp"

namespace vng {
namespace {

void check_dim(const Vector& a, int m, const char* what) {
  if (a.size() != m) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("{} has dimension {}, expected {}", what, a.size(),
                            m));
  }
}

NodeIndex checked_parent(const MarketData& market, NodeIndex node) {
  if (node >= market.tree().size()) {
    throw Error(ErrorCode::kUnknownNode, fmt::format("node index {}", node));
  }
  if (market.tree().is_root(node)) {
    throw Error(ErrorCode::kPreconditionViolated,
                "transition cones are not defined at the root");
  }
  return market.tree().parent(node);
}

// min(Lp x, mu Lm x) summed; the margin residual written coordinatewise.
double margin_term(double lp, double lm, double mu, double x) {
  return x >= 0.0 ? lp * x : mu * lm * x;
}

LinearProgram lift_program(const ConeLift& lift) {
  LinearProgram lp;
  lp.objective = Vector::Zero(lift.lifted_dim);
  for (Eigen::Index r = 0; r < lift.inequalities.rows(); ++r) {
    lp.add_row(lift.inequalities.row(r).transpose(), RowSense::kGreaterEqual,
               0.0);
  }
  for (Eigen::Index r = 0; r < lift.equalities.rows(); ++r) {
    lp.add_row(lift.equalities.row(r).transpose(), RowSense::kEqual, 0.0);
  }
  return lp;
}

LpResult solve_checked(const LinearProgram& lp, const char* what) {
  LpResult res = solve_lp(lp);
  if (res.status != LpStatus::kOptimal) {
    throw Error(ErrorCode::kLpFailure,
                fmt::format("{}: simplex status {}", what,
                            static_cast<int>(res.status)));
  }
  return res;
}

// Integer points with sum |k_i| = total.
void enumerate_lattice(int m, int total, std::vector<int>& cur,
                       const std::function<void(const std::vector<int>&)>& f) {
  const int i = static_cast<int>(cur.size());
  if (i == m - 1) {
    cur.push_back(total);
    f(cur);
    cur.back() = -total;
    if (total != 0) f(cur);
    cur.pop_back();
    return;
  }
  for (int k = -total; k <= total; ++k) {
    cur.push_back(k);
    enumerate_lattice(m, total - std::abs(k), cur, f);
    cur.pop_back();
  }
}

struct SectionEval {
  double mu;
  double weight;
  // +inf outside the section cone.
  double operator()(const Vector& a) const {
    double pos = 0.0;
    double neg = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (a[i] >= 0.0) {
        pos += a[i];
      } else {
        neg -= a[i];
      }
    }
    const double norm = pos + neg;
    if (norm <= 0.0 || mu * neg > pos) {
      return std::numeric_limits<double>::infinity();
    }
    return (pos - weight * neg) / norm;
  }
};

double section_grid(double mu, double weight, int m) {
  const SectionEval f{mu, weight};
  int total = 1;
  if (m == 2) total = 25000;
  if (m == 3) total = 158;
  if (m > 3) {
    total = std::max(1, static_cast<int>(std::pow(1e5, 1.0 / (m - 1)) / 2));
  }
  double best = std::numeric_limits<double>::infinity();
  Vector best_a = Vector::Zero(m);
  Vector a(m);
  std::vector<int> cur;
  enumerate_lattice(m, total, cur, [&](const std::vector<int>& k) {
    for (int i = 0; i < m; ++i) a[i] = k[static_cast<std::size_t>(i)];
    const double v = f(a);
    if (v < best) {
      best = v;
      best_a = a / static_cast<double>(total);
    }
  });

  // Zoom: local lattice around the incumbent with halving step.
  double step = 1.0 / total;
  const int reach = 4;
  std::vector<int> offset(static_cast<std::size_t>(m), -reach);
  for (int level = 0; level < 48; ++level) {
    Vector center = best_a;
    std::fill(offset.begin(), offset.end(), -reach);
    while (true) {
      for (int i = 0; i < m; ++i) {
        a[i] = center[i] + step * offset[static_cast<std::size_t>(i)];
      }
      const double v = f(a);
      if (v < best) {
        best = v;
        best_a = a / a.lpNorm<1>();
      }
      int i = 0;
      while (i < m && ++offset[static_cast<std::size_t>(i)] > reach) {
        offset[static_cast<std::size_t>(i)] = -reach;
        ++i;
      }
      if (i == m) break;
    }
    step *= 0.5;
  }
  return best;
}

double section_lp(double mu, double weight, int m) {
  double best = std::numeric_limits<double>::infinity();
  const unsigned patterns = 1u << static_cast<unsigned>(m);
  for (unsigned s = 0; s < patterns; ++s) {
    if (s == 0) continue;  // no positive coordinate: only a = 0
    LinearProgram lp;
    lp.objective = Vector(m);
    Vector margin(m);
    for (int i = 0; i < m; ++i) {
      const bool pos = (s >> static_cast<unsigned>(i)) & 1u;
      lp.objective[i] = pos ? -1.0 : weight;
      margin[i] = pos ? 1.0 : -mu;
    }
    lp.add_row(Vector::Ones(m), RowSense::kEqual, 1.0);
    lp.add_row(margin, RowSense::kGreaterEqual, 0.0);
    const LpResult res = solve_lp(lp);
    if (res.status == LpStatus::kOptimal) best = std::min(best, -res.value);
  }
  if (!std::isfinite(best)) {
    throw Error(ErrorCode::kLpFailure, "cone section is empty");
  }
  return best;
}

}  // namespace

MarketData MarketData::build(ScenarioTree tree, int assets,
                             std::vector<double> margins,
                             std::vector<NodeMarket> nodes) {
  if (assets < 1) {
    throw Error(ErrorCode::kInvalidMarket, "asset count must be positive");
  }
  const int horizon = tree.horizon();
  for (int t = 0; t <= horizon; ++t) {
    if (tree.dim(t) != assets) {
      throw Error(ErrorCode::kDimensionMismatch,
                  fmt::format("tree dimension at t={} is {}, market has {} "
                              "assets",
                              t, tree.dim(t), assets));
    }
  }
  if (margins.size() != static_cast<std::size_t>(horizon) + 1) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("{} margins given for horizon {}", margins.size(),
                            horizon));
  }
  for (std::size_t t = 0; t < margins.size(); ++t) {
    if (!std::isfinite(margins[t]) || margins[t] <= 1.0) {
      throw Error(ErrorCode::kInvalidMarket,
                  fmt::format("margin mu_{} = {} must exceed 1", t,
                              margins[t]));
    }
  }
  if (nodes.size() != tree.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("{} node records for {} nodes", nodes.size(),
                            tree.size()));
  }

  MarketData md;
  md.assets_ = assets;
  md.margins_ = std::move(margins);
  md.sell_.resize(nodes.size());
  md.buy_.resize(nodes.size());
  for (NodeIndex n = 0; n < nodes.size(); ++n) {
    NodeMarket& rec = nodes[n];
    const std::string& id = tree.id(n);
    if (tree.is_root(n) && rec.returns.size() == 0) {
      rec.returns = Vector::Ones(assets);
    }
    if (rec.returns.size() != assets || rec.cost_sell.size() != assets ||
        rec.cost_buy.size() != assets) {
      throw Error(ErrorCode::kDimensionMismatch,
                  fmt::format("node {}: market vectors must have {} entries",
                              id, assets));
    }
    for (int i = 0; i < assets; ++i) {
      if (!(rec.returns[i] > 0.0) || !std::isfinite(rec.returns[i])) {
        throw Error(ErrorCode::kInvalidMarket,
                    fmt::format("node {}: return {} of asset {} must be "
                                "positive",
                                id, rec.returns[i], i));
      }
      if (!(rec.cost_sell[i] >= 0.0 && rec.cost_sell[i] < 1.0)) {
        throw Error(ErrorCode::kInvalidMarket,
                    fmt::format("node {}: cost_sell {} of asset {} outside "
                                "[0, 1)",
                                id, rec.cost_sell[i], i));
      }
      if (!(rec.cost_buy[i] >= 0.0) || !std::isfinite(rec.cost_buy[i])) {
        throw Error(ErrorCode::kInvalidMarket,
                    fmt::format("node {}: cost_buy {} of asset {} must be "
                                "nonnegative",
                                id, rec.cost_buy[i], i));
      }
    }
    md.sell_[n] = Vector::Ones(assets) - rec.cost_sell;
    md.buy_[n] = Vector::Ones(assets) + rec.cost_buy;
  }

  md.bounds_.resize(static_cast<std::size_t>(horizon) + 1);
  for (int t = 0; t <= horizon; ++t) {
    TimeBounds b;
    b.sell_lo = std::numeric_limits<double>::infinity();
    b.buy_hi = 0.0;
    if (t > 0) {
      b.return_lo = std::numeric_limits<double>::infinity();
      b.return_hi = 0.0;
    }
    for (NodeIndex n : tree.nodes_at(t)) {
      b.sell_lo = std::min(b.sell_lo, md.sell_[n].minCoeff());
      b.buy_hi = std::max(b.buy_hi, md.buy_[n].maxCoeff());
      if (t > 0) {
        b.return_lo = std::min(b.return_lo, nodes[n].returns.minCoeff());
        b.return_hi = std::max(b.return_hi, nodes[n].returns.maxCoeff());
      }
    }
    md.bounds_[static_cast<std::size_t>(t)] = b;
  }
  md.nodes_ = std::move(nodes);
  md.tree_ptr_ = std::make_shared<const ScenarioTree>(std::move(tree));
  return md;
}

MarketData MarketData::with_margins(std::vector<double> margins) const {
  return build(*tree_ptr_, assets_, std::move(margins), nodes_);
}

std::vector<Vector> returns_from_prices(const ScenarioTree& tree,
                                        const std::vector<Vector>& prices) {
  if (prices.size() != tree.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("{} price records for {} nodes", prices.size(),
                            tree.size()));
  }
  std::vector<Vector> out(prices.size());
  for (NodeIndex n = 0; n < prices.size(); ++n) {
    const int m = tree.dim(tree.depth(n));
    check_dim(prices[n], m, "price vector");
    if ((prices[n].array() <= 0.0).any()) {
      throw Error(ErrorCode::kNonpositivePrice,
                  fmt::format("node {} has a nonpositive price", tree.id(n)));
    }
    if (tree.is_root(n)) {
      out[n] = Vector::Ones(m);
    } else {
      out[n] = prices[n].cwiseQuotient(prices[tree.parent(n)]);
    }
  }
  return out;
}

double margin_residual(const MarketData& market, const Vector& a,
                       NodeIndex node) {
  check_dim(a, market.assets(), "portfolio");
  const Vector& lp = market.sell_factor(node);
  const Vector& lm = market.buy_factor(node);
  const double mu = market.margin(market.tree().depth(node));
  double r = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    r += margin_term(lp[i], lm[i], mu, a[i]);
  }
  return r;
}

double self_financing_value(const MarketData& market, const Vector& a,
                            const Vector& b, NodeIndex node) {
  checked_parent(market, node);
  check_dim(a, market.assets(), "parent portfolio");
  check_dim(b, market.assets(), "child portfolio");
  const Vector& r = market.returns(node);
  const Vector& lp = market.sell_factor(node);
  const Vector& lm = market.buy_factor(node);
  double psi = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = r[i] * a[i] - b[i];
    psi += d >= 0.0 ? lp[i] * d : lm[i] * d;
  }
  return psi;
}

ZMembership in_Z(const MarketData& market, const Vector& a, const Vector& b,
                 NodeIndex node, double tol) {
  const NodeIndex parent = checked_parent(market, node);
  ZMembership z;
  z.parent_margin = margin_residual(market, a, parent);
  z.child_margin = margin_residual(market, b, node);
  z.psi = self_financing_value(market, a, b, node);
  z.member = z.parent_margin >= -tol && z.child_margin >= -tol &&
             z.psi >= -tol;
  return z;
}

double interior_radius(const MarketData& market, const Vector& a,
                       NodeIndex node) {
  check_dim(a, market.assets(), "portfolio");
  const Vector& lp = market.sell_factor(node);
  const Vector& lm = market.buy_factor(node);
  const double mu = market.margin(market.tree().depth(node));
  const double total = margin_residual(market, a, node);
  double radius = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double rest = total - margin_term(lp[i], lm[i], mu, a[i]);
    const double r = rest >= 0.0 ? a[i] + rest / (mu * lm[i])
                                 : a[i] + rest / lp[i];
    radius = std::min(radius, r);
  }
  return radius;
}

std::vector<Vector> section_vertices(const MarketData& market,
                                    NodeIndex node) {
  const int m = market.assets();
  const Vector& lp = market.sell_factor(node);
  const Vector& lm = market.buy_factor(node);
  const double mu = market.margin(market.tree().depth(node));
  std::vector<Vector> out;
  for (int i = 0; i < m; ++i) out.push_back(Vector::Unit(m, i));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      const double pos = mu * lm[j];
      const double neg = lp[i];
      Vector v = Vector::Zero(m);
      v[i] = pos / (pos + neg);
      v[j] = -neg / (pos + neg);
      out.push_back(v);
    }
  }
  return out;
}

ConeLift lift_X(const MarketData& market, NodeIndex node) {
  const int m = market.assets();
  const double mu = market.margin(market.tree().depth(node));
  ConeLift lift;
  lift.original_dim = m;
  lift.lifted_dim = 2 * m;
  lift.projection = Eigen::MatrixXd::Zero(m, 2 * m);
  lift.projection.leftCols(m).setIdentity();
  lift.projection.rightCols(m) = -Eigen::MatrixXd::Identity(m, m);
  lift.inequalities = Eigen::MatrixXd::Zero(1, 2 * m);
  lift.inequalities.block(0, 0, 1, m) = market.sell_factor(node).transpose();
  lift.inequalities.block(0, m, 1, m) =
      -mu * market.buy_factor(node).transpose();
  lift.equalities = Eigen::MatrixXd::Zero(0, 2 * m);
  lift.norm_weights = Vector::Ones(2 * m);
  return lift;
}

ConeLift lift_Z(const MarketData& market, NodeIndex node) {
  const NodeIndex parent = checked_parent(market, node);
  const int m = market.assets();
  const int t = market.tree().depth(node);
  // z = (a+, b+, a-, b-, d+, d-).
  const int ap = 0, bp = m, am = 2 * m, bm = 3 * m, dp = 4 * m, dm = 5 * m;
  ConeLift lift;
  lift.original_dim = 2 * m;
  lift.lifted_dim = 6 * m;
  lift.projection = Eigen::MatrixXd::Zero(2 * m, 6 * m);
  lift.projection.block(0, 0, 2 * m, 2 * m).setIdentity();
  lift.projection.block(0, 2 * m, 2 * m, 2 * m) =
      -Eigen::MatrixXd::Identity(2 * m, 2 * m);

  lift.inequalities = Eigen::MatrixXd::Zero(3, 6 * m);
  lift.inequalities.block(0, ap, 1, m) = market.sell_factor(parent).transpose();
  lift.inequalities.block(0, am, 1, m) =
      -market.margin(t - 1) * market.buy_factor(parent).transpose();
  lift.inequalities.block(1, bp, 1, m) = market.sell_factor(node).transpose();
  lift.inequalities.block(1, bm, 1, m) =
      -market.margin(t) * market.buy_factor(node).transpose();
  lift.inequalities.block(2, dp, 1, m) = market.sell_factor(node).transpose();
  lift.inequalities.block(2, dm, 1, m) = -market.buy_factor(node).transpose();

  lift.equalities = Eigen::MatrixXd::Zero(m, 6 * m);
  const Vector& r = market.returns(node);
  for (int i = 0; i < m; ++i) {
    lift.equalities(i, dp + i) = 1.0;
    lift.equalities(i, dm + i) = -1.0;
    lift.equalities(i, ap + i) = -r[i];
    lift.equalities(i, am + i) = r[i];
    lift.equalities(i, bp + i) = 1.0;
    lift.equalities(i, bm + i) = -1.0;
  }
  lift.norm_weights = Vector::Zero(6 * m);
  lift.norm_weights.head(4 * m).setOnes();
  return lift;
}

bool lift_contains(const ConeLift& lift, const Vector& point, double tol) {
  check_dim(point, lift.original_dim, "point");
  LinearProgram lp;
  lp.objective = Vector::Zero(lift.lifted_dim);
  for (Eigen::Index r = 0; r < lift.inequalities.rows(); ++r) {
    lp.add_row(lift.inequalities.row(r).transpose(), RowSense::kGreaterEqual,
               -tol);
  }
  for (Eigen::Index r = 0; r < lift.equalities.rows(); ++r) {
    lp.add_row(lift.equalities.row(r).transpose(), RowSense::kEqual, 0.0);
  }
  for (Eigen::Index r = 0; r < lift.projection.rows(); ++r) {
    lp.add_row(lift.projection.row(r).transpose(), RowSense::kEqual, point[r]);
  }
  const LpResult res = solve_lp(lp);
  if (res.status == LpStatus::kOptimal) return true;
  if (res.status == LpStatus::kInfeasible) return false;
  throw Error(ErrorCode::kLpFailure, "lift feasibility program failed");
}

DualConeCheck dual_cone_violation(const MarketData& market, const Vector& p,
                                  const Vector& p_bar, NodeIndex node) {
  const int m = market.assets();
  check_dim(p, m, "p_t");
  check_dim(p_bar, m, "conditional p_{t+1}");
  const ConeLift lift = lift_Z(market, node);
  LinearProgram lp = lift_program(lift);
  lp.add_row(lift.norm_weights, RowSense::kLessEqual, 1.0);
  // a = z[0:m] - z[2m:3m], b = z[m:2m] - z[3m:4m].
  lp.objective.segment(0, m) = -p;
  lp.objective.segment(2 * m, m) = p;
  lp.objective.segment(m, m) = p_bar;
  lp.objective.segment(3 * m, m) = -p_bar;
  const LpResult res = solve_checked(lp, "dual cone check");
  const Vector orig = lift.projection * res.x;
  DualConeCheck out;
  out.violation = res.value;
  out.a = orig.head(m);
  out.b = orig.tail(m);
  return out;
}

DualConeCheck dual_membership_violation(const MarketData& market,
                                        const Vector& p, NodeIndex node) {
  const int m = market.assets();
  check_dim(p, m, "price");
  const ConeLift lift = lift_X(market, node);
  LinearProgram lp = lift_program(lift);
  lp.add_row(lift.norm_weights, RowSense::kLessEqual, 1.0);
  lp.objective.head(m) = -p;
  lp.objective.tail(m) = p;
  const LpResult res = solve_checked(lp, "dual membership check");
  DualConeCheck out;
  out.violation = res.value;
  out.a = lift.projection * res.x;
  return out;
}

double cone_section_minimum(double mu, double weight, int m,
                            SectionMethod method) {
  if (m < 1) {
    throw Error(ErrorCode::kDimensionMismatch, "dimension must be positive");
  }
  if (method == SectionMethod::kAuto) {
    method = m <= 3 ? SectionMethod::kGrid : SectionMethod::kSignPatternLp;
  }
  return method == SectionMethod::kGrid ? section_grid(mu, weight, m)
                                        : section_lp(mu, weight, m);
}

std::vector<double> compute_nu(const MarketData& market) {
  const int horizon = market.horizon();
  std::vector<double> nu(static_cast<std::size_t>(horizon) + 1);
  for (int t = 0; t <= horizon; ++t) {
    const TimeBounds b = market.bounds(t);
    double v = b.buy_hi / b.sell_lo;
    if (t < horizon) {
      const TimeBounds n = market.bounds(t + 1);
      v = std::max(v, (n.buy_hi * n.return_hi) / (n.sell_lo * n.return_lo));
    }
    nu[static_cast<std::size_t>(t)] = v;
  }
  return nu;
}

MarketConstants market_constants(const MarketData& market,
                                 SectionMethod method) {
  const int horizon = market.horizon();
  const int m = market.assets();
  const std::size_t size = static_cast<std::size_t>(horizon) + 1;
  MarketConstants c;
  c.nu = compute_nu(market);
  c.c1.assign(size, 0.0);
  c.c2.assign(size, 0.0);
  c.k.assign(size, 0.0);
  c.h.assign(size, 0.0);
  for (int t = 0; t <= horizon; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    const double mu = market.margin(t);
    if (mu <= c.nu[ts]) {
      throw Error(ErrorCode::kMarginTooTight,
                  fmt::format("t={}: mu={} does not exceed nu={}", t, mu,
                              c.nu[ts]));
    }
    c.c1[ts] = cone_section_minimum(mu, c.nu[ts], m, method);
    if (!(c.c1[ts] > 0.0)) {
      throw Error(ErrorCode::kMarginTooTight,
                  fmt::format("t={}: C1={} is not positive", t, c.c1[ts]));
    }
    c.h[ts] = 1.0 / cone_section_minimum(mu, 1.0, m, method);
  }
  for (int t = 1; t <= horizon; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    const TimeBounds b = market.bounds(t);
    c.c2[ts] = c.c1[ts - 1] * b.sell_lo * b.return_lo / (2.0 * b.buy_hi);
    c.k[ts] = 2.0 * b.buy_hi * b.return_hi / (c.c1[ts] * b.sell_lo);
  }
  return c;
}

Vector feasible_completion(const MarketData& market,
                           const MarketConstants& constants, const Vector& a,
                           NodeIndex node) {
  const NodeIndex parent = checked_parent(market, node);
  const double margin = margin_residual(market, a, parent);
  if (margin < -kConeTol) {
    throw Error(ErrorCode::kNotInCone,
                fmt::format("node {}: parent margin residual {}",
                            market.tree().id(node), margin));
  }
  const int m = market.assets();
  const int t = market.tree().depth(node);
  const double scale = 0.5 * constants.c2.at(static_cast<std::size_t>(t)) *
                       a.lpNorm<1>() / m;
  Vector b = Vector::Constant(m, scale);
  if (!in_Z(market, a, b, node).member) b.setZero();
  return b;
}

Path dominating_path(const MarketData& market, const MarketConstants& constants,
                     const RelaxedSequence& seq) {
  const ScenarioTree& tree = market.tree();
  const int horizon = tree.horizon();
  const auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kPreconditionViolated, msg);
  };
  if (seq.v.size() != static_cast<std::size_t>(horizon) + 1 ||
      seq.u.size() != static_cast<std::size_t>(horizon) + 2) {
    fail("relaxed sequence has the wrong length");
  }
  for (int t = 0; t <= horizon + 1; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    const int depth = std::min(t, horizon);
    if (t <= horizon && (seq.v[ts].depth() != t ||
                         seq.v[ts].size() != tree.count_at(t))) {
      fail(fmt::format("v_{} is not adapted at depth {}", t, t));
    }
    if (t >= 1 && (seq.u[ts].depth() != t ||
                   seq.u[ts].size() != tree.count_at(depth))) {
      fail(fmt::format("u_{} is not adapted at depth {}", t, t));
    }
  }
  for (int t = 1; t <= horizon; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    for (NodeIndex n : tree.nodes_at(t)) {
      const Vector& u = seq.u[ts].at(tree, n);
      const Vector& v = seq.v[ts].at(tree, n);
      if (!in_Z(market, u, v, n).member) {
        fail(fmt::format("(u_{0}, v_{0}) not in Z at node {1}", t,
                         tree.id(n)));
      }
      const NodeIndex p = tree.parent(n);
      const Vector slack = seq.v[ts - 1].at(tree, p) - u;
      if (margin_residual(market, slack, p) < -kConeTol) {
        fail(fmt::format("v_{} - u_{} not in X at node {}", t - 1, t,
                         tree.id(n)));
      }
    }
  }
  const auto last = static_cast<std::size_t>(horizon);
  for (NodeIndex l : tree.nodes_at(horizon)) {
    const Vector slack = seq.v[last].at(tree, l) - seq.u[last + 1].at(tree, l);
    if (margin_residual(market, slack, l) < -kConeTol) {
      fail(fmt::format("v_N - u_(N+1) not in X at leaf {}", tree.id(l)));
    }
  }

  Path y;
  y.push_back(seq.v[0]);
  for (int n = 0; n < horizon; ++n) {
    const auto ns = static_cast<std::size_t>(n);
    AdaptedVector next = seq.v[ns + 1];
    for (NodeIndex c : tree.nodes_at(n + 1)) {
      const Vector g = y[ns].at(tree, tree.parent(c)) - seq.u[ns + 1].at(tree, c);
      next.at(tree, c) += feasible_completion(market, constants, g, c);
    }
    y.push_back(std::move(next));
  }
  return y;
}

SlaterPath slater_path(const MarketData& market,
                       const MarketConstants& constants, const Vector& x0) {
  const ScenarioTree& tree = market.tree();
  const int horizon = tree.horizon();
  const int m = market.assets();
  const Vector start = x0.size() == 0 ? Vector::Ones(m) : x0;
  check_dim(start, m, "initial portfolio");
  if (!(interior_radius(market, start, tree.root()) > 0.0)) {
    throw Error(ErrorCode::kInfeasibleStart,
                "initial portfolio is not interior to X_0");
  }

  SlaterPath out;
  RelaxedSequence& seq = out.witness;
  seq.v.push_back(AdaptedVector::constant(tree, 0, start));
  seq.u.emplace_back();
  for (int n = 0; n <= horizon; ++n) {
    const auto ns = static_cast<std::size_t>(n);
    double delta = std::numeric_limits<double>::infinity();
    for (NodeIndex k : tree.nodes_at(n)) {
      delta = std::min(delta, interior_radius(market, seq.v[ns].at(tree, k), k));
    }
    const double lambda = delta / (2.0 * m);
    seq.u.push_back(AdaptedVector(
        n + 1, m,
        std::vector<Vector>(tree.count_at(std::min(n + 1, horizon)),
                            Vector::Constant(m, lambda))));
    if (n < horizon) {
      const double c2 = constants.c2[ns + 1];
      seq.v.push_back(AdaptedVector::constant(
          tree, n + 1, Vector::Constant(m, lambda * c2 / 2.0)));
    }
  }
  out.path = dominating_path(market, constants, seq);

  out.radius.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
  out.min_margin.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
  out.min_psi.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
  for (int t = 0; t <= horizon; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    double radius = std::numeric_limits<double>::infinity();
    double margin = std::numeric_limits<double>::infinity();
    double psi = std::numeric_limits<double>::infinity();
    for (NodeIndex n : tree.nodes_at(t)) {
      const Vector& x = out.path[ts].at(tree, n);
      radius = std::min(radius, interior_radius(market, x, n));
      margin = std::min(margin, margin_residual(market, x, n));
      if (t > 0) {
        psi = std::min(psi, self_financing_value(
                                market, out.path[ts - 1].at(tree, tree.parent(n)),
                                x, n));
      }
    }
    out.radius[ts] = radius;
    out.min_margin[ts] = margin;
    out.min_psi[ts] = t > 0 ? psi : 0.0;
    if (!(radius > 0.0) || (t > 0 && !(psi > 0.0))) {
      throw Error(ErrorCode::kMarginTooTight,
                  fmt::format("no strictly interior point at t={}", t));
    }
  }
  return out;
}

Vector sample_X(const MarketData& market, NodeIndex node, std::mt19937_64& rng,
                bool boundary) {
  const int m = market.assets();
  const Vector& lp = market.sell_factor(node);
  const Vector& lm = market.buy_factor(node);
  const double mu = market.margin(market.tree().depth(node));
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  Vector v(m);
  for (int i = 0; i < m; ++i) v[i] = unit(rng) < 0.15 ? 0.0 : normal(rng);
  if (v.lpNorm<1>() == 0.0) v[0] = 1.0;
  v *= 0.1 + 3.0 * unit(rng);
  auto parts = [&](const Vector& x, double& pos, double& neg) {
    pos = 0.0;
    neg = 0.0;
    for (int i = 0; i < m; ++i) {
      if (x[i] > 0.0) pos += lp[i] * x[i];
      if (x[i] < 0.0) neg -= mu * lm[i] * x[i];
    }
  };
  double pos = 0.0;
  double neg = 0.0;
  parts(v, pos, neg);
  if (pos == 0.0) {
    v = -v;
    parts(v, pos, neg);
  }
  if (neg == 0.0) {
    if (!boundary || m == 1) return v;
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(m));
    v[j] = -std::abs(v[j]) - 0.5;
    parts(v, pos, neg);
    if (pos == 0.0) {
      v[(j + 1) % m] = 1.0;
      parts(v, pos, neg);
    }
  }
  const double kappa_max = pos / neg;
  const double kappa = boundary ? kappa_max : kappa_max * unit(rng);
  Vector a(m);
  for (int i = 0; i < m; ++i) a[i] = v[i] > 0.0 ? v[i] : kappa * v[i];
  return a;
}

Vector sample_X_outside(const MarketData& market, NodeIndex node,
                        std::mt19937_64& rng) {
  const int m = market.assets();
  std::uniform_real_distribution<double> unit;
  Vector a = sample_X(market, node, rng, true);
  if (a.minCoeff() >= 0.0) {
    // Boundary of a one-asset cone is {0}: go negative.
    a = -a;
    if (a.lpNorm<1>() == 0.0) a = -Vector::Ones(m);
    return a;
  }
  for (int i = 0; i < m; ++i) {
    if (a[i] < 0.0) a[i] *= 1.0 + 0.01 + 2.0 * unit(rng);
  }
  return a;
}

double max_rebalance_scale(const MarketData& market, const Vector& a,
                           const Vector& w, NodeIndex node,
                           const Vector& base) {
  const Vector b0 = base.size() == 0 ? Vector::Zero(market.assets()) : base;
  auto psi = [&](double s) {
    return self_financing_value(market, a, b0 + s * w, node);
  };
  if (w.lpNorm<1>() == 0.0 || psi(0.0) < 0.0) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (psi(hi) >= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e15) return lo;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (psi(mid) >= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

ZSample sample_Z(const MarketData& market, NodeIndex node,
                 std::mt19937_64& rng, bool boundary) {
  const NodeIndex parent = checked_parent(market, node);
  std::uniform_real_distribution<double> unit;
  ZSample s;
  s.a = sample_X(market, parent, rng, unit(rng) < 0.3);
  const Vector w = sample_X(market, node, rng, unit(rng) < 0.3);
  const double top = max_rebalance_scale(market, s.a, w, node);
  s.b = (boundary ? top : top * unit(rng)) * w;
  return s;
}

Path random_path(const MarketData& market, const MarketConstants& constants,
                 const Vector& x0, std::mt19937_64& rng, double lo,
                 double hi) {
  const ScenarioTree& tree = market.tree();
  std::uniform_real_distribution<double> frac(lo, hi);
  Path y;
  y.push_back(AdaptedVector::constant(tree, 0, x0));
  for (int t = 1; t <= tree.horizon(); ++t) {
    AdaptedVector next = AdaptedVector::zeros(tree, t, market.assets());
    const AdaptedVector& prev = y.back();
    for (NodeIndex n : tree.nodes_at(t)) {
      const Vector& a = prev.at(tree, tree.parent(n));
      const Vector base = feasible_completion(market, constants, a, n);
      const Vector w = sample_X(market, n, rng);
      next.at(tree, n) =
          base + frac(rng) * max_rebalance_scale(market, a, w, n, base) * w;
    }
    y.push_back(std::move(next));
  }
  return y;
}

}  // namespace vng
