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

#include "vngale/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "vngale/error.hpp"

namespace vng {
namespace {

std::vector<Vector> per_leaf(const MarketData& market, std::vector<Vector> q) {
  const std::size_t leaves = market.tree().count_at(market.horizon());
  if (q.size() == 1 && leaves > 1) q.assign(leaves, q.front());
  if (q.size() != leaves) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("{} price vectors for {} leaves", q.size(),
                            leaves));
  }
  for (const Vector& v : q) {
    if (v.size() != market.assets()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "objective price vector has the wrong dimension");
    }
  }
  return q;
}

// H_q with H_q^-1 |a| <= q a <= H_q |a| on X_N, for q in the interior of X_N^*.
double price_bound(const MarketData& market, const Vector& q, NodeIndex leaf) {
  const double lo = dual_interior_margin(market, q, leaf);
  if (!(lo > 0.0)) {
    throw Error(ErrorCode::kInvalidObjective,
                fmt::format("leaf {}: q is not interior to the dual cone "
                            "(min q a = {})",
                            market.tree().id(leaf), lo));
  }
  return std::max(q.cwiseAbs().maxCoeff(), 1.0 / lo);
}

void tally(AxiomCount& c, double excess, double scale, double tol) {
  ++c.checked;
  const double rel = excess / scale;
  if (rel > tol) ++c.violations;
  c.worst = std::max(c.worst, rel);
}

}  // namespace

std::string_view objective_kind_name(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::kLinear: return "linear";
    case ObjectiveKind::kLiquidation: return "liquidation";
    case ObjectiveKind::kNormPenalized: return "norm_penalized";
  }
  return "linear";
}

ObjectiveKind parse_objective_kind(std::string_view name) {
  if (name == "linear") return ObjectiveKind::kLinear;
  if (name == "liquidation") return ObjectiveKind::kLiquidation;
  if (name == "norm_penalized") return ObjectiveKind::kNormPenalized;
  throw Error(ErrorCode::kParseError,
              fmt::format("unknown objective '{}'", name));
}

std::string_view penalty_norm_name(PenaltyNorm norm) {
  return norm == PenaltyNorm::kL1 ? "l1" : "l2";
}

PenaltyNorm parse_penalty_norm(std::string_view name) {
  if (name == "l1") return PenaltyNorm::kL1;
  if (name == "l2") return PenaltyNorm::kL2;
  throw Error(ErrorCode::kParseError, fmt::format("unknown norm '{}'", name));
}

TerminalObjective TerminalObjective::linear(const MarketData& market,
                                            std::vector<Vector> q) {
  TerminalObjective obj;
  obj.kind_ = ObjectiveKind::kLinear;
  obj.q_ = per_leaf(market, std::move(q));
  const auto leaves = market.tree().nodes_at(market.horizon());
  obj.theta_.assign(leaves.size(), 0.0);
  obj.theta_limit_.assign(leaves.size(), 0.0);
  for (NodeIndex l : leaves) {
    obj.sell_.push_back(market.sell_factor(l));
    obj.buy_.push_back(market.buy_factor(l));
    obj.bound_.push_back(price_bound(market, obj.q_[obj.bound_.size()], l));
  }
  return obj;
}

TerminalObjective TerminalObjective::liquidation(
    const MarketData& market, const MarketConstants& constants) {
  TerminalObjective obj;
  obj.kind_ = ObjectiveKind::kLiquidation;
  const int horizon = market.horizon();
  const TimeBounds b = market.bounds(horizon);
  const double c1 = constants.c1.at(static_cast<std::size_t>(horizon));
  const double h = std::max(b.buy_hi, 1.0 / (c1 * b.sell_lo));
  for (NodeIndex l : market.tree().nodes_at(horizon)) {
    obj.q_.push_back(Vector::Ones(market.assets()));
    obj.theta_.push_back(0.0);
    obj.theta_limit_.push_back(0.0);
    obj.sell_.push_back(market.sell_factor(l));
    obj.buy_.push_back(market.buy_factor(l));
    obj.bound_.push_back(h);
  }
  return obj;
}

TerminalObjective TerminalObjective::norm_penalized(
    const MarketData& market, std::vector<Vector> q, std::vector<double> theta,
    PenaltyNorm norm, double delta) {
  return penalized(market, std::move(q), std::move(theta), norm, delta, true);
}

TerminalObjective TerminalObjective::norm_penalized_unchecked(
    const MarketData& market, std::vector<Vector> q, std::vector<double> theta,
    PenaltyNorm norm, double delta) {
  return penalized(market, std::move(q), std::move(theta), norm, delta, false);
}

TerminalObjective TerminalObjective::penalized(const MarketData& market,
                                               std::vector<Vector> q,
                                               std::vector<double> theta,
                                               PenaltyNorm norm, double delta,
                                               bool enforce) {
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw Error(ErrorCode::kInvalidObjective,
                fmt::format("delta = {} outside (0, 1]", delta));
  }
  TerminalObjective obj;
  obj.kind_ = ObjectiveKind::kNormPenalized;
  obj.norm_ = norm;
  obj.delta_ = delta;
  obj.q_ = per_leaf(market, std::move(q));
  const auto leaves = market.tree().nodes_at(market.horizon());
  if (theta.size() == 1 && leaves.size() > 1) theta.assign(leaves.size(), theta[0]);
  if (theta.size() != leaves.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("{} penalty weights for {} leaves", theta.size(),
                            leaves.size()));
  }
  obj.theta_ = std::move(theta);
  const double h_hat =
      norm == PenaltyNorm::kL1 ? 1.0 : std::sqrt(static_cast<double>(market.assets()));
  std::size_t slot = 0;
  for (NodeIndex l : leaves) {
    const double hq = price_bound(market, obj.q_[slot], l);
    const double limit = (1.0 - delta) / (hq * h_hat);
    const double th = obj.theta_[slot];
    if (!(th >= 0.0) || (enforce && th > limit)) {
      throw Error(ErrorCode::kInvalidObjective,
                  fmt::format("leaf {}: theta = {} outside [0, {}]",
                              market.tree().id(l), th, limit));
    }
    obj.sell_.push_back(market.sell_factor(l));
    obj.buy_.push_back(market.buy_factor(l));
    obj.bound_.push_back(hq / delta);
    obj.theta_limit_.push_back(limit);
    ++slot;
  }
  return obj;
}

double TerminalObjective::value(std::size_t slot, const Vector& a) const {
  switch (kind_) {
    case ObjectiveKind::kLinear:
      return q_[slot].dot(a);
    case ObjectiveKind::kLiquidation: {
      double v = 0.0;
      for (Eigen::Index i = 0; i < a.size(); ++i) {
        v += a[i] >= 0.0 ? sell_[slot][i] * a[i] : buy_[slot][i] * a[i];
      }
      return v;
    }
    case ObjectiveKind::kNormPenalized: {
      const double n = norm_ == PenaltyNorm::kL1 ? a.lpNorm<1>() : a.norm();
      return q_[slot].dot(a) - theta_[slot] * n;
    }
  }
  return 0.0;
}

Vector TerminalObjective::gradient(std::size_t slot, const Vector& a) const {
  switch (kind_) {
    case ObjectiveKind::kLinear:
      return q_[slot];
    case ObjectiveKind::kLiquidation: {
      Vector g(a.size());
      for (Eigen::Index i = 0; i < a.size(); ++i) {
        g[i] = a[i] >= 0.0 ? sell_[slot][i] : buy_[slot][i];
      }
      return g;
    }
    case ObjectiveKind::kNormPenalized: {
      Vector g = q_[slot];
      if (norm_ == PenaltyNorm::kL1) {
        for (Eigen::Index i = 0; i < a.size(); ++i) {
          g[i] -= theta_[slot] * (a[i] >= 0.0 ? 1.0 : -1.0);
        }
      } else if (a.norm() > 0.0) {
        g -= theta_[slot] * a / a.norm();
      }
      return g;
    }
  }
  return q_[slot];
}

double evaluate(const MarketData& market, const TerminalObjective& objective,
                NodeIndex leaf, const Vector& a) {
  const ScenarioTree& tree = market.tree();
  if (tree.depth(leaf) != tree.horizon()) {
    throw Error(ErrorCode::kDepthMismatch, "objective lives on the leaves");
  }
  const double margin = margin_residual(market, a, leaf);
  if (margin < -kConeTol) {
    throw Error(ErrorCode::kNotInCone,
                fmt::format("leaf {}: margin residual {}", tree.id(leaf),
                            margin));
  }
  const double v = objective.value(tree.slot(leaf), a);
  if (v < -kConeTol * (1.0 + a.lpNorm<1>())) {
    throw Error(ErrorCode::kNegativeValue,
                fmt::format("leaf {}: psi = {}", tree.id(leaf), v));
  }
  return v;
}

Vector gradient(const MarketData& market, const TerminalObjective& objective,
                NodeIndex leaf, const Vector& a) {
  const double v = evaluate(market, objective, leaf, a);
  if (!(v > 0.0)) {
    throw Error(ErrorCode::kZeroValue,
                fmt::format("leaf {}: psi = {}", market.tree().id(leaf), v));
  }
  return objective.gradient(market.tree().slot(leaf), a);
}

double log_objective(const ScenarioTree& tree,
                     const TerminalObjective& objective,
                     const AdaptedVector& terminal) {
  if (terminal.depth() != tree.horizon() ||
      terminal.size() != tree.count_at(tree.horizon())) {
    throw Error(ErrorCode::kDepthMismatch, "terminal field must be at depth N");
  }
  double total = 0.0;
  for (NodeIndex l : tree.nodes_at(tree.horizon())) {
    const double v = objective.value(tree.slot(l), terminal.at(tree, l));
    if (!(v > 0.0)) return -std::numeric_limits<double>::infinity();
    total += tree.probability(l) * std::log(v);
  }
  return total;
}

double dual_interior_margin(const MarketData& market, const Vector& q,
                            NodeIndex leaf) {
  double lo = std::numeric_limits<double>::infinity();
  for (const Vector& v : section_vertices(market, leaf)) {
    lo = std::min(lo, q.dot(v));
  }
  return lo;
}

bool PsiClassReport::passed() const {
  for (const AxiomCount* c : {&superadditivity, &homogeneity, &lower_bound,
                              &upper_bound, &monotonicity, &concavity,
                              &euler}) {
    if (c->violations > 0) return false;
  }
  return true;
}

PsiClassReport check_psi_class(const TerminalObjective& objective,
                               const MarketData& market, int samples,
                               std::uint64_t seed, double tol) {
  const ScenarioTree& tree = market.tree();
  const auto leaves = tree.nodes_at(tree.horizon());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit;
  PsiClassReport r;
  r.continuity_note =
      "continuity holds automatically: finite sample space, continuous psi";

  auto bounds = [&](std::size_t slot, const Vector& a) {
    const double n = a.lpNorm<1>();
    const double h = objective.bound(slot);
    const double v = objective.value(slot, a);
    const double scale = 1.0 + n;
    tally(r.lower_bound, n / h - v, scale, tol);
    tally(r.upper_bound, v - h * n, scale, tol);
  };

  for (NodeIndex l : leaves) {
    for (const Vector& v : section_vertices(market, l)) {
      bounds(tree.slot(l), v);
    }
  }

  for (int k = 0; k < samples; ++k) {
    const NodeIndex l = leaves[rng() % leaves.size()];
    const std::size_t slot = tree.slot(l);
    const Vector a = sample_X(market, l, rng, unit(rng) < 0.3);
    const Vector b = sample_X(market, l, rng, unit(rng) < 0.3);
    const double scale = 1.0 + a.lpNorm<1>() + b.lpNorm<1>();
    const double va = objective.value(slot, a);
    const double vb = objective.value(slot, b);

    tally(r.superadditivity, va + vb - objective.value(slot, a + b), scale,
          tol);
    const double lam = 10.0 * unit(rng);
    tally(r.homogeneity,
          std::abs(objective.value(slot, lam * a) - lam * va), scale * (1 + lam),
          tol);
    bounds(slot, a);
    tally(r.monotonicity, va - objective.value(slot, a + b), scale, tol);
    const double th = unit(rng);
    tally(r.concavity,
          th * va + (1 - th) * vb - objective.value(slot, th * a + (1 - th) * b),
          scale, tol);
    if (va > 0.0) {
      tally(r.euler, std::abs(objective.gradient(slot, a).dot(a) - va), scale,
            tol);
    }
  }
  return r;
}

}  // namespace vng
