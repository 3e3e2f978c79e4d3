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

#include "vngale/certification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "vngale/error.hpp"

namespace vng {
namespace {

constexpr double kKinkRatio = 1e-7;
// Both objective rows count as active when the smaller multiplier carries at
// least this share of their sum.
constexpr double kActiveShare = 1e-6;

const Vector& value_at(const Path& path, const ScenarioTree& tree, int t,
                       NodeIndex n) {
  return path[static_cast<std::size_t>(t)].at(tree, n);
}

void check_path(const Path& path, const MarketData& market, const char* what) {
  const ScenarioTree& tree = market.tree();
  bool ok = path.size() == static_cast<std::size_t>(tree.horizon()) + 1;
  for (std::size_t t = 0; ok && t < path.size(); ++t) {
    ok = path[t].depth() == static_cast<int>(t) &&
         path[t].size() == tree.count_at(static_cast<int>(t)) &&
         path[t].dim() == market.assets();
  }
  if (!ok) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("{} does not match the tree", what));
  }
}

void check_dual(const DualPath& dual, const MarketData& market) {
  const ScenarioTree& tree = market.tree();
  const int n = tree.horizon();
  bool ok = dual.p.size() == static_cast<std::size_t>(n) + 2;
  for (int t = 1; ok && t <= n + 1; ++t) {
    const AdaptedVector& layer = dual.p[static_cast<std::size_t>(t)];
    const int depth = std::min(t, n);
    ok = layer.depth() == depth && layer.size() == tree.count_at(depth) &&
         layer.dim() == market.assets();
  }
  if (!ok) {
    throw Error(ErrorCode::kShapeMismatch, "dual path does not match the tree");
  }
}

// bar[t] = E_t p_{t+1} at depth t, t = 0..N (bar[N] = p_{N+1}).
std::vector<AdaptedVector> conditional_layers(const DualPath& dual,
                                              const ScenarioTree& tree) {
  const int n = tree.horizon();
  std::vector<AdaptedVector> bar;
  for (int t = 0; t < n; ++t) {
    bar.push_back(conditional_expectation(tree, dual.p[static_cast<std::size_t>(t) + 1]));
  }
  bar.push_back(dual.p[static_cast<std::size_t>(n) + 1]);
  return bar;
}

void consider(std::optional<Witness>& worst, Witness w, double tol) {
  if (!(w.value <= tol) && (!worst || w.value > worst->value ||
                            std::isnan(w.value))) {
    worst = std::move(w);
  }
}

}  // namespace

DualPath extract_dual(const Solution& solution, const PathProblem& problem) {
  if (!solution.converged) {
    throw Error(ErrorCode::kNotCertified,
                "the solve did not converge; no dual is extracted");
  }
  const MarketData& md = problem.market;
  const ScenarioTree& tree = md.tree();
  const TerminalObjective& obj = problem.objective;
  const int n_hor = tree.horizon();
  const int m = md.assets();
  check_path(solution.path, md, "solution path");
  if (solution.multipliers.size() != tree.size()) {
    throw Error(ErrorCode::kShapeMismatch, "multipliers do not match the tree");
  }

  DualPath dual;
  dual.p.resize(static_cast<std::size_t>(n_hor) + 2);
  for (int t = 1; t <= n_hor; ++t) {
    dual.p[static_cast<std::size_t>(t)] = AdaptedVector::zeros(tree, t, m);
  }
  dual.p[static_cast<std::size_t>(n_hor) + 1] = AdaptedVector::zeros(tree, n_hor, m);

  for (NodeIndex n = 1; n < tree.size(); ++n) {
    const NodeMultipliers& u = solution.multipliers[n];
    const Vector kappa = u.psi_plus.cwiseProduct(md.sell_factor(n)) +
                         u.psi_minus.cwiseProduct(md.buy_factor(n));
    dual.p[static_cast<std::size_t>(tree.depth(n))].at(tree, n) =
        md.returns(n).cwiseProduct(kappa) / tree.probability(n);
  }

  for (NodeIndex leaf : tree.nodes_at(n_hor)) {
    const std::size_t slot = tree.slot(leaf);
    const Vector& x = value_at(solution.path, tree, n_hor, leaf);
    const double psi = obj.value(slot, x);
    Vector g = obj.gradient(slot, x);
    const NodeMultipliers& u = solution.multipliers[leaf];
    const bool lifted = u.objective_plus.size() == m;
    const double scale = x.lpNorm<1>();
    for (int i = 0; lifted && i < m; ++i) {
      const double plus = u.objective_plus[i];
      const double minus = u.objective_minus[i];
      if (!(plus + minus > 0.0)) continue;
      const bool kink = std::abs(x[i]) <= kKinkRatio * scale ||
                        std::min(plus, minus) >= kActiveShare * (plus + minus);
      if (!kink) continue;
      if (obj.kind() == ObjectiveKind::kLiquidation) {
        g[i] = (plus * obj.sell_factor(slot)[i] + minus * obj.buy_factor(slot)[i]) /
               (plus + minus);
      } else {
        g[i] = obj.q(slot)[i] - obj.theta(slot) * (plus - minus) / (plus + minus);
      }
    }
    dual.p[static_cast<std::size_t>(n_hor) + 1].at(tree, leaf) = g / psi;
  }
  return dual;
}

RapidityCertificate verify_rapid(const Path& path, const DualPath& dual,
                                 const MarketData& market, double tol,
                                 const std::vector<Path>& competitors) {
  const ScenarioTree& tree = market.tree();
  const int n_hor = tree.horizon();
  check_path(path, market, "path");
  check_dual(dual, market);
  const std::vector<AdaptedVector> bar = conditional_layers(dual, tree);

  RapidityCertificate cert;
  cert.tol = tol;
  cert.normalization.assign(static_cast<std::size_t>(n_hor) + 1, 0.0);
  std::optional<Witness> worst;

  for (int t = 1; t <= n_hor + 1; ++t) {
    const int depth = std::min(t, n_hor);
    for (NodeIndex n : tree.nodes_at(depth)) {
      const bool terminal = t == n_hor + 1;
      const NodeIndex owner = terminal ? n : tree.parent(n);
      const Vector& p = dual.at(tree, t, n);
      const Vector& x = value_at(path, tree, t - 1, owner);
      NodeCheck check;
      check.t = t;
      check.node = tree.id(n);
      check.normalization = std::abs(p.dot(x) - 1.0);
      const DualConeCheck member = dual_membership_violation(market, p, owner);
      check.membership = member.violation;
      consider(worst, {"normalization", t, check.node, check.normalization, x, {}},
               tol);
      consider(worst, {"membership", t, check.node, member.violation, member.a, {}},
               tol);
      if (!terminal) {
        const DualConeCheck tr =
            dual_cone_violation(market, p, bar[static_cast<std::size_t>(t)].at(tree, n), n);
        check.transition = tr.violation;
        consider(worst, {"transition", t, check.node, tr.violation, tr.a, tr.b}, tol);
        const Vector& b = value_at(path, tree, t, n);
        double bad = std::max({0.0, -self_financing_value(market, x, b, n),
                               -margin_residual(market, b, n)});
        if (t == 1) bad = std::max(bad, -margin_residual(market, x, owner));
        check.feasibility = bad;
        consider(worst, {"feasibility", t, check.node, bad, x, b}, tol);
      }
      auto& slot = cert.normalization[static_cast<std::size_t>(t) - 1];
      slot = std::max(slot, check.normalization);
      cert.max_normalization = std::max(cert.max_normalization, check.normalization);
      cert.max_membership = std::max(cert.max_membership, check.membership);
      cert.max_transition = std::max(cert.max_transition, check.transition);
      cert.max_feasibility = std::max(cert.max_feasibility, check.feasibility);
      cert.nodes.push_back(std::move(check));
    }
  }

  for (const Path& y : competitors) {
    const SupermartingaleReport rep = supermartingale_check(dual, y, market);
    ++cert.competitors;
    cert.supermartingale = std::max(cert.supermartingale, rep.violation());
    consider(worst, {"supermartingale", 0, rep.node, rep.violation(), {}, {}}, tol);
  }

  cert.witness = worst;
  cert.certified = !worst.has_value();
  return cert;
}

SupermartingaleReport supermartingale_check(const DualPath& dual, const Path& y,
                                            const MarketData& market) {
  const ScenarioTree& tree = market.tree();
  const int n_hor = tree.horizon();
  check_path(y, market, "competitor path");
  check_dual(dual, market);
  const std::vector<AdaptedVector> bar = conditional_layers(dual, tree);

  SupermartingaleReport rep;
  rep.nodewise = -std::numeric_limits<double>::infinity();
  rep.conditional = -std::numeric_limits<double>::infinity();
  rep.expectation = -std::numeric_limits<double>::infinity();
  for (int t = 1; t <= n_hor; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    double e_next = 0.0;
    double e_prev = 0.0;
    for (NodeIndex n : tree.nodes_at(t)) {
      const double lhs = bar[ts].at(tree, n).dot(y[ts].at(tree, n));
      const double rhs = dual.at(tree, t, n).dot(y[ts - 1].at(tree, tree.parent(n)));
      if (lhs - rhs > rep.nodewise) {
        rep.nodewise = lhs - rhs;
        rep.node = tree.id(n);
      }
      rep.largest_gap = std::max(rep.largest_gap, std::abs(lhs - rhs));
      e_next += tree.probability(n) * lhs;
      e_prev += tree.probability(n) * rhs;
    }
    rep.expectation = std::max(rep.expectation, e_next - e_prev);
    for (NodeIndex k : tree.nodes_at(t - 1)) {
      double lhs = 0.0;
      for (NodeIndex n : tree.children(k)) {
        lhs += tree.cond_prob(n) * bar[ts].at(tree, n).dot(y[ts].at(tree, n));
      }
      const double rhs = bar[ts - 1].at(tree, k).dot(y[ts - 1].at(tree, k));
      rep.conditional = std::max(rep.conditional, lhs - rhs);
    }
  }
  return rep;
}

GrowthTable growth_dominance(const DualPath& dual, const Path& y,
                             const MarketData& market, bool require_proviso) {
  const ScenarioTree& tree = market.tree();
  const int n_hor = tree.horizon();
  check_path(y, market, "competitor path");
  check_dual(dual, market);
  const std::vector<AdaptedVector> bar = conditional_layers(dual, tree);

  GrowthTable table;
  table.max_ratio.assign(static_cast<std::size_t>(n_hor) + 1, 0.0);
  table.mean_ratio.assign(static_cast<std::size_t>(n_hor) + 1, 0.0);
  table.node_count.assign(static_cast<std::size_t>(n_hor) + 1, 0);
  for (int t = 1; t <= n_hor; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    double mass = 0.0;
    double sum = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (NodeIndex n : tree.nodes_at(t)) {
      GrowthRow row;
      row.t = t;
      row.node = tree.id(n);
      const double den = dual.at(tree, t, n).dot(y[ts - 1].at(tree, tree.parent(n)));
      row.proviso = den > 0.0;
      if (!row.proviso) {
        if (require_proviso) {
          throw Error(ErrorCode::kNonpositiveDenominator,
                      fmt::format("p_{} y_{} = {} at node '{}'", t, t - 1, den,
                                  row.node));
        }
        row.ratio = std::numeric_limits<double>::quiet_NaN();
      } else {
        row.ratio = bar[ts].at(tree, n).dot(y[ts].at(tree, n)) / den;
        mass += tree.probability(n);
        sum += tree.probability(n) * row.ratio;
        best = std::max(best, row.ratio);
        ++table.node_count[ts];
      }
      table.rows.push_back(std::move(row));
    }
    table.max_ratio[ts] = table.node_count[ts] ? best : std::numeric_limits<double>::quiet_NaN();
    table.mean_ratio[ts] = table.node_count[ts] ? sum / mass : std::numeric_limits<double>::quiet_NaN();
  }
  return table;
}

EquivalenceReport check_equivalences(const Path& path, const DualPath& dual,
                                     int t, const MarketData& market,
                                     const std::vector<Path>& samples,
                                     double tol) {
  const ScenarioTree& tree = market.tree();
  const int n_hor = tree.horizon();
  if (t < 1 || t > n_hor) {
    throw Error(ErrorCode::kDepthMismatch,
                fmt::format("period {} outside 1..{}", t, n_hor));
  }
  check_path(path, market, "path");
  check_dual(dual, market);
  const auto ts = static_cast<std::size_t>(t);
  const std::vector<AdaptedVector> bar = conditional_layers(dual, tree);

  EquivalenceReport rep;
  rep.t = t;
  rep.worst_ratio = rep.worst_log_ratio = rep.worst_expectation =
      -std::numeric_limits<double>::infinity();

  // Returns (E ratio - 1, E ln ratio, E p_{t+1} y - E p_t x) with NaN for the
  // ratio terms when the proviso fails.
  struct Terms {
    double ratio, log_ratio, expectation;
  };
  auto evaluate = [&](const Path& y) {
    double e_ratio = 0.0, e_log = 0.0, e_next = 0.0, e_prev = 0.0;
    bool ratio_ok = true, log_ok = true;
    for (NodeIndex n : tree.nodes_at(t)) {
      const double den = dual.at(tree, t, n).dot(y[ts - 1].at(tree, tree.parent(n)));
      e_prev += tree.probability(n) * den;
      if (!(den > 0.0)) ratio_ok = false;
      // Atoms of F_{t+1} below n; at t = N the node itself.
      std::vector<NodeIndex> atoms;
      if (t == n_hor) {
        atoms.push_back(n);
      } else {
        for (NodeIndex c : tree.children(n)) atoms.push_back(c);
      }
      for (NodeIndex c : atoms) {
        const double num = dual.at(tree, t + 1, c).dot(y[ts].at(tree, n));
        const double prob = tree.probability(c);
        e_next += prob * num;
        if (ratio_ok) {
          e_ratio += prob * num / den;
          if (num > 0.0) {
            e_log += prob * std::log(num / den);
          } else {
            log_ok = false;
          }
        }
      }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return Terms{ratio_ok ? e_ratio - 1.0 : nan,
                 ratio_ok && log_ok ? e_log : nan, e_next - e_prev};
  };

  const Terms own = evaluate(path);
  rep.equality_gap = std::max({std::abs(own.ratio), std::abs(own.log_ratio), std::abs(own.expectation)});
  if (std::isnan(own.ratio) || std::isnan(own.log_ratio)) {
    rep.equality_gap = std::numeric_limits<double>::quiet_NaN();
  }

  auto record = [&](const Terms& terms) {
    ++rep.samples;
    if (!std::isnan(terms.ratio)) {
      ++rep.ratio_samples;
      rep.worst_ratio = std::max(rep.worst_ratio, terms.ratio);
    }
    if (!std::isnan(terms.log_ratio)) rep.worst_log_ratio = std::max(rep.worst_log_ratio, terms.log_ratio);
    rep.worst_expectation = std::max(rep.worst_expectation, terms.expectation);
  };
  record(own);
  for (const Path& y : samples) {
    check_path(y, market, "sample path");
    record(evaluate(y));
  }

  rep.worst_cone = 0.0;
  for (NodeIndex n : tree.nodes_at(t)) {
    const DualConeCheck c =
        dual_cone_violation(market, dual.at(tree, t, n), bar[ts].at(tree, n), n);
    rep.worst_cone = std::max(rep.worst_cone, c.violation);
  }

  rep.ratio = !(rep.worst_ratio > tol);
  rep.log_ratio = !(rep.worst_log_ratio > tol);
  rep.expectation = !(rep.worst_expectation > tol);
  rep.cone = rep.worst_cone <= tol;
  const bool sampled_all = rep.ratio && rep.log_ratio && rep.expectation;
  rep.consistent = rep.cone ? sampled_all : !sampled_all;
  if (!rep.consistent) {
    rep.counterexamples.push_back(fmt::format(
        "t={}: cone check {} ({:.3e}) but ratio {:.3e}, log ratio {:.3e}, "
        "expectation {:.3e}", t,
        rep.cone ? "holds" : "fails", rep.worst_cone, rep.worst_ratio, rep.worst_log_ratio,
        rep.worst_expectation));
  }
  return rep;
}

Reconstruction reconstruct_dual(const DualPath& l, const Path& x,
                                 const MarketData& market, double tol) {
  const ScenarioTree& tree = market.tree();
  const int n_hor = tree.horizon();
  check_path(x, market, "path");
  check_dual(l, market);
  Reconstruction out;
  out.dual = l;
  for (int t = 1; t <= n_hor + 1; ++t) {
    const int depth = std::min(t, n_hor);
    for (NodeIndex n : tree.nodes_at(depth)) {
      const NodeIndex owner = t == n_hor + 1 ? n : tree.parent(n);
      Vector& p = out.dual.p[static_cast<std::size_t>(t)].at(tree, n);
      const double den = p.dot(value_at(x, tree, std::min(t - 1, n_hor), owner));
      if (!(den > 0.0)) {
        throw Error(ErrorCode::kZeroDenominator,
                    fmt::format("l_{} x_{} = {} at node '{}'", t, t - 1, den,
                                tree.id(n)));
      }
      p /= den;
    }
  }
  out.certificate = verify_rapid(x, out.dual, market, tol);
  return out;
}

std::vector<Path> sample_competitors(const MarketData& market,
                                     const MarketConstants& constants,
                                     const Path& rapid, int count,
                                     std::uint64_t seed) {
  const ScenarioTree& tree = market.tree();
  check_path(rapid, market, "rapid path");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Vector x0 = rapid[0].at(tree, tree.root());
  std::vector<Path> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int k = 0; k < count; ++k) {
    Path y = random_path(market, constants, x0, rng);
    if (k % 2 == 1) {
      const double w = 0.5 * (1.0 - unit(rng));
      for (std::size_t t = 0; t < y.size(); ++t) {
        for (std::size_t s = 0; s < y[t].size(); ++s) {
          y[t][s] = w * y[t][s] + (1.0 - w) * rapid[t][s];
        }
      }
    }
    out.push_back(std::move(y));
  }
  return out;
}

std::string_view corruption_name(Corruption c) {
  switch (c) {
    case Corruption::kScaleTerminal: return "scale_terminal";
    case Corruption::kNegateNode: return "negate_node";
    case Corruption::kScaleNode: return "scale_node";
  }
  return "unknown";
}

int corrupt(DualPath& dual, const ScenarioTree& tree, Corruption c,
            std::uint64_t seed) {
  const int n_hor = tree.horizon();
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  auto node_at = [&](int depth) {
    const auto nodes = tree.nodes_at(depth);
    return nodes[static_cast<std::size_t>(
        pick(0, static_cast<int>(nodes.size()) - 1))];
  };
  switch (c) {
    case Corruption::kScaleTerminal:
      dual.p[static_cast<std::size_t>(n_hor) + 1] *= 2.0;
      return n_hor;
    case Corruption::kNegateNode: {
      const int t = pick(1, n_hor);
      dual.p[static_cast<std::size_t>(t)].at(tree, node_at(t)) *= -1.0;
      return t;
    }
    case Corruption::kScaleNode: {
      const int t = n_hor == 1 ? 2 : pick(2, n_hor + 1);
      dual.p[static_cast<std::size_t>(t)].at(tree, node_at(std::min(t, n_hor))) *= 1.5;
      return t - 1;
    }
  }
  return 0;
}

}  // namespace vng
