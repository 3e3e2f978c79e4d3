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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vngale/error.hpp"

namespace vng {
namespace {

using testing::vec;

MarketData two_asset(double cost, double mu = 2.0) {
  return testing::uniform_market({2}, 2, cost, mu,
                                 [](NodeIndex n, const ScenarioTree& tree) {
                                   return tree.slot(n) ? vec({1.0, 1.3})
                                                       : vec({1.0, 0.8});
                                 });
}

TEST(Objectives, Examples) {
  MarketData md = two_asset(0.0);
  const NodeIndex leaf = md.tree().nodes_at(1)[0];
  auto lin = TerminalObjective::linear(md, {vec({1, 1})});
  EXPECT_DOUBLE_EQ(evaluate(md, lin, leaf, vec({2, 3})), 5.0);
  auto liq = TerminalObjective::liquidation(md, market_constants(md));
  EXPECT_DOUBLE_EQ(evaluate(md, liq, leaf, vec({2, -1})), 1.0);
  auto pen = TerminalObjective::norm_penalized(md, {vec({1, 1})}, {0.0},
                                               PenaltyNorm::kL1, 0.5);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 50; ++k) {
    const Vector a = sample_X(md, leaf, rng);
    EXPECT_EQ(evaluate(md, pen, leaf, a), evaluate(md, lin, leaf, a));
  }
  EXPECT_THROW(evaluate(md, lin, leaf, vec({1, -3})), Error);
}

TEST(Objectives, ConstructionChecks) {
  MarketData md = two_asset(0.01);
  EXPECT_THROW(TerminalObjective::linear(md, {vec({1, -1})}), Error);
  EXPECT_THROW(TerminalObjective::linear(md, {vec({1, 1}), vec({1, 1}),
                                              vec({1, 1})}),
               Error);
  auto ok = TerminalObjective::norm_penalized(md, {vec({1, 1})}, {0.0},
                                              PenaltyNorm::kL2, 0.5);
  const double limit = ok.theta_limit(0);
  EXPECT_GT(limit, 0.0);
  EXPECT_NO_THROW(TerminalObjective::norm_penalized(
      md, {vec({1, 1})}, {limit}, PenaltyNorm::kL2, 0.5));
  try {
    TerminalObjective::norm_penalized(md, {vec({1, 1})}, {1.01 * limit},
                                      PenaltyNorm::kL2, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidObjective);
  }
  EXPECT_THROW(TerminalObjective::norm_penalized(md, {vec({1, 1})}, {0.0},
                                                 PenaltyNorm::kL1, 0.0),
               Error);
}

TEST(Objectives, DualInteriorMarginMatchesLp) {
  MarketData md = testing::random_market({2}, 3, 0.05, 1.8, 0.9, 1.1, 4);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (NodeIndex l : md.tree().nodes_at(1)) {
    for (int k = 0; k < 20; ++k) {
      Vector q(3);
      for (int i = 0; i < 3; ++i) q[i] = u(rng);
      // The LP over |a| <= 1 gives min(0, min over the sphere).
      const double vertex = dual_interior_margin(md, q, l);
      const double lp = -dual_membership_violation(md, q, l).violation;
      EXPECT_NEAR(std::min(vertex, 0.0), lp, 1e-12);
      std::mt19937_64 r2(k);
      for (int s = 0; s < 200; ++s) {
        Vector a = sample_X(md, l, r2, s % 2 == 0);
        if (a.lpNorm<1>() == 0) continue;
        EXPECT_GE(q.dot(a) / a.lpNorm<1>(), vertex - 1e-12);
      }
    }
  }
}

TEST(Objectives, GradientEulerAndFiniteDifferences) {
  MarketData md = testing::random_market({2}, 3, 0.04, 1.9, 0.9, 1.1, 8);
  const MarketConstants c = market_constants(md);
  std::vector<TerminalObjective> objs{
      TerminalObjective::linear(md, {vec({1.0, 1.1, 0.9})}),
      TerminalObjective::liquidation(md, c)};
  auto probe = TerminalObjective::norm_penalized(md, {vec({1, 1, 1})}, {0.0},
                                                 PenaltyNorm::kL1, 0.5);
  objs.push_back(TerminalObjective::norm_penalized(
      md, {vec({1, 1, 1})}, {0.5 * probe.theta_limit(0)}, PenaltyNorm::kL1,
      0.5));
  objs.push_back(TerminalObjective::norm_penalized(
      md, {vec({1, 1, 1})}, {0.5 * probe.theta_limit(0) / std::sqrt(3.0)},
      PenaltyNorm::kL2, 0.5));
  std::mt19937_64 rng(2);
  const NodeIndex leaf = md.tree().nodes_at(1)[1];
  for (const auto& obj : objs) {
    int smooth = 0;
    while (smooth < 100) {
      const Vector a = sample_X(md, leaf, rng);
      if (a.cwiseAbs().minCoeff() < 1e-3) continue;
      if (margin_residual(md, a, leaf) < 1e-3) continue;
      ++smooth;
      const double v = evaluate(md, obj, leaf, a);
      const Vector g = gradient(md, obj, leaf, a);
      EXPECT_NEAR(g.dot(a), v, 1e-9 * std::max(1.0, std::abs(v)));
      const double h = 1e-6;
      for (int i = 0; i < 3; ++i) {
        Vector ap = a, am = a;
        ap[i] += h;
        am[i] -= h;
        const double fd =
            (obj.value(md.tree().slot(leaf), ap) -
             obj.value(md.tree().slot(leaf), am)) / (2 * h);
        EXPECT_LT(std::abs(fd - g[i]), 1e-5 * std::max(1.0, std::abs(g[i])));
      }
    }
  }
  // Liquidation gradient by sign.
  const Vector a = vec({2.0, -0.1, 1.0});
  const Vector g = gradient(md, objs[1], leaf, a);
  EXPECT_EQ(g[0], 1.0 - md.cost_sell(leaf)[0]);
  EXPECT_EQ(g[1], 1.0 + md.cost_buy(leaf)[1]);
  const Vector kink = vec({2.0, 0.0, 1.0});
  EXPECT_EQ(gradient(md, objs[1], leaf, kink)[1], 1.0 - md.cost_sell(leaf)[1]);
  EXPECT_THROW(gradient(md, objs[0], leaf, Vector::Zero(3)), Error);
}

TEST(Objectives, LogObjective) {
  MarketData md = two_asset(0.0);
  const ScenarioTree& tree = md.tree();
  auto lin = TerminalObjective::linear(md, {vec({1, 1})});
  AdaptedVector x = AdaptedVector::constant(tree, 1, vec({0.5, 0.5}));
  EXPECT_DOUBLE_EQ(log_objective(tree, lin, x), 0.0);
  AdaptedVector y = AdaptedVector::zeros(tree, 1, 2);
  y[0] = vec({0.3, 1.2});
  y[1] = vec({2.0, 0.1});
  AdaptedVector y2 = y;
  y2 *= 2.0;
  EXPECT_NEAR(log_objective(tree, lin, y2),
              log_objective(tree, lin, y) + std::log(2.0), 1e-12);
  y[1] = vec({0.0, 0.0});
  EXPECT_EQ(log_objective(tree, lin, y),
            -std::numeric_limits<double>::infinity());
}

TEST(Objectives, AxiomSuite) {
  MarketData md = testing::random_market({2, 2}, 3, 0.05, 1.9, 0.9, 1.1, 3);
  const MarketConstants c = market_constants(md);
  auto probe = TerminalObjective::norm_penalized(md, {vec({1, 1, 1})}, {0.0},
                                                 PenaltyNorm::kL2, 0.3);
  double limit = probe.theta_limit(0);
  for (std::size_t k = 0; k < probe.leaves(); ++k) {
    limit = std::min(limit, probe.theta_limit(k));
  }
  std::vector<TerminalObjective> objs{
      TerminalObjective::linear(md, {vec({1, 1, 1})}),
      TerminalObjective::liquidation(md, c),
      TerminalObjective::norm_penalized(md, {vec({1, 1, 1})},
                                        {limit}, PenaltyNorm::kL2, 0.3)};
  for (const auto& obj : objs) {
    PsiClassReport r = check_psi_class(obj, md, 2000, 17);
    EXPECT_TRUE(r.passed()) << objective_kind_name(obj.kind());
    EXPECT_EQ(r.superadditivity.checked, 2000);
  }
  auto bad = TerminalObjective::norm_penalized_unchecked(
      md, {vec({1, 1, 1})}, {3.0 * limit}, PenaltyNorm::kL2,
      0.3);
  PsiClassReport r = check_psi_class(bad, md, 2000, 17);
  EXPECT_FALSE(r.passed());
  EXPECT_GT(r.lower_bound.violations, 0);
}

TEST(Objectives, Names) {
  for (auto k : {ObjectiveKind::kLinear, ObjectiveKind::kLiquidation,
                 ObjectiveKind::kNormPenalized}) {
    EXPECT_EQ(parse_objective_kind(objective_kind_name(k)), k);
  }
  EXPECT_EQ(parse_penalty_norm("l2"), PenaltyNorm::kL2);
  EXPECT_THROW(parse_objective_kind("power"), Error);
}

}  // namespace
}  // namespace vng
