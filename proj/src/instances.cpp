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

#include "vngale/instances.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace vng {
namespace {

MarketData frictionless(std::vector<RawNode> raw, int m,
                        std::vector<Vector> returns,
                        std::vector<double> margins) {
  ScenarioTree tree = ScenarioTree::build(raw, {m});
  std::vector<NodeMarket> nodes(tree.size());
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const NodeIndex n = tree.find(raw[k].id);
    nodes[n].returns = returns[k];
    nodes[n].cost_sell = Vector::Zero(m);
    nodes[n].cost_buy = Vector::Zero(m);
  }
  return MarketData::build(std::move(tree), m, std::move(margins),
                           std::move(nodes));
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

std::vector<RawNode> branching_nodes(
    const std::vector<int>& branching,
    const std::vector<std::vector<double>>& probs) {
  std::vector<RawNode> raw{{"r", std::nullopt, 1.0}};
  std::vector<std::string> level{"r"};
  for (std::size_t t = 0; t < branching.size(); ++t) {
    const int b = branching[t];
    std::vector<std::string> next;
    for (const std::string& p : level) {
      for (int k = 0; k < b; ++k) {
        const double prob = t < probs.size() && !probs[t].empty()
                                ? probs[t][static_cast<std::size_t>(k)]
                                : 1.0 / b;
        std::string id = p + "." + std::to_string(k);
        raw.push_back({id, p, prob});
        next.push_back(id);
      }
    }
    level = std::move(next);
  }
  return raw;
}

PathProblem kelly_problem() {
  std::vector<RawNode> raw{{"r", std::nullopt, 1.0},
                           {"a", "r", 1.0},
                           {"u", "a", 0.5},
                           {"d", "a", 0.5}};
  MarketData md = frictionless(
      raw, 2, {vec2(1, 1), vec2(1, 1), vec2(1, 1.4), vec2(1, 0.7)},
      {3.0, 3.0, 3.0});
  const MarketConstants c = market_constants(md);
  TerminalObjective obj = TerminalObjective::liquidation(md, c);
  return PathProblem{std::move(md), std::move(obj), vec2(0.5, 0.5)};
}

PathProblem single_asset_problem() {
  std::vector<RawNode> raw{
      {"r", std::nullopt, 1.0}, {"u", "r", 0.5}, {"d", "r", 0.5}};
  MarketData md = frictionless(raw, 1,
                               {Vector::Ones(1), Vector::Constant(1, 1.2),
                                Vector::Constant(1, 0.9)},
                               {2.0, 2.0});
  const MarketConstants c = market_constants(md);
  TerminalObjective obj = TerminalObjective::liquidation(md, c);
  return PathProblem{std::move(md), std::move(obj), Vector::Ones(1)};
}

PathProblem chain_problem(int horizon, double r_best, double r_worst,
                          double mu) {
  std::vector<RawNode> raw =
      branching_nodes(std::vector<int>(static_cast<std::size_t>(horizon), 1));
  std::vector<Vector> returns(raw.size(), vec2(r_best, r_worst));
  returns[0] = vec2(1, 1);
  MarketData md = frictionless(
      raw, 2, returns,
      std::vector<double>(static_cast<std::size_t>(horizon) + 1, mu));
  const MarketConstants c = market_constants(md);
  TerminalObjective obj = TerminalObjective::liquidation(md, c);
  return PathProblem{std::move(md), std::move(obj), vec2(1, 1)};
}

PathProblem random_problem(std::uint64_t seed,
                           const RandomInstanceOptions& options) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit;
  auto pick = [&](int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  const int horizon = pick(1, options.max_horizon);
  const int m = pick(1, options.max_assets);
  std::vector<int> branching;
  std::vector<std::vector<double>> probs;
  std::size_t nodes = 1;
  std::size_t level = 1;
  for (int t = 0; t < horizon; ++t) {
    int b = pick(1, options.max_branching);
    while (b > 1 && nodes + level * static_cast<std::size_t>(b) >
                        static_cast<std::size_t>(options.max_nodes)) {
      --b;
    }
    level *= static_cast<std::size_t>(b);
    nodes += level;
    branching.push_back(b);
    std::vector<double> w(static_cast<std::size_t>(b));
    double total = 0.0;
    for (double& x : w) total += (x = 0.2 + unit(rng));
    for (double& x : w) x /= total;
    probs.push_back(w);
  }
  const std::vector<RawNode> raw = branching_nodes(branching, probs);
  ScenarioTree tree = ScenarioTree::build(raw, {m});

  std::normal_distribution<double> normal;
  std::vector<NodeMarket> recs(tree.size());
  for (NodeIndex n = 0; n < tree.size(); ++n) {
    recs[n].returns = Vector::Ones(m);
    recs[n].cost_sell = Vector(m);
    recs[n].cost_buy = Vector(m);
    for (int i = 0; i < m; ++i) {
      if (!tree.is_root(n)) {
        const double drift = 0.01 * i;
        const double vol = 0.04 + 0.06 * i;
        recs[n].returns[i] =
            std::exp(drift + vol * std::clamp(normal(rng), -2.5, 2.5));
      }
      recs[n].cost_sell[i] = options.max_cost * unit(rng);
      recs[n].cost_buy[i] = options.max_cost * unit(rng);
    }
  }
  // Margins from the realized bounds.
  std::vector<double> margins(static_cast<std::size_t>(horizon) + 1, 2.0);
  MarketData probe = MarketData::build(tree, m, margins, recs);
  const std::vector<double> nu = compute_nu(probe);
  for (std::size_t t = 0; t < margins.size(); ++t) {
    margins[t] = nu[t] + options.margin_slack + unit(rng);
  }
  MarketData md = MarketData::build(std::move(tree), m, margins, std::move(recs));
  const MarketConstants c = market_constants(md);

  Vector x0(m);
  for (int i = 0; i < m; ++i) x0[i] = 0.5 + unit(rng);

  const Vector ones = Vector::Ones(m);
  switch (seed % 4) {
    case 0: {
      TerminalObjective obj = TerminalObjective::liquidation(md, c);
      return PathProblem{std::move(md), std::move(obj), x0};
    }
    case 1: {
      TerminalObjective obj = TerminalObjective::linear(md, {ones});
      return PathProblem{std::move(md), std::move(obj), x0};
    }
    default: {
      const PenaltyNorm norm = seed % 4 == 2 ? PenaltyNorm::kL1 : PenaltyNorm::kL2;
      TerminalObjective probe_obj =
          TerminalObjective::norm_penalized(md, {ones}, {0.0}, norm, 0.5);
      std::vector<double> theta;
      for (std::size_t k = 0; k < probe_obj.leaves(); ++k) {
        theta.push_back(0.5 * probe_obj.theta_limit(k));
      }
      TerminalObjective obj =
          TerminalObjective::norm_penalized(md, {ones}, theta, norm, 0.5);
      return PathProblem{std::move(md), std::move(obj), x0};
    }
  }
}

}  // namespace vng
