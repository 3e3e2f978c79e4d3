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

#ifndef VNGALE_TESTS_TEST_SUPPORT_HPP_
#define VNGALE_TESTS_TEST_SUPPORT_HPP_

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "vngale/market.hpp"
#include "vngale/scenario_tree.hpp"

namespace vng::testing {

// Uniform tree: every depth-t node has branching[t] equiprobable children.
inline std::vector<RawNode> uniform_nodes(const std::vector<int>& branching) {
  std::vector<RawNode> raw{{"r", std::nullopt, 1.0}};
  std::vector<std::string> level{"r"};
  for (int b : branching) {
    std::vector<std::string> next;
    for (const std::string& p : level) {
      for (int k = 0; k < b; ++k) {
        std::string id = p + "." + std::to_string(k);
        raw.push_back({id, p, 1.0 / b});
        next.push_back(id);
      }
    }
    level = std::move(next);
  }
  return raw;
}

// Market on a uniform tree with constant costs and margin; `returns` maps
// (node, tree) to the gross return vector.
inline MarketData uniform_market(
    const std::vector<int>& branching, int m, double cost, double mu,
    const std::function<Vector(NodeIndex, const ScenarioTree&)>& returns) {
  ScenarioTree tree = ScenarioTree::build(uniform_nodes(branching), {m});
  std::vector<NodeMarket> nodes(tree.size());
  for (NodeIndex n = 0; n < tree.size(); ++n) {
    nodes[n].returns = tree.is_root(n) ? Vector::Ones(m) : returns(n, tree);
    nodes[n].cost_sell = Vector::Constant(m, cost);
    nodes[n].cost_buy = Vector::Constant(m, cost);
  }
  std::vector<double> margins(branching.size() + 1, mu);
  return MarketData::build(std::move(tree), m, margins, std::move(nodes));
}

// Returns drawn from [lo, hi] and cost rates from [0, cost], per node.
inline MarketData random_market(const std::vector<int>& branching, int m,
                                double cost, double mu, double lo, double hi,
                                std::uint64_t seed) {
  ScenarioTree tree = ScenarioTree::build(uniform_nodes(branching), {m});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<NodeMarket> nodes(tree.size());
  for (NodeIndex n = 0; n < tree.size(); ++n) {
    nodes[n].returns = Vector::Ones(m);
    nodes[n].cost_sell = Vector(m);
    nodes[n].cost_buy = Vector(m);
    for (int i = 0; i < m; ++i) {
      if (!tree.is_root(n)) nodes[n].returns[i] = lo + (hi - lo) * u(rng);
      nodes[n].cost_sell[i] = cost * u(rng);
      nodes[n].cost_buy[i] = cost * u(rng);
    }
  }
  std::vector<double> margins(branching.size() + 1, mu);
  return MarketData::build(std::move(tree), m, margins, std::move(nodes));
}

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace vng::testing

#endif  // VNGALE_TESTS_TEST_SUPPORT_HPP_
