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

#include "vngale/scenario_tree.hpp"

#include <cmath>
#include <algorithm>
#include <deque>
#include <utility>

#include <fmt/format.h>

#include "vngale/error.hpp"

namespace vng {

namespace {
constexpr double kProbabilitySumTol = 1e-12;
}  // namespace

ScenarioTree ScenarioTree::build(const std::vector<RawNode>& raw,
                                 std::vector<int> dims) {
  if (raw.empty()) {
    throw Error(ErrorCode::kCycleOrForest, "node list is empty");
  }
  std::unordered_map<std::string, std::size_t> raw_index;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!raw_index.emplace(raw[i].id, i).second) {
      throw Error(ErrorCode::kCycleOrForest,
                  fmt::format("duplicate node id '{}'", raw[i].id));
    }
  }

  std::optional<std::size_t> root;
  std::vector<std::vector<std::size_t>> raw_children(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!raw[i].parent) {
      if (root) {
        throw Error(ErrorCode::kCycleOrForest,
                    fmt::format("nodes '{}' and '{}' both lack a parent",
                                raw[*root].id, raw[i].id));
      }
      root = i;
      continue;
    }
    auto it = raw_index.find(*raw[i].parent);
    if (it == raw_index.end()) {
      throw Error(ErrorCode::kCycleOrForest,
                  fmt::format("node '{}' has unknown parent '{}'", raw[i].id,
                              *raw[i].parent));
    }
    raw_children[it->second].push_back(i);
  }
  if (!root) {
    throw Error(ErrorCode::kCycleOrForest, "no root node");
  }

  ScenarioTree tree;
  std::vector<std::size_t> order;
  std::vector<NodeIndex> new_index(raw.size(), 0);
  std::vector<int> raw_depth(raw.size(), -1);
  std::deque<std::size_t> queue{*root};
  raw_depth[*root] = 0;
  while (!queue.empty()) {
    std::size_t i = queue.front();
    queue.pop_front();
    new_index[i] = order.size();
    order.push_back(i);
    for (std::size_t c : raw_children[i]) {
      raw_depth[c] = raw_depth[i] + 1;
      queue.push_back(c);
    }
  }
  if (order.size() != raw.size()) {
    // Unreached nodes hang off a cycle.
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw_depth[i] < 0) {
        throw Error(ErrorCode::kCycleOrForest,
                    fmt::format("node '{}' is not reachable from the root",
                                raw[i].id));
      }
    }
  }

  const std::size_t n = order.size();
  tree.ids_.resize(n);
  tree.parent_.assign(n, 0);
  tree.depth_.resize(n);
  tree.cond_prob_.resize(n);
  tree.prob_.resize(n);
  tree.children_.resize(n);
  tree.slot_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const RawNode& r = raw[order[k]];
    tree.ids_[k] = r.id;
    tree.depth_[k] = raw_depth[order[k]];
    if (k == 0) {
      tree.cond_prob_[k] = 1.0;
      tree.prob_[k] = 1.0;
    } else {
      NodeIndex p = new_index[raw_index.at(*r.parent)];
      tree.parent_[k] = p;
      tree.children_[p].push_back(k);
      if (!(r.cond_prob > 0.0) || r.cond_prob > 1.0 + kProbabilitySumTol) {
        throw Error(ErrorCode::kBadProbability,
                    fmt::format("node '{}' has conditional probability {}",
                                r.id, r.cond_prob));
      }
      tree.cond_prob_[k] = r.cond_prob;
      tree.prob_[k] = tree.prob_[p] * r.cond_prob;
    }
    tree.index_.emplace(r.id, k);
  }

  int horizon = tree.depth_.back();
  for (std::size_t k = 0; k < n; ++k) {
    if (tree.children_[k].empty() && tree.depth_[k] != horizon) {
      throw Error(ErrorCode::kRaggedDepth,
                  fmt::format("leaf '{}' at depth {} but horizon is {}",
                              tree.ids_[k], tree.depth_[k], horizon));
    }
    if (!tree.children_[k].empty()) {
      double sum = 0.0;
      for (NodeIndex c : tree.children_[k]) sum += tree.cond_prob_[c];
      if (std::abs(sum - 1.0) > kProbabilitySumTol) {
        throw Error(ErrorCode::kBadProbability,
                    fmt::format("children of '{}' have probabilities summing "
                                "to {}",
                                tree.ids_[k], sum));
      }
    }
  }
  if (horizon < 1) {
    throw Error(ErrorCode::kRaggedDepth, "tree must have horizon N >= 1");
  }
  tree.horizon_ = horizon;

  tree.by_depth_.resize(static_cast<std::size_t>(horizon) + 1);
  for (std::size_t k = 0; k < n; ++k) {
    auto& bucket = tree.by_depth_[static_cast<std::size_t>(tree.depth_[k])];
    tree.slot_[k] = bucket.size();
    bucket.push_back(k);
  }

  if (dims.size() == 1) {
    dims.assign(static_cast<std::size_t>(horizon) + 1, dims.front());
  }
  if (dims.size() != static_cast<std::size_t>(horizon) + 1) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("expected {} dimensions, got {}", horizon + 1,
                            dims.size()));
  }
  for (int d : dims) {
    if (d <= 0) {
      throw Error(ErrorCode::kDimensionMismatch, "dimensions must be positive");
    }
  }
  tree.dims_ = std::move(dims);
  return tree;
}

std::span<const NodeIndex> ScenarioTree::nodes_at(int t) const {
  if (t < 0 || t > horizon_) {
    throw Error(ErrorCode::kDepthMismatch,
                fmt::format("depth {} outside [0, {}]", t, horizon_));
  }
  return by_depth_[static_cast<std::size_t>(t)];
}

NodeIndex ScenarioTree::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw Error(ErrorCode::kUnknownNode, fmt::format("no node '{}'", id));
  }
  return it->second;
}

AdaptedVector::AdaptedVector(int depth, int dim, std::vector<Vector> values)
    : depth_(depth), dim_(dim), values_(std::move(values)) {
  for (const Vector& v : values_) {
    if (v.size() != dim_) {
      throw Error(ErrorCode::kDimensionMismatch,
                  fmt::format("adapted value of size {} in a field of "
                              "dimension {}",
                              v.size(), dim_));
    }
  }
}

AdaptedVector AdaptedVector::zeros(const ScenarioTree& tree, int depth,
                                   int dim) {
  const int stored = std::min(depth, tree.horizon());
  return AdaptedVector(depth, dim,
                       std::vector<Vector>(tree.count_at(stored),
                                           Vector::Zero(dim)));
}

AdaptedVector AdaptedVector::constant(const ScenarioTree& tree, int depth,
                                      const Vector& value) {
  const int stored = std::min(depth, tree.horizon());
  return AdaptedVector(depth, static_cast<int>(value.size()),
                       std::vector<Vector>(tree.count_at(stored), value));
}

const Vector& AdaptedVector::at(const ScenarioTree& tree, NodeIndex n) const {
  if (tree.depth(n) != std::min(depth_, tree.horizon())) {
    throw Error(ErrorCode::kDepthMismatch,
                fmt::format("node '{}' is at depth {}, field at depth {}",
                            tree.id(n), tree.depth(n), depth_));
  }
  return values_[tree.slot(n)];
}

Vector& AdaptedVector::at(const ScenarioTree& tree, NodeIndex n) {
  return const_cast<Vector&>(std::as_const(*this).at(tree, n));
}

AdaptedVector& AdaptedVector::operator*=(double c) {
  for (Vector& v : values_) v *= c;
  return *this;
}

double node_probability(const ScenarioTree& tree, NodeIndex n) {
  if (n >= tree.size()) {
    throw Error(ErrorCode::kUnknownNode, fmt::format("node index {}", n));
  }
  return tree.probability(n);
}

double expectation(const ScenarioTree& tree, const AdaptedVector& field) {
  if (field.dim() != 1 || field.size() != tree.count_at(field.depth())) {
    throw Error(ErrorCode::kDepthMismatch,
                "expectation expects a scalar field covering its depth");
  }
  double sum = 0.0;
  for (NodeIndex n : tree.nodes_at(field.depth())) {
    sum += tree.probability(n) * field.at(tree, n)(0);
  }
  return sum;
}

AdaptedVector conditional_expectation(const ScenarioTree& tree,
                                      const AdaptedVector& field) {
  const int t1 = field.depth();
  if (t1 < 1 || t1 > tree.horizon() + 1 ||
      field.size() != tree.count_at(std::min(t1, tree.horizon()))) {
    throw Error(ErrorCode::kDepthMismatch,
                fmt::format("cannot condition a depth-{} field", t1));
  }
  if (t1 == tree.horizon() + 1) {
    // Depth N+1 fields live on the leaves.
    return AdaptedVector(tree.horizon(), field.dim(), [&] {
      std::vector<Vector> v(field.size());
      for (std::size_t i = 0; i < field.size(); ++i) v[i] = field[i];
      return v;
    }());
  }
  AdaptedVector out = AdaptedVector::zeros(tree, t1 - 1, field.dim());
  for (NodeIndex n : tree.nodes_at(t1 - 1)) {
    Vector& acc = out.at(tree, n);
    for (NodeIndex c : tree.children(n)) {
      acc += tree.cond_prob(c) * field.at(tree, c);
    }
  }
  return out;
}

}  // namespace vng
