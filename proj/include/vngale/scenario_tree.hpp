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

#ifndef VNGALE_SCENARIO_TREE_HPP_
#define VNGALE_SCENARIO_TREE_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace vng {

using Vector = Eigen::VectorXd;
using NodeIndex = std::size_t;

// One entry of the user-facing node list. `cond_prob` is the probability of
// the node given its parent; the root's value is ignored.
struct RawNode {
  std::string id;
  std::optional<std::string> parent;
  double cond_prob = 1.0;
};

// Finite filtration encoded as a rooted tree. The depth-t nodes are the atoms
// of F_t. Nodes are stored breadth-first, so every depth occupies a
// contiguous index range and parents precede their children.
class ScenarioTree {
 public:
  // `dims[t]` is the state dimension at time t; a single entry is broadcast
  // to every time.
  static ScenarioTree build(const std::vector<RawNode>& raw,
                            std::vector<int> dims);

  int horizon() const { return horizon_; }
  std::size_t size() const { return depth_.size(); }
  int dim(int t) const { return dims_.at(static_cast<std::size_t>(t)); }

  NodeIndex root() const { return 0; }
  bool is_root(NodeIndex n) const { return n == 0; }
  bool is_leaf(NodeIndex n) const { return depth_[n] == horizon_; }
  NodeIndex parent(NodeIndex n) const { return parent_[n]; }
  int depth(NodeIndex n) const { return depth_[n]; }
  double cond_prob(NodeIndex n) const { return cond_prob_[n]; }
  // Unconditional probability of the atom: product of conditional
  // probabilities along the root path.
  double probability(NodeIndex n) const { return prob_[n]; }
  std::span<const NodeIndex> children(NodeIndex n) const {
    return children_[n];
  }

  // Nodes at depth t, in storage order.
  std::span<const NodeIndex> nodes_at(int t) const;
  std::size_t count_at(int t) const { return nodes_at(t).size(); }
  // Position of `n` within nodes_at(depth(n)).
  std::size_t slot(NodeIndex n) const { return slot_[n]; }

  const std::string& id(NodeIndex n) const { return ids_[n]; }
  NodeIndex find(const std::string& id) const;

 private:
  ScenarioTree() = default;

  int horizon_ = 0;
  std::vector<int> dims_;
  std::vector<std::string> ids_;
  std::vector<NodeIndex> parent_;
  std::vector<int> depth_;
  std::vector<double> cond_prob_;
  std::vector<double> prob_;
  std::vector<std::vector<NodeIndex>> children_;
  std::vector<std::vector<NodeIndex>> by_depth_;
  std::vector<std::size_t> slot_;
  std::unordered_map<std::string, NodeIndex> index_;
};

// An F_t-measurable random vector: one value per depth-t node. Depth N+1 is
// accepted and stored on the leaves, since F_{N+1} := F_N.
class AdaptedVector {
 public:
  AdaptedVector() = default;
  AdaptedVector(int depth, int dim, std::vector<Vector> values);

  static AdaptedVector zeros(const ScenarioTree& tree, int depth, int dim);
  static AdaptedVector constant(const ScenarioTree& tree, int depth,
                                const Vector& value);

  int depth() const { return depth_; }
  int dim() const { return dim_; }
  std::size_t size() const { return values_.size(); }

  // Indexed by slot within the depth.
  const Vector& operator[](std::size_t slot) const { return values_[slot]; }
  Vector& operator[](std::size_t slot) { return values_[slot]; }

  const Vector& at(const ScenarioTree& tree, NodeIndex n) const;
  Vector& at(const ScenarioTree& tree, NodeIndex n);

  AdaptedVector& operator*=(double c);

 private:
  int depth_ = 0;
  int dim_ = 0;
  std::vector<Vector> values_;
};

double node_probability(const ScenarioTree& tree, NodeIndex n);

// E[X] for a scalar field X at depth t.
double expectation(const ScenarioTree& tree, const AdaptedVector& field);

// E_t[X] for X at depth t+1, returned at depth t. A depth N+1 input comes
// back unchanged at depth N (F_{N+1} := F_N).
AdaptedVector conditional_expectation(const ScenarioTree& tree,
                                      const AdaptedVector& field);

}  // namespace vng

#endif  // VNGALE_SCENARIO_TREE_HPP_
