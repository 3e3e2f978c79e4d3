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

#include "vngale/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unistd.h>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "vngale/error.hpp"

namespace vng::io {
namespace {

[[noreturn]] void fail(const std::string& node, std::string_view field,
                       std::string_view what) {
  if (node.empty()) {
    throw Error(ErrorCode::kParseError,
                fmt::format("field '{}': {}", field, what));
  }
  throw Error(ErrorCode::kParseError,
              fmt::format("node '{}' field '{}': {}", node, field, what));
}

Json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double to_double(const Json& j, const std::string& node,
                 std::string_view field) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  fail(node, field, "expected a number");
}

const Json& member(const Json& obj, const char* key, const std::string& node,
                   std::string_view where = {}) {
  if (!obj.is_object()) fail(node, where.empty() ? key : where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(node, key, "missing");
  return *it;
}

double number_at(const Json& obj, const char* key, const std::string& node) {
  return to_double(member(obj, key, node), node, key);
}

Vector to_vector(const Json& j, int dim, const std::string& node,
                 std::string_view field) {
  if (!j.is_array()) fail(node, field, "expected an array");
  if (dim >= 0 && static_cast<int>(j.size()) != dim) {
    fail(node, field, fmt::format("expected {} entries, got {}", dim, j.size()));
  }
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = to_double(j[i], node, field);
  }
  return v;
}

// A number broadcast to every coordinate, or an array.
Vector to_costs(const Json& obj, const char* key, int dim,
                const std::string& node) {
  auto it = obj.find(key);
  if (it == obj.end()) return Vector::Zero(dim);
  if (it->is_number()) return Vector::Constant(dim, it->get<double>());
  return to_vector(*it, dim, node, key);
}

Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v[i]));
  return out;
}

std::string string_at(const Json& obj, const char* key,
                      const std::string& node) {
  const Json& j = member(obj, key, node);
  if (!j.is_string()) fail(node, key, "expected a string");
  return j.get<std::string>();
}

int int_at(const Json& obj, const char* key, const std::string& node) {
  const Json& j = member(obj, key, node);
  if (!j.is_number_integer()) fail(node, key, "expected an integer");
  return j.get<int>();
}

void check_schema(const Json& doc, std::string_view schema) {
  if (!doc.is_object()) fail("", "schema", "document is not an object");
  const std::string got = string_at(doc, "schema", "");
  if (got != schema) {
    fail("", "schema", fmt::format("expected '{}', got '{}'", schema, got));
  }
}

// Leaf id -> value, or one value for every leaf.
template <typename T, typename Read>
std::vector<T> per_leaf(const Json& j, const ScenarioTree& tree,
                        std::string_view field, Read read) {
  const auto leaves = tree.nodes_at(tree.horizon());
  if (!j.is_object()) return {read(j, std::string())};
  std::vector<T> out(leaves.size());
  std::vector<bool> seen(leaves.size(), false);
  for (auto it = j.begin(); it != j.end(); ++it) {
    NodeIndex n;
    try {
      n = tree.find(it.key());
    } catch (const Error&) {
      fail(it.key(), field, "unknown node");
    }
    if (!tree.is_leaf(n)) fail(it.key(), field, "not a leaf");
    out[tree.slot(n)] = read(it.value(), it.key());
    seen[tree.slot(n)] = true;
  }
  for (std::size_t s = 0; s < leaves.size(); ++s) {
    if (!seen[s]) fail(tree.id(leaves[s]), field, "missing");
  }
  return out;
}

Json path_json(const Path& path, const ScenarioTree& tree) {
  Json nodes = Json::array();
  for (NodeIndex n = 0; n < tree.size(); ++n) {
    nodes.push_back({{"id", tree.id(n)},
                     {"x", vector_json(path[static_cast<std::size_t>(
                                            tree.depth(n))].at(tree, n))}});
  }
  return nodes;
}

Path path_from(const Json& j, const MarketData& market, std::string_view field) {
  const ScenarioTree& tree = market.tree();
  if (!j.is_array() || j.size() != tree.size()) {
    fail("", field, fmt::format("expected {} nodes", tree.size()));
  }
  Path path;
  for (int t = 0; t <= tree.horizon(); ++t) {
    path.push_back(AdaptedVector::zeros(tree, t, market.assets()));
  }
  std::vector<bool> seen(tree.size(), false);
  for (const Json& e : j) {
    const std::string id = string_at(e, "id", "");
    NodeIndex n;
    try {
      n = tree.find(id);
    } catch (const Error&) {
      fail(id, field, "unknown node");
    }
    if (seen[n]) fail(id, field, "duplicate node");
    seen[n] = true;
    path[static_cast<std::size_t>(tree.depth(n))].at(tree, n) =
        to_vector(member(e, "x", id), market.assets(), id, "x");
  }
  return path;
}

Json kkt_json(const KktReport& r) {
  return {{"primal", number(r.primal)},
          {"lift", number(r.lift)},
          {"stationarity", number(r.stationarity)},
          {"complementarity", number(r.complementarity)},
          {"primal_node", r.primal_node},
          {"stationarity_node", r.stationarity_node},
          {"complementarity_node", r.complementarity_node}};
}

KktReport kkt_from(const Json& j) {
  KktReport r;
  r.primal = number_at(j, "primal", "");
  r.lift = number_at(j, "lift", "");
  r.stationarity = number_at(j, "stationarity", "");
  r.complementarity = number_at(j, "complementarity", "");
  r.primal_node = string_at(j, "primal_node", "");
  r.stationarity_node = string_at(j, "stationarity_node", "");
  r.complementarity_node = string_at(j, "complementarity_node", "");
  return r;
}

bool bool_at(const Json& obj, const char* key, const std::string& node) {
  const Json& j = member(obj, key, node);
  if (!j.is_boolean()) fail(node, key, "expected a boolean");
  return j.get<bool>();
}

}  // namespace

std::string_view tool_version() { return VNGALE_VERSION; }

TerminalObjective parse_objective(const Json& obj, const MarketData& market) {
  const ScenarioTree& tree = market.tree();
  const int m = market.assets();
  if (!obj.is_object()) fail("", "objective", "expected an object");
  ObjectiveKind kind;
  try {
    kind = parse_objective_kind(string_at(obj, "kind", ""));
  } catch (const Error& e) {
    fail("", "objective.kind", e.what());
  }
  auto read_q = [&]() {
    return per_leaf<Vector>(member(obj, "q", ""), tree, "q",
                            [&](const Json& j, const std::string& id) {
                              return to_vector(j, m, id, "q");
                            });
  };
  switch (kind) {
    case ObjectiveKind::kLiquidation:
      return TerminalObjective::liquidation(market, market_constants(market));
    case ObjectiveKind::kLinear:
      return TerminalObjective::linear(market, read_q());
    case ObjectiveKind::kNormPenalized: {
      std::vector<Vector> q = read_q();
      std::vector<double> theta = per_leaf<double>(
          member(obj, "theta", ""), tree, "theta",
          [](const Json& j, const std::string& id) {
            return to_double(j, id, "theta");
          });
      PenaltyNorm norm;
      try {
        norm = parse_penalty_norm(string_at(obj, "norm", ""));
      } catch (const Error& e) {
        fail("", "objective.norm", e.what());
      }
      const double delta = number_at(obj, "delta", "");
      return TerminalObjective::norm_penalized(market, std::move(q),
                                               std::move(theta), norm, delta);
    }
  }
  fail("", "objective.kind", "unsupported");
}

SolverOptions options_from_json(const Json& doc, SolverOptions base) {
  if (!doc.is_object()) fail("", "options", "expected an object");
  if (doc.contains("tol")) base.tol = number_at(doc, "tol", "");
  if (doc.contains("max_iter")) base.max_iter = int_at(doc, "max_iter", "");
  if (doc.contains("seed")) {
    const Json& s = doc["seed"];
    if (!s.is_number_unsigned()) fail("", "seed", "expected a nonnegative integer");
    base.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("t0")) base.t0 = number_at(doc, "t0", "");
  if (doc.contains("growth")) base.growth = number_at(doc, "growth", "");
  return base;
}

Json options_to_json(const SolverOptions& o) {
  return {{"tol", number(o.tol)},
          {"max_iter", o.max_iter},
          {"seed", o.seed},
          {"t0", number(o.t0)},
          {"growth", number(o.growth)}};
}

ProblemFile parse_problem(const Json& doc) {
  check_schema(doc, kProblemSchema);

  const Json& tree_doc = member(doc, "tree", "");
  const Json& node_list = member(tree_doc, "nodes", "", "tree");
  if (!node_list.is_array()) fail("", "tree.nodes", "expected an array");
  std::vector<RawNode> raw;
  for (const Json& e : node_list) {
    RawNode r;
    r.id = string_at(e, "id", "");
    auto p = e.find("parent");
    if (p != e.end() && !p->is_null()) {
      if (!p->is_string()) fail(r.id, "parent", "expected a string or null");
      r.parent = p->get<std::string>();
    }
    if (e.contains("prob")) r.cond_prob = number_at(e, "prob", r.id);
    else if (r.parent) fail(r.id, "prob", "missing");
    raw.push_back(std::move(r));
  }

  const Json& market_doc = member(doc, "market", "");
  const int m = int_at(market_doc, "assets", "");
  if (m < 1) fail("", "assets", "expected a positive integer");
  ScenarioTree tree = ScenarioTree::build(raw, {m});
  const int horizon = tree.horizon();

  std::vector<double> margins;
  const Json& mj = member(market_doc, "margins", "");
  if (mj.is_array()) {
    if (mj.size() != static_cast<std::size_t>(horizon) + 1) {
      fail("", "margins", fmt::format("expected {} entries", horizon + 1));
    }
    for (const Json& v : mj) margins.push_back(to_double(v, "", "margins"));
  } else {
    margins.assign(static_cast<std::size_t>(horizon) + 1,
                   to_double(mj, "", "margins"));
  }

  const Json& entries = member(market_doc, "nodes", "", "market");
  if (!entries.is_array()) fail("", "market.nodes", "expected an array");
  std::vector<NodeMarket> nodes(tree.size());
  std::vector<Vector> prices(tree.size());
  std::vector<bool> seen(tree.size(), false);
  bool any_prices = false, any_returns = false;
  for (const Json& e : entries) {
    const std::string id = string_at(e, "id", "");
    NodeIndex n;
    try {
      n = tree.find(id);
    } catch (const Error&) {
      fail(id, "market", "unknown node");
    }
    if (seen[n]) fail(id, "market", "duplicate entry");
    seen[n] = true;
    NodeMarket& nm = nodes[n];
    nm.returns = Vector::Ones(m);
    if (e.contains("prices")) {
      any_prices = true;
      prices[n] = to_vector(e["prices"], m, id, "prices");
    }
    if (e.contains("returns")) {
      any_returns = true;
      nm.returns = to_vector(e["returns"], m, id, "returns");
    } else if (!e.contains("prices") && !tree.is_root(n)) {
      fail(id, "returns", "missing");
    }
    nm.cost_sell = to_costs(e, "cost_sell", m, id);
    nm.cost_buy = to_costs(e, "cost_buy", m, id);
  }
  for (NodeIndex n = 0; n < tree.size(); ++n) {
    if (!seen[n]) fail(tree.id(n), "market", "missing entry");
  }
  if (any_prices) {
    if (any_returns) fail("", "market.nodes", "mixes prices and returns");
    for (NodeIndex n = 0; n < tree.size(); ++n) {
      if (prices[n].size() == 0) fail(tree.id(n), "prices", "missing");
    }
    std::vector<Vector> r = returns_from_prices(tree, prices);
    for (NodeIndex n = 0; n < tree.size(); ++n) nodes[n].returns = r[n];
  }

  MarketData market = MarketData::build(std::move(tree), m, std::move(margins),
                                        std::move(nodes));
  Vector x0 = to_vector(member(doc, "x0", ""), m, "", "x0");
  const Json& objective = member(doc, "objective", "");
  ProblemFile file{PathProblem{market, parse_objective(objective, market), x0},
                   SolverOptions{}};
  if (doc.contains("options")) file.options = options_from_json(doc["options"]);
  return file;
}

ProblemFile read_problem(const std::filesystem::path& file) {
  return parse_problem(read_json(file));
}

Json objective_to_json(const TerminalObjective& objective,
                       const ScenarioTree& tree) {
  Json out = {{"kind", std::string(objective_kind_name(objective.kind()))}};
  if (objective.kind() == ObjectiveKind::kLiquidation) return out;
  Json q = Json::object();
  Json theta = Json::object();
  for (NodeIndex n : tree.nodes_at(tree.horizon())) {
    q[tree.id(n)] = vector_json(objective.q(tree.slot(n)));
    theta[tree.id(n)] = number(objective.theta(tree.slot(n)));
  }
  out["q"] = std::move(q);
  if (objective.kind() == ObjectiveKind::kNormPenalized) {
    out["theta"] = std::move(theta);
    out["norm"] = std::string(penalty_norm_name(objective.norm()));
    out["delta"] = number(objective.delta());
  }
  return out;
}

Json problem_to_json(const ProblemFile& file) {
  const MarketData& market = file.problem.market;
  const ScenarioTree& tree = market.tree();
  Json tree_nodes = Json::array();
  Json market_nodes = Json::array();
  for (NodeIndex n = 0; n < tree.size(); ++n) {
    Json node = {{"id", tree.id(n)}};
    Json entry = {{"id", tree.id(n)}};
    if (!tree.is_root(n)) {
      node["parent"] = tree.id(tree.parent(n));
      node["prob"] = number(tree.cond_prob(n));
      entry["returns"] = vector_json(market.returns(n));
    }
    entry["cost_sell"] = vector_json(market.cost_sell(n));
    entry["cost_buy"] = vector_json(market.cost_buy(n));
    tree_nodes.push_back(std::move(node));
    market_nodes.push_back(std::move(entry));
  }
  Json margins = Json::array();
  for (double mu : market.margins()) margins.push_back(number(mu));
  return {{"schema", std::string(kProblemSchema)},
          {"tree", {{"nodes", std::move(tree_nodes)}}},
          {"market",
           {{"assets", market.assets()},
            {"margins", std::move(margins)},
            {"nodes", std::move(market_nodes)}}},
          {"objective", objective_to_json(file.problem.objective, tree)},
          {"x0", vector_json(file.problem.x0)},
          {"options", options_to_json(file.options)}};
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

std::string digest(const ProblemFile& file) {
  return sha256_hex(problem_to_json(file).dump());
}

Json solution_to_json(const SolutionFile& file, const ScenarioTree& tree) {
  const Solution& s = file.solution;
  Json nodes = Json::array();
  for (NodeIndex n = 0; n < tree.size(); ++n) {
    Json e = {{"id", tree.id(n)},
              {"x", vector_json(s.path[static_cast<std::size_t>(
                                    tree.depth(n))].at(tree, n))}};
    if (!tree.is_root(n)) {
      const NodeLift& l = s.lifts[n];
      const NodeMultipliers& k = s.multipliers[n];
      e["lift"] = {{"psi", vector_json(l.psi)},
                   {"margin", vector_json(l.margin)},
                   {"objective", vector_json(l.objective)}};
      e["multipliers"] = {{"psi_plus", vector_json(k.psi_plus)},
                          {"psi_minus", vector_json(k.psi_minus)},
                          {"psi_sum", number(k.psi_sum)},
                          {"margin_plus", vector_json(k.margin_plus)},
                          {"margin_minus", vector_json(k.margin_minus)},
                          {"margin_sum", number(k.margin_sum)},
                          {"objective_plus", vector_json(k.objective_plus)},
                          {"objective_minus", vector_json(k.objective_minus)}};
    }
    nodes.push_back(std::move(e));
  }
  return {{"schema", std::string(kSolutionSchema)},
          {"tool_version", std::string(tool_version())},
          {"digest", file.digest},
          {"options", options_to_json(file.options)},
          {"objective", number(s.objective)},
          {"duality_gap", number(s.duality_gap)},
          {"barrier_weight", number(s.barrier_weight)},
          {"residuals", kkt_json(s.residuals)},
          {"iterations", s.iterations},
          {"outer_iterations", s.outer_iterations},
          {"wall_time", number(s.wall_time)},
          {"converged", s.converged},
          {"floor_active", s.floor_active},
          {"nodes", std::move(nodes)}};
}

SolutionFile solution_from_json(const Json& doc, const PathProblem& problem) {
  check_schema(doc, kSolutionSchema);
  const MarketData& market = problem.market;
  const ScenarioTree& tree = market.tree();
  SolutionFile file;
  file.digest = string_at(doc, "digest", "");
  file.options = options_from_json(member(doc, "options", ""));
  Solution& s = file.solution;
  s.objective = number_at(doc, "objective", "");
  s.duality_gap = number_at(doc, "duality_gap", "");
  s.barrier_weight = number_at(doc, "barrier_weight", "");
  s.residuals = kkt_from(member(doc, "residuals", ""));
  s.iterations = int_at(doc, "iterations", "");
  s.outer_iterations = int_at(doc, "outer_iterations", "");
  s.wall_time = number_at(doc, "wall_time", "");
  s.converged = bool_at(doc, "converged", "");
  s.floor_active = bool_at(doc, "floor_active", "");

  const Json& nodes = member(doc, "nodes", "");
  s.path = path_from(nodes, market, "nodes");
  s.lifts.assign(tree.size(), NodeLift{});
  s.multipliers.assign(tree.size(), NodeMultipliers{});
  for (const Json& e : nodes) {
    const std::string id = string_at(e, "id", "");
    const NodeIndex n = tree.find(id);
    if (tree.is_root(n)) continue;
    const Json& l = member(e, "lift", id);
    s.lifts[n] = {to_vector(member(l, "psi", id), -1, id, "lift.psi"),
                  to_vector(member(l, "margin", id), -1, id, "lift.margin"),
                  to_vector(member(l, "objective", id), -1, id,
                            "lift.objective")};
    const Json& k = member(e, "multipliers", id);
    NodeMultipliers& mk = s.multipliers[n];
    auto vec = [&](const char* key) {
      return to_vector(member(k, key, id), -1, id, key);
    };
    mk.psi_plus = vec("psi_plus");
    mk.psi_minus = vec("psi_minus");
    mk.psi_sum = number_at(k, "psi_sum", id);
    mk.margin_plus = vec("margin_plus");
    mk.margin_minus = vec("margin_minus");
    mk.margin_sum = number_at(k, "margin_sum", id);
    mk.objective_plus = vec("objective_plus");
    mk.objective_minus = vec("objective_minus");
  }
  return file;
}

Json certificate_to_json(const CertificateFile& file,
                         const ScenarioTree& tree) {
  const RapidityCertificate& c = file.certificate;
  Json norm = Json::array();
  for (double v : c.normalization) norm.push_back(number(v));
  Json checks = Json::array();
  for (const NodeCheck& k : c.nodes) {
    checks.push_back({{"t", k.t},
                      {"node", k.node},
                      {"normalization", number(k.normalization)},
                      {"membership", number(k.membership)},
                      {"transition", number(k.transition)},
                      {"feasibility", number(k.feasibility)}});
  }
  Json witness = nullptr;
  if (c.witness) {
    const Witness& w = *c.witness;
    witness = {{"check", w.check}, {"t", w.t},         {"node", w.node},
               {"value", number(w.value)}, {"a", vector_json(w.a)},
               {"b", vector_json(w.b)}};
  }
  Json dual = Json::array();
  for (std::size_t t = 1; t < file.dual.p.size(); ++t) {
    const AdaptedVector& layer = file.dual.p[t];
    Json values = Json::array();
    for (NodeIndex n : tree.nodes_at(layer.depth())) {
      values.push_back({{"id", tree.id(n)}, {"p", vector_json(layer.at(tree, n))}});
    }
    dual.push_back({{"t", static_cast<int>(t)}, {"nodes", std::move(values)}});
  }
  return {{"schema", std::string(kCertificateSchema)},
          {"tool_version", file.version},
          {"digest", file.digest},
          {"wall_time", number(file.wall_time)},
          {"verdict", c.certified ? "certified" : "refuted"},
          {"tol", number(c.tol)},
          {"competitors", {{"count", c.competitors}, {"seed", file.seed}}},
          {"residuals",
           {{"normalization", std::move(norm)},
            {"max_normalization", number(c.max_normalization)},
            {"max_membership", number(c.max_membership)},
            {"max_transition", number(c.max_transition)},
            {"max_feasibility", number(c.max_feasibility)},
            {"supermartingale", number(c.supermartingale)}}},
          {"checks", std::move(checks)},
          {"witness", std::move(witness)},
          {"path", path_json(file.path, tree)},
          {"dual", std::move(dual)}};
}

CertificateFile certificate_from_json(const Json& doc,
                                      const MarketData& market) {
  check_schema(doc, kCertificateSchema);
  const ScenarioTree& tree = market.tree();
  const int horizon = tree.horizon();
  CertificateFile file;
  file.version = string_at(doc, "tool_version", "");
  file.digest = string_at(doc, "digest", "");
  file.wall_time = number_at(doc, "wall_time", "");
  RapidityCertificate& c = file.certificate;
  const std::string verdict = string_at(doc, "verdict", "");
  if (verdict != "certified" && verdict != "refuted") {
    fail("", "verdict", fmt::format("unknown verdict '{}'", verdict));
  }
  c.certified = verdict == "certified";
  c.tol = number_at(doc, "tol", "");
  const Json& comp = member(doc, "competitors", "");
  c.competitors = int_at(comp, "count", "");
  const Json& seed = member(comp, "seed", "");
  if (!seed.is_number_unsigned()) fail("", "seed", "expected a nonnegative integer");
  file.seed = seed.get<std::uint64_t>();
  const Json& r = member(doc, "residuals", "");
  for (const Json& v : member(r, "normalization", "")) {
    c.normalization.push_back(to_double(v, "", "normalization"));
  }
  c.max_normalization = number_at(r, "max_normalization", "");
  c.max_membership = number_at(r, "max_membership", "");
  c.max_transition = number_at(r, "max_transition", "");
  c.max_feasibility = number_at(r, "max_feasibility", "");
  c.supermartingale = number_at(r, "supermartingale", "");
  for (const Json& k : member(doc, "checks", "")) {
    const std::string id = string_at(k, "node", "");
    c.nodes.push_back({int_at(k, "t", id), id, number_at(k, "normalization", id),
                       number_at(k, "membership", id),
                       number_at(k, "transition", id),
                       number_at(k, "feasibility", id)});
  }
  const Json& w = member(doc, "witness", "");
  if (!w.is_null()) {
    const std::string id = string_at(w, "node", "");
    c.witness = Witness{string_at(w, "check", id), int_at(w, "t", id), id,
                        number_at(w, "value", id),
                        to_vector(member(w, "a", id), -1, id, "a"),
                        to_vector(member(w, "b", id), -1, id, "b")};
  }
  file.path = path_from(member(doc, "path", ""), market, "path");

  const Json& layers = member(doc, "dual", "");
  if (!layers.is_array() || layers.size() != static_cast<std::size_t>(horizon) + 1) {
    fail("", "dual", fmt::format("expected {} layers", horizon + 1));
  }
  file.dual.p.assign(static_cast<std::size_t>(horizon) + 2, AdaptedVector());
  for (const Json& layer : layers) {
    const int t = int_at(layer, "t", "");
    if (t < 1 || t > horizon + 1) fail("", "dual.t", fmt::format("period {} out of range", t));
    const int depth = std::min(t, horizon);
    AdaptedVector field = AdaptedVector::zeros(tree, depth, market.assets());
    const Json& values = member(layer, "nodes", "");
    if (!values.is_array() || values.size() != tree.count_at(depth)) {
      fail("", "dual.nodes", fmt::format("period {} expects {} nodes", t,
                                          tree.count_at(depth)));
    }
    for (const Json& e : values) {
      const std::string id = string_at(e, "id", "");
      NodeIndex n;
      try {
        n = tree.find(id);
      } catch (const Error&) {
        fail(id, "dual", "unknown node");
      }
      if (tree.depth(n) != depth) fail(id, "dual", fmt::format("not at depth {}", depth));
      field.at(tree, n) = to_vector(member(e, "p", id), market.assets(), id, "p");
    }
    file.dual.p[static_cast<std::size_t>(t)] = std::move(field);
  }
  return file;
}

RapidityCertificate verify_with_competitors(const Path& path,
                                            const DualPath& dual,
                                            const MarketData& market,
                                            double tol, int count,
                                            std::uint64_t seed) {
  std::vector<Path> competitors;
  if (count > 0) {
    competitors = sample_competitors(market, market_constants(market), path,
                                     count, seed);
  }
  return verify_rapid(path, dual, market, tol, competitors);
}

RapidityCertificate reverify(const CertificateFile& file,
                             const MarketData& market) {
  return verify_with_competitors(file.path, file.dual, market,
                                 file.certificate.tol,
                                 file.certificate.competitors, file.seed);
}

Json read_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw Error(ErrorCode::kParseError,
                fmt::format("cannot open '{}'", file.string()));
  }
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kParseError,
                fmt::format("'{}' at byte {}: invalid JSON", file.string(),
                            e.byte));
  }
}

void write_atomic(const std::filesystem::path& file, std::string_view text) {
  std::filesystem::path tmp = file;
  tmp += fmt::format(".tmp{}", static_cast<long>(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error(
          fmt::format("cannot write '{}'", file.string()));
    }
  }
  std::filesystem::rename(tmp, file);
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

}  // namespace vng::io
