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

#include "vngale/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "vngale/error.hpp"

namespace vng {
namespace {

constexpr double kPsiFloor = 1e-300;
// Squared Newton decrement below which centering stops; near the roundoff
// floor of the merit at the largest barrier weights.
constexpr double kDecrementFloor = 1e-10;
constexpr int kRefineSteps = 12;
// The barrier gap also bounds the deviation of every p_{t+1} x_t from 1 after
// dual extraction; stopping at a tenth of tol leaves room for both.
constexpr double kGapShare = 0.1;

enum class LeafMode { kLinear, kLiquidation, kL1, kL2 };

struct Row {
  std::vector<int> idx;
  std::vector<double> coef;
  double constant = 0.0;
  double weight = 1.0;  // probability of the owning node

  void add(int i, double c) {
    idx.push_back(i);
    coef.push_back(c);
  }
  double eval(const Vector& z) const {
    double v = constant;
    for (std::size_t k = 0; k < idx.size(); ++k) v += coef[k] * z[idx[k]];
    return v;
  }
};

struct LeafTerm {
  double weight = 0.0;  // node probability
  LeafMode mode = LeafMode::kLinear;
  Row affine;           // w = affine(z) - theta |x|_2 for kL2
  int x_off = 0;
  double theta = 0.0;
};

LeafMode leaf_mode(const TerminalObjective& obj, std::size_t slot) {
  switch (obj.kind()) {
    case ObjectiveKind::kLinear: return LeafMode::kLinear;
    case ObjectiveKind::kLiquidation: return LeafMode::kLiquidation;
    case ObjectiveKind::kNormPenalized:
      if (obj.theta(slot) == 0.0) return LeafMode::kLinear;
      return obj.norm() == PenaltyNorm::kL1 ? LeafMode::kL1 : LeafMode::kL2;
  }
  return LeafMode::kLinear;
}

// Lifted barrier program. Variables per non-root node, in storage order:
// x (m), psi lift (m), margin lift (m), objective lift (m, lifted leaves).
// Rows per node: psi [+ m][- m][sum], margin [+ m][- m][sum], objective
// [+ m][- m].
class Program {
 public:
  Program(const PathProblem& problem) : problem_(problem) {
    const MarketData& md = problem.market;
    const ScenarioTree& tree = md.tree();
    const int m = md.assets();
    m_ = m;
    const std::size_t size = tree.size();
    x_off_.assign(size, -1);
    psi_off_.assign(size, -1);
    margin_off_.assign(size, -1);
    obj_off_.assign(size, -1);
    row_off_.assign(size, -1);
    int next = 0;
    for (NodeIndex n = 1; n < size; ++n) {
      x_off_[n] = next;
      psi_off_[n] = next + m;
      margin_off_[n] = next + 2 * m;
      next += 3 * m;
      if (tree.is_leaf(n)) {
        const LeafMode mode = leaf_mode(problem.objective, tree.slot(n));
        if (mode == LeafMode::kLiquidation || mode == LeafMode::kL1) {
          obj_off_[n] = next;
          next += m;
        }
      }
    }
    nvar_ = next;

    for (NodeIndex n = 1; n < size; ++n) {
      row_off_[n] = static_cast<int>(rows_.size());
      const NodeIndex p = tree.parent(n);
      const Vector& r = md.returns(n);
      const Vector& lp = md.sell_factor(n);
      const Vector& lm = md.buy_factor(n);
      const double mu = md.margin(tree.depth(n));
      for (const Vector* factor : {&lp, &lm}) {
        for (int i = 0; i < m; ++i) {
          Row row;
          const double f = (*factor)[i];
          if (tree.is_root(p)) {
            row.constant = f * r[i] * problem.x0[i];
          } else {
            row.add(x_off_[p] + i, f * r[i]);
          }
          row.add(x_off_[n] + i, -f);
          row.add(psi_off_[n] + i, -1.0);
          rows_.push_back(std::move(row));
        }
      }
      rows_.push_back(sum_row(psi_off_[n]));
      for (int side = 0; side < 2; ++side) {
        for (int i = 0; i < m; ++i) {
          Row row;
          row.add(x_off_[n] + i, side == 0 ? lp[i] : mu * lm[i]);
          row.add(margin_off_[n] + i, -1.0);
          rows_.push_back(std::move(row));
        }
      }
      rows_.push_back(sum_row(margin_off_[n]));

      if (!tree.is_leaf(n)) continue;
      const std::size_t slot = tree.slot(n);
      LeafTerm leaf;
      leaf.weight = tree.probability(n);
      leaf.mode = leaf_mode(problem.objective, slot);
      leaf.x_off = x_off_[n];
      const Vector& q = problem.objective.q(slot);
      switch (leaf.mode) {
        case LeafMode::kLinear:
        case LeafMode::kL2:
          for (int i = 0; i < m; ++i) leaf.affine.add(x_off_[n] + i, q[i]);
          leaf.theta = leaf.mode == LeafMode::kL2 ? problem.objective.theta(slot)
                                                  : 0.0;
          break;
        case LeafMode::kLiquidation:
          for (int side = 0; side < 2; ++side) {
            for (int i = 0; i < m; ++i) {
              Row row;
              row.add(x_off_[n] + i, side == 0 ? lp[i] : lm[i]);
              row.add(obj_off_[n] + i, -1.0);
              rows_.push_back(std::move(row));
            }
          }
          leaf.affine = sum_row(obj_off_[n]);
          break;
        case LeafMode::kL1: {
          const double theta = problem.objective.theta(slot);
          for (int side = 0; side < 2; ++side) {
            for (int i = 0; i < m; ++i) {
              Row row;
              row.add(obj_off_[n] + i, 1.0);
              row.add(x_off_[n] + i, side == 0 ? -1.0 : 1.0);
              rows_.push_back(std::move(row));
            }
          }
          for (int i = 0; i < m; ++i) {
            leaf.affine.add(x_off_[n] + i, q[i]);
            leaf.affine.add(obj_off_[n] + i, -theta);
          }
          break;
        }
      }
      leaves_.push_back(std::move(leaf));
    }
    for (NodeIndex n = 1; n < size; ++n) {
      const std::size_t end =
          n + 1 < size ? static_cast<std::size_t>(row_off_[n + 1]) : rows_.size();
      for (auto k = static_cast<std::size_t>(row_off_[n]); k < end; ++k) {
        rows_[k].weight = tree.probability(n);
      }
    }
  }

  int nvar() const { return nvar_; }
  std::size_t nrows() const { return rows_.size(); }
  int x_off(NodeIndex n) const { return x_off_[n]; }
  int psi_off(NodeIndex n) const { return psi_off_[n]; }
  int margin_off(NodeIndex n) const { return margin_off_[n]; }
  int obj_off(NodeIndex n) const { return obj_off_[n]; }
  int row_off(NodeIndex n) const { return row_off_[n]; }
  const Row& row(std::size_t k) const { return rows_[k]; }

  double leaf_value(const LeafTerm& leaf, const Vector& z) const {
    double w = leaf.affine.eval(z);
    if (leaf.mode == LeafMode::kL2) {
      w -= leaf.theta * z.segment(leaf.x_off, m_).norm();
    }
    return w;
  }

  // Strictly inside the barrier domain.
  bool inside(const Vector& z) const {
    for (const Row& r : rows_) {
      if (!(r.eval(z) > 0.0)) return false;
    }
    for (const LeafTerm& l : leaves_) {
      if (!(leaf_value(l, z) > 0.0)) return false;
    }
    return true;
  }

  double objective(const Vector& z) const {
    double f = 0.0;
    for (const LeafTerm& l : leaves_) {
      f += l.weight * std::log(std::max(leaf_value(l, z), kPsiFloor));
    }
    return f;
  }

  double merit(const Vector& z, double t) const {
    double phi = -t * objective(z);
    for (const Row& r : rows_) phi -= r.weight * std::log(r.eval(z));
    return phi;
  }

  // Gradient of sum_l P_l log w_l.
  Vector objective_gradient(const Vector& z) const {
    Vector g = Vector::Zero(nvar_);
    for (const LeafTerm& l : leaves_) {
      const double c = l.weight / leaf_value(l, z);
      for (std::size_t k = 0; k < l.affine.idx.size(); ++k) {
        g[l.affine.idx[k]] += c * l.affine.coef[k];
      }
      if (l.mode == LeafMode::kL2) {
        const Vector x = z.segment(l.x_off, m_);
        g.segment(l.x_off, m_) -= c * l.theta * x / x.norm();
      }
    }
    return g;
  }

  // Adds scale times the gradient and Hessian (lower triangle) of -F.
  void add_objective(const Vector& z, double scale, Vector& grad,
                     std::vector<Eigen::Triplet<double>>& hess) const {
    for (const LeafTerm& l : leaves_) {
      const double w = leaf_value(l, z);
      const double c = scale * l.weight;
      std::vector<int> idx = l.affine.idx;
      std::vector<double> dw = l.affine.coef;
      Vector xhat;
      double xn = 0.0;
      if (l.mode == LeafMode::kL2) {
        const Vector x = z.segment(l.x_off, m_);
        xn = x.norm();
        xhat = x / xn;
        for (int i = 0; i < m_; ++i) {
          idx.push_back(l.x_off + i);
          dw.push_back(-l.theta * xhat[i]);
        }
      }
      for (std::size_t k = 0; k < idx.size(); ++k) {
        grad[idx[k]] -= c * dw[k] / w;
      }
      add_outer(idx, dw, c / (w * w), hess);
      if (l.mode == LeafMode::kL2) {
        // -c/w times the Hessian of w = c theta (I - xhat xhat') / (|x| w).
        const double s = c * l.theta / (xn * w);
        for (int i = 0; i < m_; ++i) {
          for (int j = 0; j <= i; ++j) {
            const double h = (i == j ? 1.0 : 0.0) - xhat[i] * xhat[j];
            hess.emplace_back(l.x_off + i, l.x_off + j, s * h);
          }
        }
      }
    }
  }

  void derivatives(const Vector& z, double t, Vector& grad,
                   std::vector<Eigen::Triplet<double>>& hess) const {
    grad.setZero(nvar_);
    hess.clear();
    for (const Row& r : rows_) {
      const double s = r.eval(z);
      for (std::size_t k = 0; k < r.idx.size(); ++k) {
        grad[r.idx[k]] -= r.weight * r.coef[k] / s;
      }
      add_outer(r.idx, r.coef, r.weight / (s * s), hess);
    }
    add_objective(z, t, grad, hess);
  }

  static void add_outer(const std::vector<int>& idx,
                        const std::vector<double>& a, double scale,
                        std::vector<Eigen::Triplet<double>>& hess) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t j = 0; j < idx.size(); ++j) {
        if (idx[i] >= idx[j]) hess.emplace_back(idx[i], idx[j], scale * a[i] * a[j]);
      }
    }
  }

  double barrier_mass() const {
    double mass = 0.0;
    for (const Row& r : rows_) mass += r.weight;
    return mass;
  }

  // Strictly feasible lifted point over a path with positive slacks.
  Vector lift_point(const Path& path) const {
    const MarketData& md = problem_.market;
    const ScenarioTree& tree = md.tree();
    Vector z = Vector::Zero(nvar_);
    for (NodeIndex n = 1; n < tree.size(); ++n) {
      z.segment(x_off_[n], m_) =
          path[static_cast<std::size_t>(tree.depth(n))].at(tree, n);
    }
    for (NodeIndex n = 1; n < tree.size(); ++n) {
      // Each hypograph block: s_i = min(rows) - total / (2m).
      for (int block = 0; block < 2; ++block) {
        const int base = row_off_[n] + block * (2 * m_ + 1);
        const int off = block == 0 ? psi_off_[n] : margin_off_[n];
        Vector lo(m_);
        for (int i = 0; i < m_; ++i) {
          lo[i] = std::min(rows_[static_cast<std::size_t>(base + i)].eval(z),
                           rows_[static_cast<std::size_t>(base + m_ + i)].eval(z));
        }
        z.segment(off, m_) = lo.array() - lo.sum() / (2.0 * m_);
      }
      if (obj_off_[n] < 0) continue;
      const int base = row_off_[n] + 2 * (2 * m_ + 1);
      const Vector x = z.segment(x_off_[n], m_);
      const std::size_t slot = tree.slot(n);
      if (leaf_mode(problem_.objective, slot) == LeafMode::kLiquidation) {
        Vector lo(m_);
        for (int i = 0; i < m_; ++i) {
          lo[i] = std::min(rows_[static_cast<std::size_t>(base + i)].eval(z),
                           rows_[static_cast<std::size_t>(base + m_ + i)].eval(z));
        }
        z.segment(obj_off_[n], m_) = lo.array() - lo.sum() / (2.0 * m_);
      } else {
        const double psi = problem_.objective.value(slot, x);
        const double eps = psi / (2.0 * problem_.objective.theta(slot) * m_);
        z.segment(obj_off_[n], m_) = x.cwiseAbs().array() + eps;
      }
    }
    return z;
  }

  const std::vector<LeafTerm>& leaves() const { return leaves_; }

 private:
  Row sum_row(int off) const {
    Row r;
    for (int i = 0; i < m_; ++i) r.add(off + i, 1.0);
    return r;
  }

  const PathProblem& problem_;
  int m_ = 0;
  int nvar_ = 0;
  std::vector<int> x_off_, psi_off_, margin_off_, obj_off_, row_off_;
  std::vector<Row> rows_;
  std::vector<LeafTerm> leaves_;
};

struct Centering {
  int steps = 0;
  bool ok = true;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

ProgramShape assemble(const PathProblem& problem) {
  const MarketData& md = problem.market;
  const ScenarioTree& tree = md.tree();
  const int m = md.assets();
  if (problem.x0.size() != m) {
    throw Error(ErrorCode::kDimensionMismatch, "x0 has the wrong dimension");
  }
  if (problem.objective.leaves() != tree.count_at(tree.horizon())) {
    throw Error(ErrorCode::kShapeMismatch,
                "objective does not match the tree's leaves");
  }
  market_constants(md);
  ProgramShape shape;
  shape.initial_radius = interior_radius(md, problem.x0, tree.root());
  if (!(shape.initial_radius > 0.0)) {
    throw Error(ErrorCode::kInfeasibleStart,
                fmt::format("x0 is not interior to X_0 (radius {})",
                            shape.initial_radius));
  }
  const Program prog(problem);
  shape.node_vectors = tree.size();
  shape.edge_blocks = tree.size() - 1;
  shape.margin_blocks = tree.size() - 1;
  for (NodeIndex l : tree.nodes_at(tree.horizon())) {
    if (prog.obj_off(l) >= 0) ++shape.objective_blocks;
  }
  shape.variables = static_cast<std::size_t>(prog.nvar());
  shape.inequalities = prog.nrows();
  return shape;
}

namespace {

Solution solve_unit(const PathProblem& problem, const SolverOptions& options) {
  const MarketData& md = problem.market;
  const ScenarioTree& tree = md.tree();
  const int m = md.assets();
  const MarketConstants constants = market_constants(md);
  const SlaterPath slater = slater_path(md, constants, problem.x0);
  const Program prog(problem);
  const int nvar = prog.nvar();
  const double mass = prog.barrier_mass();

  Solution sol;
  Vector z = prog.lift_point(slater.path);
  if (!prog.inside(z)) {
    throw Error(ErrorCode::kInfeasibleStart,
                "interior start is not strictly feasible");
  }

  Vector grad(nvar);
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::SparseMatrix<double> hess(nvar, nvar);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt;
  bool analyzed = false;

  auto center = [&](double t) {
    Centering c;
    double phi = prog.merit(z, t);
    for (int k = 0; k < 100; ++k) {
      if (sol.iterations >= options.max_iter) {
        c.ok = false;
        return c;
      }
      prog.derivatives(z, t, grad, trip);
      hess.setFromTriplets(trip.begin(), trip.end());
      if (!analyzed) {
        ldlt.analyzePattern(hess);
        analyzed = true;
      }
      ldlt.factorize(hess);
      Vector step;
      if (ldlt.info() == Eigen::Success) step = ldlt.solve(-grad);
      if (ldlt.info() != Eigen::Success || !step.allFinite()) {
        Eigen::SparseMatrix<double> reg(nvar, nvar);
        reg.setIdentity();
        hess += 1e-12 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff()) * reg;
        ldlt.factorize(hess);
        step = ldlt.solve(-grad);
        if (ldlt.info() != Eigen::Success || !step.allFinite()) {
          c.ok = false;
          return c;
        }
      }
      const double dec2 = -grad.dot(step);
      if (!(dec2 > 1e-20)) break;
      // Full steps inside the quadratic region of a self-concordant merit.
      double alpha = 1.0;
      const bool quadratic = dec2 < 0.04;
      Vector trial = z + alpha * step;
      while (!prog.inside(trial) && alpha > 1e-30) {
        alpha *= 0.5;
        trial = z + alpha * step;
      }
      double next = prog.merit(trial, t);
      if (!quadratic) {
        while (next > phi - 1e-4 * alpha * dec2 && alpha > 1e-30) {
          alpha *= 0.5;
          trial = z + alpha * step;
          next = prog.merit(trial, t);
        }
      }
      if (alpha <= 1e-30 || !prog.inside(trial)) break;
      if (quadratic && next > phi) break;
      z = trial;
      phi = next;
      ++sol.iterations;
      ++c.steps;
      sol.merit_trace.push_back(phi);
      if (dec2 < kDecrementFloor) break;
    }
    return c;
  };

  double t = options.t0;
  bool ok = true;
  while (true) {
    const Centering c = center(t);
    sol.centering_steps.push_back(c.steps);
    sol.center_objectives.push_back(prog.objective(z));
    ++sol.outer_iterations;
    if (!c.ok) {
      ok = false;
      break;
    }
    if (mass / t <= kGapShare * options.tol) break;
    t *= options.growth;
  }

  // Multipliers w/(t s) lose relative accuracy where slacks cancel. A few
  // primal-dual Newton steps at the final weight, with the slacks carried
  // as separate variables, restore stationarity to roundoff.
  const std::size_t nrow = prog.nrows();
  const auto nr = static_cast<Eigen::Index>(nrow);
  Vector slack(nr), lambda(nr), target(nr);
  for (std::size_t k = 0; k < nrow; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    slack[kk] = prog.row(k).eval(z);
    target[kk] = prog.row(k).weight / t;
    lambda[kk] = target[kk] / slack[kk];
  }
  auto residuals = [&](const Vector& zz, const Vector& ss, const Vector& ll,
                       Vector& rd, Vector& rp, Vector& rc) {
    rd = prog.objective_gradient(zz);
    rp.resize(nr);
    for (std::size_t k = 0; k < nrow; ++k) {
      const Row& row = prog.row(k);
      const auto kk = static_cast<Eigen::Index>(k);
      for (std::size_t i = 0; i < row.idx.size(); ++i) {
        rd[row.idx[i]] += ll[kk] * row.coef[i];
      }
      rp[kk] = row.eval(zz) - ss[kk];
    }
    rc = ss.cwiseProduct(ll) - target;
    return std::max({rd.lpNorm<Eigen::Infinity>(), rp.lpNorm<Eigen::Infinity>(),
                     rc.lpNorm<Eigen::Infinity>()});
  };
  Vector rd, rp, rc;
  double res = residuals(z, slack, lambda, rd, rp, rc);
  for (int pass = 0; pass < kRefineSteps && res > 0.0; ++pass) {
    const Vector d = lambda.cwiseQuotient(slack);
    trip.clear();
    Vector scratch = Vector::Zero(nvar);
    prog.add_objective(z, 1.0, scratch, trip);
    Vector rhs = rd;
    for (std::size_t k = 0; k < nrow; ++k) {
      const Row& row = prog.row(k);
      const auto kk = static_cast<Eigen::Index>(k);
      Program::add_outer(row.idx, row.coef, d[kk], trip);
      const double c = rc[kk] / slack[kk] + d[kk] * rp[kk];
      for (std::size_t i = 0; i < row.idx.size(); ++i) {
        rhs[row.idx[i]] -= c * row.coef[i];
      }
    }
    hess.setFromTriplets(trip.begin(), trip.end());
    ldlt.factorize(hess);
    if (ldlt.info() != Eigen::Success) {
      Eigen::SparseMatrix<double> reg(nvar, nvar);
      reg.setIdentity();
      hess += 1e-14 * hess.diagonal().cwiseAbs().maxCoeff() * reg;
      ldlt.factorize(hess);
    }
    if (ldlt.info() != Eigen::Success) break;
    const Vector dz = ldlt.solve(rhs);
    if (!dz.allFinite()) break;
    Vector ds(nr), dl(nr);
    double alpha = 1.0;
    for (std::size_t k = 0; k < nrow; ++k) {
      const Row& row = prog.row(k);
      const auto kk = static_cast<Eigen::Index>(k);
      double a_dz = 0.0;
      for (std::size_t i = 0; i < row.idx.size(); ++i) {
        a_dz += row.coef[i] * dz[row.idx[i]];
      }
      ds[kk] = a_dz + rp[kk];
      dl[kk] = -(rc[kk] + lambda[kk] * ds[kk]) / slack[kk];
      if (ds[kk] < 0.0) alpha = std::min(alpha, -0.995 * slack[kk] / ds[kk]);
      if (dl[kk] < 0.0) alpha = std::min(alpha, -0.995 * lambda[kk] / dl[kk]);
    }
    Vector z_next = z + alpha * dz;
    if (!prog.inside(z_next)) break;
    const Vector s_next = slack + alpha * ds;
    const Vector l_next = lambda + alpha * dl;
    Vector rd2, rp2, rc2;
    const double res2 = residuals(z_next, s_next, l_next, rd2, rp2, rc2);
    if (!(res2 < res)) break;
    z = std::move(z_next);
    slack = s_next;
    lambda = l_next;
    rd = std::move(rd2);
    rp = std::move(rp2);
    rc = std::move(rc2);
    res = res2;
  }

  // Unpack.
  sol.barrier_weight = t;
  sol.duality_gap = mass / t;
  sol.path.push_back(AdaptedVector::constant(tree, 0, problem.x0));
  for (int d = 1; d <= tree.horizon(); ++d) {
    AdaptedVector x = AdaptedVector::zeros(tree, d, m);
    for (NodeIndex n : tree.nodes_at(d)) x.at(tree, n) = z.segment(prog.x_off(n), m);
    sol.path.push_back(std::move(x));
  }
  sol.lifts.resize(tree.size());
  sol.multipliers.resize(tree.size());
  for (NodeIndex n = 1; n < tree.size(); ++n) {
    NodeLift& lift = sol.lifts[n];
    lift.psi = z.segment(prog.psi_off(n), m);
    lift.margin = z.segment(prog.margin_off(n), m);
    if (prog.obj_off(n) >= 0) lift.objective = z.segment(prog.obj_off(n), m);
    NodeMultipliers& mult = sol.multipliers[n];
    auto lam = [&](int k) { return lambda[k]; };
    const int base = prog.row_off(n);
    mult.psi_plus.resize(m);
    mult.psi_minus.resize(m);
    mult.margin_plus.resize(m);
    mult.margin_minus.resize(m);
    for (int i = 0; i < m; ++i) {
      mult.psi_plus[i] = lam(base + i);
      mult.psi_minus[i] = lam(base + m + i);
      mult.margin_plus[i] = lam(base + 2 * m + 1 + i);
      mult.margin_minus[i] = lam(base + 3 * m + 1 + i);
    }
    mult.psi_sum = lam(base + 2 * m);
    mult.margin_sum = lam(base + 4 * m + 1);
    if (prog.obj_off(n) >= 0) {
      mult.objective_plus.resize(m);
      mult.objective_minus.resize(m);
      for (int i = 0; i < m; ++i) {
        mult.objective_plus[i] = lam(base + 4 * m + 2 + i);
        mult.objective_minus[i] = lam(base + 5 * m + 2 + i);
      }
    }
  }
  for (const auto& leaf : prog.leaves()) {
    if (prog.leaf_value(leaf, z) < kPsiFloor) sol.floor_active = true;
  }
  sol.converged = ok && !sol.floor_active;
  return sol;
}

}  // namespace

Solution solve_log_optimal(const PathProblem& problem,
                           const SolverOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  assemble(problem);
  // The iteration runs on x0 / |x0|; the exact problem is homogeneous of
  // degree one, so rescaling afterwards makes the solver scale-equivariant.
  const double scale = problem.x0.lpNorm<1>();
  PathProblem unit = problem;
  unit.x0 = problem.x0 / scale;
  Solution sol = solve_unit(unit, options);

  const ScenarioTree& tree = problem.market.tree();
  sol.path[0] = AdaptedVector::constant(tree, 0, problem.x0);
  for (std::size_t t = 1; t < sol.path.size(); ++t) sol.path[t] *= scale;
  for (NodeIndex n = 1; n < tree.size(); ++n) {
    NodeLift& lift = sol.lifts[n];
    lift.psi *= scale;
    lift.margin *= scale;
    lift.objective *= scale;
    NodeMultipliers& mult = sol.multipliers[n];
    for (Vector* v : {&mult.psi_plus, &mult.psi_minus, &mult.margin_plus,
                      &mult.margin_minus, &mult.objective_plus,
                      &mult.objective_minus}) {
      *v /= scale;
    }
    mult.psi_sum /= scale;
    mult.margin_sum /= scale;
  }
  for (double& f : sol.center_objectives) f += std::log(scale);
  sol.objective = log_objective(tree, problem.objective, sol.path.back());
  sol.residuals = kkt_report(sol, problem);
  sol.converged = sol.converged && sol.residuals.within(options.tol);
  sol.wall_time = seconds_since(start);
  return sol;
}

KktReport kkt_report(const Solution& solution, const PathProblem& problem) {
  const MarketData& md = problem.market;
  const ScenarioTree& tree = md.tree();
  const TerminalObjective& obj = problem.objective;
  const int m = md.assets();
  if (solution.path.size() != static_cast<std::size_t>(tree.horizon()) + 1 ||
      solution.lifts.size() != tree.size() ||
      solution.multipliers.size() != tree.size()) {
    throw Error(ErrorCode::kShapeMismatch, "solution does not match problem");
  }
  KktReport rep;
  auto note = [&](double v, double& slot, std::string& who, NodeIndex n) {
    if (v > slot || (std::isnan(v) && !std::isnan(slot))) {
      slot = v;
      who = tree.id(n);
    }
  };
  auto x_of = [&](NodeIndex n) -> const Vector& {
    return solution.path[static_cast<std::size_t>(tree.depth(n))].at(tree, n);
  };
  auto kappa = [&](NodeIndex n) {
    const NodeMultipliers& u = solution.multipliers[n];
    return Vector(u.psi_plus.cwiseProduct(md.sell_factor(n)) +
                  u.psi_minus.cwiseProduct(md.buy_factor(n)));
  };

  for (NodeIndex n = 1; n < tree.size(); ++n) {
    const NodeIndex p = tree.parent(n);
    const Vector& x = x_of(n);
    const Vector& xp = x_of(p);
    const NodeLift& lift = solution.lifts[n];
    const NodeMultipliers& u = solution.multipliers[n];
    const double prob = tree.probability(n);
    const Vector& r = md.returns(n);
    const Vector& lp = md.sell_factor(n);
    const Vector& lm = md.buy_factor(n);
    const double mu = md.margin(tree.depth(n));

    note(std::max({0.0, -margin_residual(md, x, n),
                   -self_financing_value(md, xp, x, n)}),
         rep.primal, rep.primal_node, n);

    // Lifted slacks and complementarity.
    const Vector d = r.cwiseProduct(xp) - x;
    double worst_lift = 0.0;
    double worst_comp = 0.0;
    auto row = [&](double slack, double mult) {
      worst_lift = std::max(worst_lift, -slack);
      worst_comp = std::max(worst_comp, std::abs(mult * slack) / prob);
    };
    for (int i = 0; i < m; ++i) {
      row(lp[i] * d[i] - lift.psi[i], u.psi_plus[i]);
      row(lm[i] * d[i] - lift.psi[i], u.psi_minus[i]);
      row(lp[i] * x[i] - lift.margin[i], u.margin_plus[i]);
      row(mu * lm[i] * x[i] - lift.margin[i], u.margin_minus[i]);
    }
    row(lift.psi.sum(), u.psi_sum);
    row(lift.margin.sum(), u.margin_sum);

    // Lagrangian gradient in x_n and in the lifted blocks.
    Vector gx = -kappa(n) + u.margin_plus.cwiseProduct(lp) +
                mu * u.margin_minus.cwiseProduct(lm);
    for (NodeIndex c : tree.children(n)) {
      gx += md.returns(c).cwiseProduct(kappa(c));
    }
    double gs = 0.0;
    for (int i = 0; i < m; ++i) {
      gs = std::max(gs, std::abs(u.psi_sum - u.psi_plus[i] - u.psi_minus[i]));
      gs = std::max(gs, std::abs(u.margin_sum - u.margin_plus[i] -
                                 u.margin_minus[i]));
    }
    if (tree.is_leaf(n)) {
      const std::size_t slot = tree.slot(n);
      switch (leaf_mode(obj, slot)) {
        case LeafMode::kLinear:
        case LeafMode::kL2: {
          const double w = obj.value(slot, x);
          gx += prob * obj.gradient(slot, x) / w;
          if (!(w > 0.0)) note(-w, rep.primal, rep.primal_node, n);
          break;
        }
        case LeafMode::kLiquidation: {
          const double w = lift.objective.sum();
          gx += u.objective_plus.cwiseProduct(obj.sell_factor(slot)) +
                u.objective_minus.cwiseProduct(obj.buy_factor(slot));
          for (int i = 0; i < m; ++i) {
            row(obj.sell_factor(slot)[i] * x[i] - lift.objective[i],
                u.objective_plus[i]);
            row(obj.buy_factor(slot)[i] * x[i] - lift.objective[i],
                u.objective_minus[i]);
            gs = std::max(gs, std::abs(prob / w - u.objective_plus[i] -
                                       u.objective_minus[i]));
          }
          if (!(w > 0.0)) note(-w, rep.primal, rep.primal_node, n);
          break;
        }
        case LeafMode::kL1: {
          const double theta = obj.theta(slot);
          const double w = obj.q(slot).dot(x) - theta * lift.objective.sum();
          gx += prob * obj.q(slot) / w - u.objective_plus + u.objective_minus;
          for (int i = 0; i < m; ++i) {
            row(lift.objective[i] - x[i], u.objective_plus[i]);
            row(lift.objective[i] + x[i], u.objective_minus[i]);
            gs = std::max(gs, std::abs(prob * theta / w - u.objective_plus[i] -
                                       u.objective_minus[i]));
          }
          if (!(w > 0.0)) note(-w, rep.primal, rep.primal_node, n);
          break;
        }
      }
    }
    note(worst_lift, rep.lift, rep.primal_node, n);
    note(worst_comp, rep.complementarity, rep.complementarity_node, n);
    note(std::max(gx.lpNorm<Eigen::Infinity>(), gs) / prob, rep.stationarity,
         rep.stationarity_node, n);
  }
  return rep;
}

}  // namespace vng
