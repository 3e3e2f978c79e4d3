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

// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "vngale/certification.hpp"
#include "vngale/cli.hpp"
#include "vngale/instances.hpp"
#include "vngale/io.hpp"

namespace {

using namespace vng;
namespace fs = std::filesystem;

constexpr int kInstances = 50;
constexpr double kResidualTol = 1e-6;
constexpr double kRuntimeLimit = 60.0;
constexpr int kCompetitors = 200;
constexpr double kMartingaleTol = 1e-8;
constexpr double kKellyFractionTol = 1e-4;
constexpr double kKellyValueTol = 1e-6;
constexpr double kKellyRuntime = 1.0;
constexpr int kEquivalenceInstances = 20;
constexpr int kEquivalenceSamples = 50;
constexpr double kEquivalenceTol = 1e-8;
constexpr double kConstantsTol = 1e-3;
constexpr int kZSamples = 10000;
constexpr double kHomogeneityPath = 1e-6;
constexpr double kHomogeneityValue = 1e-9;
constexpr int kAxiomSamples = 10000;

struct Run {
  PathProblem problem;
  Solution solution;
  DualPath dual;
  RapidityCertificate certificate;
  SupermartingaleReport worst;  // over competitors
  double rapid_gap = 0.0;
  bool dual_ok = false;
};

double seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  fmt::print("{} {:>2} {}: {}\n", pass ? "PASS" : "FAIL", id, name, detail);
}

std::vector<Run> pipeline_runs(double& elapsed) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<Run> runs;
  for (int seed = 0; seed < kInstances; ++seed) {
    Run r{random_problem(static_cast<std::uint64_t>(seed)), {}, {}, {}, {}, 0.0, false};
    r.solution = solve_log_optimal(r.problem);
    try {
      r.dual = extract_dual(r.solution, r.problem);
      r.dual_ok = true;
    } catch (const Error&) {
      runs.push_back(std::move(r));
      continue;
    }
    const MarketData& md = r.problem.market;
    const std::vector<Path> comps = sample_competitors(
        md, market_constants(md), r.solution.path, kCompetitors,
        static_cast<std::uint64_t>(seed));
    r.certificate = verify_rapid(r.solution.path, r.dual, md, kResidualTol, comps);
    r.worst.nodewise = r.worst.conditional = r.worst.expectation =
        -std::numeric_limits<double>::infinity();
    for (const Path& y : comps) {
      const SupermartingaleReport rep = supermartingale_check(r.dual, y, md);
      r.worst.nodewise = std::max(r.worst.nodewise, rep.nodewise);
      r.worst.conditional = std::max(r.worst.conditional, rep.conditional);
      r.worst.expectation = std::max(r.worst.expectation, rep.expectation);
    }
    r.rapid_gap = supermartingale_check(r.dual, r.solution.path, md).largest_gap;
    runs.push_back(std::move(r));
  }
  elapsed = seconds(start);
  return runs;
}

void criterion_pipeline(const std::vector<Run>& runs, double elapsed) {
  int certified = 0;
  double worst = 0.0;
  for (const Run& r : runs) {
    if (!r.dual_ok) continue;
    const RapidityCertificate& c = r.certificate;
    if (c.certified) ++certified;
    worst = std::max({worst, c.max_normalization, c.max_membership,
                      c.max_transition, c.max_feasibility, c.supermartingale});
  }
  report(1, "solve-extract-verify pipeline",
         certified == kInstances && worst <= kResidualTol && elapsed <= kRuntimeLimit,
         fmt::format("{}/{} certified, max residual {:.2e} (<= {:g}), {:.2f} s "
                     "(<= {:g} s)",
                     certified, kInstances, worst, kResidualTol, elapsed,
                     kRuntimeLimit));
}

// Independent 1-D oracle: grid over the risky fraction, then ternary
// refinement of the best cell.
void criterion_kelly() {
  const auto g = [](double f) {
    return 0.5 * std::log(1.0 + 0.4 * f) + 0.5 * std::log(1.0 - 0.3 * f);
  };
  double best_f = 0.0;
  double best = g(0.0);
  const int cells = 200000;
  for (int k = 0; k <= cells; ++k) {
    const double f = -2.0 + 5.0 * k / cells;
    if (1.0 + 0.4 * f <= 0.0 || 1.0 - 0.3 * f <= 0.0) continue;
    if (g(f) > best) {
      best = g(f);
      best_f = f;
    }
  }
  double lo = best_f - 5.0 / cells;
  double hi = best_f + 5.0 / cells;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    (g(m1) < g(m2) ? lo : hi) = g(m1) < g(m2) ? m1 : m2;
  }
  const double oracle_f = 0.5 * (lo + hi);
  const double oracle_v = g(oracle_f);

  const PathProblem p = kelly_problem();
  const auto start = std::chrono::steady_clock::now();
  const Solution s = solve_log_optimal(p);
  const double elapsed = seconds(start);
  const ScenarioTree& tree = p.market.tree();
  const Vector& x1 = s.path[1].at(tree, tree.nodes_at(1)[0]);
  const double fraction = x1[1] / x1.sum();
  const bool pass = s.converged &&
                    std::abs(fraction - oracle_f) <= kKellyFractionTol &&
                    std::abs(s.objective - oracle_v) <= kKellyValueTol &&
                    elapsed <= kKellyRuntime;
  report(2, "Kelly oracle", pass,
         fmt::format("fraction {:.8f} vs grid {:.8f} (|d| <= {:g}), F {:.12f} vs "
                     "{:.12f} (|d| <= {:g}), {:.3f} s (<= {:g} s)",
                     fraction, oracle_f, kKellyFractionTol, s.objective, oracle_v,
                     kKellyValueTol, elapsed, kKellyRuntime));
}

void criterion_normalization(const std::vector<Run>& runs) {
  double worst = 0.0;
  int checked = 0;
  for (const Run& r : runs) {
    if (!r.dual_ok || !r.certificate.certified) continue;
    ++checked;
    worst = std::max(worst, r.certificate.max_normalization);
  }
  report(3, "normalization p_{t+1} x_t = 1", checked > 0 && worst <= kResidualTol,
         fmt::format("max |p x - 1| {:.2e} (<= {:g}) over {} certified instances",
                     worst, kResidualTol, checked));
}

void criterion_dominance(const std::vector<Run>& runs) {
  double worst = -std::numeric_limits<double>::infinity();
  int paths = 0;
  for (const Run& r : runs) {
    if (!r.dual_ok) continue;
    paths += r.certificate.competitors;
    worst = std::max(worst, r.worst.expectation);
  }
  report(4, "expected dominance E p_{t+1} y <= E p_t y", worst <= kMartingaleTol,
         fmt::format("max E p_(t+1) y_t - E p_t y_(t-1) {:.2e} (<= {:g}) over {} "
                     "competitor paths",
                     worst, kMartingaleTol, paths));
}

void criterion_supermartingale(const std::vector<Run>& runs) {
  double worst = -std::numeric_limits<double>::infinity();
  double gap = 0.0;
  for (const Run& r : runs) {
    if (!r.dual_ok) continue;
    worst = std::max({worst, r.worst.nodewise, r.worst.conditional});
    gap = std::max(gap, r.rapid_gap);
  }
  report(5, "supermartingale / rapid martingale",
         worst <= kMartingaleTol && gap <= kMartingaleTol,
         fmt::format("competitor nodewise/conditional excess {:.2e} (<= {:g}), "
                     "rapid path equality gap {:.2e} (<= {:g})",
                     worst, kMartingaleTol, gap, kMartingaleTol));
}

void criterion_equivalences(const std::vector<Run>& runs) {
  int clean_bad = 0, silent = 0, undetected = 0, cases = 0;
  for (int k = 0; k < kEquivalenceInstances; ++k) {
    const Run& r = runs[static_cast<std::size_t>(k)];
    if (!r.dual_ok) {
      ++clean_bad;
      continue;
    }
    const MarketData& md = r.problem.market;
    const std::vector<Path> samples = sample_competitors(
        md, market_constants(md), r.solution.path, kEquivalenceSamples,
        1000 + static_cast<std::uint64_t>(k));
    for (int t = 1; t <= md.horizon(); ++t) {
      const EquivalenceReport e = check_equivalences(
          r.solution.path, r.dual, t, md, samples, kEquivalenceTol);
      if (!(e.ratio && e.log_ratio && e.expectation && e.cone)) ++clean_bad;
    }
    for (Corruption c : {Corruption::kScaleTerminal, Corruption::kNegateNode,
                         Corruption::kScaleNode}) {
      ++cases;
      DualPath bad = r.dual;
      const int broken = corrupt(bad, md.tree(), c, static_cast<std::uint64_t>(k));
      for (int t = 1; t <= md.horizon(); ++t) {
        const EquivalenceReport e = check_equivalences(r.solution.path, bad, t,
                                                       md, samples, kEquivalenceTol);
        if (!e.consistent) ++silent;
        if (t == broken && (e.cone || e.consistent == false)) ++undetected;
      }
    }
  }
  report(6, "equivalence of the four period checks",
         clean_bad == 0 && silent == 0 && undetected == 0,
         fmt::format("{} instances x 3 corruptions = {} cases: {} silent "
                     "disagreements, {} undetected corruptions, {} failures on "
                     "clean duals",
                     kEquivalenceInstances, cases, silent, undetected, clean_bad));
}

MarketData constants_market(int m, double mu, std::uint64_t seed) {
  std::vector<RawNode> raw = branching_nodes({2, 2});
  ScenarioTree tree = ScenarioTree::build(raw, {m});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<NodeMarket> nodes(tree.size());
  for (NodeIndex n = 0; n < tree.size(); ++n) {
    nodes[n].returns = Vector::Ones(m);
    nodes[n].cost_sell = Vector(m);
    nodes[n].cost_buy = Vector(m);
    for (int i = 0; i < m; ++i) {
      if (!tree.is_root(n)) nodes[n].returns[i] = 0.9 + 0.25 * u(rng);
      nodes[n].cost_sell[i] = 0.03 * u(rng);
      nodes[n].cost_buy[i] = 0.03 * u(rng);
    }
  }
  return MarketData::build(std::move(tree), m, {mu, mu, mu}, std::move(nodes));
}

void criterion_constants() {
  double worst = 0.0;
  int violations = 0;
  long sampled = 0;
  for (int m : {2, 3}) {
    for (std::uint64_t seed : {1u, 2u}) {
      const MarketData md = constants_market(m, 2.2, seed);
      const MarketConstants c = market_constants(md, SectionMethod::kGrid);
      for (int t = 0; t <= md.horizon(); ++t) {
        const auto ts = static_cast<std::size_t>(t);
        const double mu = md.margin(t);
        worst = std::max(worst, std::abs(c.c1[ts] - (mu - c.nu[ts]) / (1.0 + mu)));
        worst = std::max(worst, std::abs(c.h[ts] - (mu + 1.0) / (mu - 1.0)));
      }
      std::mt19937_64 rng(seed * 7919 + static_cast<std::uint64_t>(m));
      for (int t = 1; t <= md.horizon(); ++t) {
        const double k = c.k[static_cast<std::size_t>(t)];
        const auto nodes = md.tree().nodes_at(t);
        for (int s = 0; s < kZSamples; ++s) {
          const NodeIndex n = nodes[static_cast<std::size_t>(s) % nodes.size()];
          const ZSample z = sample_Z(md, n, rng, s % 2 == 1);
          ++sampled;
          const double a = z.a.lpNorm<1>();
          const double b = z.b.lpNorm<1>();
          if (b > k * a * (1.0 + 1e-12)) ++violations;
        }
      }
    }
  }
  report(7, "constants oracle and K bound", worst <= kConstantsTol && violations == 0,
         fmt::format("grid C1/H vs closed forms max |d| {:.2e} (<= {:g}), m in "
                     "{{2,3}}; |b| <= K|a| violations {} of {} Z samples",
                     worst, kConstantsTol, violations, sampled));
}

void criterion_homogeneity() {
  double path_err = 0.0, value_err = 0.0;
  bool converged = true;
  std::vector<PathProblem> problems{kelly_problem()};
  for (std::uint64_t seed : {3u, 8u, 13u, 21u, 34u}) problems.push_back(random_problem(seed));
  for (const PathProblem& base : problems) {
    const Solution s = solve_log_optimal(base);
    converged = converged && s.converged;
    for (double c : {0.5, 2.0, 10.0}) {
      PathProblem scaled = base;
      scaled.x0 = c * base.x0;
      const Solution sc = solve_log_optimal(scaled);
      converged = converged && sc.converged;
      value_err = std::max(value_err, std::abs(sc.objective - s.objective - std::log(c)));
      for (std::size_t t = 0; t < s.path.size(); ++t) {
        for (std::size_t k = 0; k < s.path[t].size(); ++k) {
          const Vector& x = s.path[t][k];
          path_err = std::max(path_err, (sc.path[t][k] - c * x).lpNorm<1>() /
                                            (c * x.lpNorm<1>()));
        }
      }
    }
  }
  report(8, "homogeneity in x0",
         converged && path_err <= kHomogeneityPath && value_err <= kHomogeneityValue,
         fmt::format("c in {{0.5, 2, 10}} on {} instances: path rel. err {:.2e} "
                     "(<= {:g}), F shift err {:.2e} (<= {:g})",
                     problems.size(), path_err, kHomogeneityPath, value_err,
                     kHomogeneityValue));
}

void criterion_axioms() {
  int objectives = 0, failed = 0;
  long checks = 0;
  for (std::uint64_t seed : {4u, 9u}) {
    const PathProblem p = random_problem(seed);
    const MarketData& md = p.market;
    const int m = md.assets();
    const Vector q = Vector::Ones(m);
    const TerminalObjective probe =
        TerminalObjective::norm_penalized(md, {q}, {0.0}, PenaltyNorm::kL1, 0.3);
    double limit = probe.theta_limit(0);
    for (std::size_t k = 0; k < probe.leaves(); ++k) {
      limit = std::min(limit, probe.theta_limit(k));
    }
    std::vector<TerminalObjective> objs{
        TerminalObjective::linear(md, {q}),
        TerminalObjective::liquidation(md, market_constants(md)),
        TerminalObjective::norm_penalized(md, {q}, {limit}, PenaltyNorm::kL1, 0.3),
        TerminalObjective::norm_penalized(md, {q}, {0.5 * limit}, PenaltyNorm::kL2,
                                          0.3),
        p.objective};
    for (const TerminalObjective& obj : objs) {
      const PsiClassReport r = check_psi_class(obj, md, kAxiomSamples, seed);
      ++objectives;
      checks += r.superadditivity.checked + r.homogeneity.checked +
                r.lower_bound.checked + r.upper_bound.checked +
                r.monotonicity.checked + r.concavity.checked + r.euler.checked;
      if (!r.passed()) ++failed;
    }
  }
  const PathProblem p = random_problem(4);
  const Vector q = Vector::Ones(p.market.assets());
  const TerminalObjective probe = TerminalObjective::norm_penalized(
      p.market, {q}, {0.0}, PenaltyNorm::kL1, 0.3);
  double limit = probe.theta_limit(0);
  for (std::size_t k = 0; k < probe.leaves(); ++k) {
    limit = std::min(limit, probe.theta_limit(k));
  }
  const TerminalObjective bad = TerminalObjective::norm_penalized_unchecked(
      p.market, {q}, {3.0 * limit}, PenaltyNorm::kL1, 0.3);
  const bool detected = !check_psi_class(bad, p.market, kAxiomSamples, 4).passed();
  report(9, "objective class axioms", failed == 0 && detected,
         fmt::format("{} objectives x {} samples ({} checks): {} failing; "
                     "mis-parameterized penalty {}",
                     objectives, kAxiomSamples, checks, failed,
                     detected ? "detected" : "NOT detected"));
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void criterion_golden() {
  const fs::path fixtures = VNGALE_FIXTURES;
  const fs::path golden = VNGALE_GOLDEN;
  const fs::path work = fs::temp_directory_path() / "vngale_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  int matched = 0, total = 0;
  std::string first_miss;
  for (const std::string name : {"kelly", "chain", "random"}) {
    const std::string problem = (fixtures / (name + ".json")).string();
    const std::string sol = (work / (name + ".solution.json")).string();
    const std::string cert = (work / (name + ".certificate.json")).string();
    const std::string csv = (work / (name + ".compare.csv")).string();
    std::ostringstream out, err;
    int codes = 0;
    codes |= cli::run_cli({"validate", problem}, out, err);
    codes |= cli::run_cli({"solve", problem, "--out", sol, "--seed", "7"}, out, err);
    codes |= cli::run_cli({"certify", problem, sol, "--out", cert}, out, err);
    codes |= cli::run_cli({"compare", problem, "rapid", "buy_and_hold", "keep:0.9",
                           "random:3", "mix:0.5:4", "--solution", sol, "--out", csv},
                          out, err);
    for (const auto& [actual, file] :
         {std::pair{out.str(), name + ".summary.txt"},
          std::pair{slurp(csv), name + ".compare.csv"}}) {
      ++total;
      if (codes == 0 && actual == slurp(golden / file)) {
        ++matched;
      } else if (first_miss.empty()) {
        first_miss = file;
      }
    }
  }
  report(10, "CLI golden files", matched == total,
         fmt::format("{}/{} summary and CSV outputs byte-identical{}", matched, total,
                     first_miss.empty() ? "" : " (first mismatch: " + first_miss + ")"));
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  double pipeline_time = 0.0;
  const std::vector<Run> runs = pipeline_runs(pipeline_time);
  criterion_pipeline(runs, pipeline_time);
  criterion_kelly();
  criterion_normalization(runs);
  criterion_dominance(runs);
  criterion_supermartingale(runs);
  criterion_equivalences(runs);
  criterion_constants();
  criterion_homogeneity();
  criterion_axioms();
  criterion_golden();
  fmt::print("{} of 10 criteria passed in {:.1f} s\n", 10 - failures,
             seconds(start));
  return failures == 0 ? 0 : 1;
}
