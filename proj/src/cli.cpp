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

#include "vngale/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <optional>
#include <ostream>
#include <random>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "vngale/certification.hpp"
#include "vngale/io.hpp"
#include "vngale/objectives.hpp"
#include "vngale/solver.hpp"

namespace vng::cli {
namespace {

constexpr int kCompetitors = 200;
constexpr double kVerifyTol = 1e-6;

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto log = std::make_shared<spdlog::logger>("vngale", sink);
  log->set_pattern("[%l] %v");
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("VNG_LOG")) {
    const std::string v(env);
    if (v == "error") level = spdlog::level::err;
    else if (v == "warn") level = spdlog::level::warn;
    else if (v == "info") level = spdlog::level::info;
    else if (v == "debug") level = spdlog::level::debug;
  }
  log->set_level(level);
  return log;
}

double parse_double(std::string_view s, std::string_view spec) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kParseError,
                fmt::format("strategy '{}': bad number '{}'", spec, s));
  }
  return v;
}

std::uint64_t parse_seed(std::string_view s, std::string_view spec) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kParseError,
                fmt::format("strategy '{}': bad seed '{}'", spec, s));
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t next = s.find(':', pos);
    parts.push_back(s.substr(pos, next - pos));
    if (next == std::string_view::npos) return parts;
    pos = next + 1;
  }
}

Path scaled_hold(const MarketData& market, const Vector& x0, double keep) {
  const ScenarioTree& tree = market.tree();
  Path y{AdaptedVector::constant(tree, 0, x0)};
  for (int t = 1; t <= tree.horizon(); ++t) {
    AdaptedVector layer = AdaptedVector::zeros(tree, t, market.assets());
    for (NodeIndex n : tree.nodes_at(t)) {
      layer.at(tree, n) =
          keep * market.returns(n).cwiseProduct(y.back().at(tree, tree.parent(n)));
    }
    y.push_back(std::move(layer));
  }
  return y;
}

Path mix(const Path& a, const Path& b, double w) {
  Path out = a;
  for (std::size_t t = 0; t < out.size(); ++t) {
    for (std::size_t s = 0; s < out[t].size(); ++s) {
      out[t][s] = (1.0 - w) * a[t][s] + w * b[t][s];
    }
  }
  return out;
}

void require_feasible(const Path& y, const MarketData& market,
                      std::string_view spec) {
  const ScenarioTree& tree = market.tree();
  for (NodeIndex n = 1; n < tree.size(); ++n) {
    const int t = tree.depth(n);
    const auto z = in_Z(market, y[static_cast<std::size_t>(t) - 1].at(tree, tree.parent(n)),
                        y[static_cast<std::size_t>(t)].at(tree, n), n);
    if (!z.member) {
      throw Error(ErrorCode::kPreconditionViolated,
                  fmt::format("strategy '{}' leaves Z_{} at node {}", spec, t,
                              tree.id(n)));
    }
  }
}

std::string fmt_value(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.8g}", v);
}

std::filesystem::path default_out(const std::string& problem,
                                  std::string_view suffix) {
  std::filesystem::path p(problem);
  p.replace_extension();
  p += suffix;
  return p;
}

io::ProblemFile load(const std::string& problem, const std::string& objective,
                     spdlog::logger& log) {
  log.info("reading problem {}", problem);
  if (objective.empty()) return io::read_problem(problem);
  io::Json doc = io::read_json(problem);
  io::Json obj = io::read_json(objective);
  if (obj.is_object() && obj.contains("objective")) obj = obj["objective"];
  log.info("objective override from {}", objective);
  doc["objective"] = std::move(obj);
  return io::parse_problem(doc);
}

io::SolutionFile load_solution(const io::ProblemFile& file,
                               const std::string& path) {
  io::SolutionFile sol = io::solution_from_json(io::read_json(path),
                                                file.problem);
  io::ProblemFile as_solved = file;
  as_solved.options = sol.options;
  const std::string expected = io::digest(as_solved);
  if (expected != sol.digest) {
    throw Error(ErrorCode::kDigestMismatch,
                fmt::format("solution digest {} does not match problem digest {}",
                            sol.digest, expected));
  }
  return sol;
}

struct Flags {
  std::string problem;
  std::string solution;
  std::string objective;
  std::string out;
  std::vector<std::string> strategies;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<std::uint64_t> seed;
  double verify_tol = kVerifyTol;
  int competitors = kCompetitors;
};

int cmd_validate(const Flags& f, std::ostream& out, spdlog::logger& log) {
  const io::ProblemFile file = load(f.problem, f.objective, log);
  const MarketData& market = file.problem.market;
  const ScenarioTree& tree = market.tree();
  out << fmt::format("validate: horizon={} nodes={} assets={} objective={}\n",
                     tree.horizon(), tree.size(), market.assets(),
                     objective_kind_name(file.problem.objective.kind()));
  const MarketConstants c = market_constants(market);
  out << fmt::format("{:>3} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12} "
                     "{:>12} {:>12} {:>12} {:>12}\n",
                     "t", "return_lo", "return_hi", "sell_lo", "buy_hi", "nu",
                     "mu", "slack", "C1", "C2", "K", "H");
  for (int t = 0; t <= tree.horizon(); ++t) {
    const auto ts = static_cast<std::size_t>(t);
    const TimeBounds b = market.bounds(t);
    auto cell = [&](double v) { return t == 0 ? std::string("-") : fmt_value(v); };
    out << fmt::format("{:>3} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12} "
                       "{:>12} {:>12} {:>12} {:>12}\n",
                       t, fmt_value(b.return_lo), fmt_value(b.return_hi),
                       fmt_value(b.sell_lo), fmt_value(b.buy_hi),
                       fmt_value(c.nu[ts]), fmt_value(market.margin(t)),
                       fmt_value(market.margin(t) - c.nu[ts]),
                       fmt_value(c.c1[ts]), cell(c.c2[ts]), cell(c.k[ts]),
                       fmt_value(c.h[ts]));
  }
  const ProgramShape shape = assemble(file.problem);
  const SlaterPath slater = slater_path(market, c, file.problem.x0);
  double radius = shape.initial_radius;
  for (double r : slater.radius) radius = std::min(radius, r);
  double psi = std::numeric_limits<double>::infinity();
  for (std::size_t t = 1; t < slater.min_psi.size(); ++t) {
    psi = std::min(psi, slater.min_psi[t]);
  }
  const bool ok = radius > 0.0 && !(psi < 0.0);
  out << fmt::format("validate: slater={} radius={} min_psi={}\n",
                     ok ? "yes" : "no", fmt_value(radius), fmt_value(psi));
  out << fmt::format("validate: {}\n", ok ? "ok" : "failed");
  return ok ? kExitOk : kExitInput;
}

int cmd_solve(const Flags& f, std::ostream& out, spdlog::logger& log) {
  io::ProblemFile file = load(f.problem, f.objective, log);
  if (f.tol) file.options.tol = *f.tol;
  if (f.max_iter) file.options.max_iter = *f.max_iter;
  if (f.seed) file.options.seed = *f.seed;
  const Solution s = solve_log_optimal(file.problem, file.options);
  log.info("solve: {} outer iterations, gap {:.3g}, {:.3f}s",
           s.outer_iterations, s.duality_gap, s.wall_time);
  const io::SolutionFile sol{s, file.options, io::digest(file)};
  const auto path =
      f.out.empty() ? default_out(f.problem, ".solution.json") : std::filesystem::path(f.out);
  io::write_atomic(path, io::dump(io::solution_to_json(sol, file.problem.market.tree())));
  log.info("wrote {}", path.string());
  out << fmt::format("solve: F={:.10g} iterations={} converged={}\n",
                     s.objective, s.iterations, s.converged ? "true" : "false");
  if (!s.converged) {
    log.warn("solver did not converge; best iterate written to {}",
             path.string());
    return kExitNotConverged;
  }
  return kExitOk;
}

int cmd_certify(const Flags& f, std::ostream& out, spdlog::logger& log) {
  const auto start = std::chrono::steady_clock::now();
  const io::ProblemFile file = load(f.problem, f.objective, log);
  const io::SolutionFile sol = load_solution(file, f.solution);
  const MarketData& market = file.problem.market;
  const DualPath dual = extract_dual(sol.solution, file.problem);
  io::CertificateFile cert;
  cert.seed = f.seed.value_or(sol.options.seed);
  cert.certificate = io::verify_with_competitors(
      sol.solution.path, dual, market, f.verify_tol, f.competitors, cert.seed);
  cert.path = sol.solution.path;
  cert.dual = dual;
  cert.digest = sol.digest;
  cert.version = std::string(io::tool_version());
  cert.wall_time = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  const auto path = f.out.empty() ? default_out(f.problem, ".certificate.json")
                                  : std::filesystem::path(f.out);
  io::write_atomic(path, io::dump(io::certificate_to_json(cert, market.tree())));
  log.info("wrote {}", path.string());
  const RapidityCertificate& c = cert.certificate;
  if (c.certified) {
    out << fmt::format("certify: certified tol={:g} competitors={}\n", c.tol,
                       c.competitors);
    return kExitOk;
  }
  const Witness& w = *c.witness;
  out << fmt::format("certify: refuted check={} t={} node={} value={:.3g}\n",
                     w.check, w.t, w.node, w.value);
  return kExitRefuted;
}

int cmd_compare(const Flags& f, std::ostream& out, spdlog::logger& log) {
  const io::ProblemFile file = load(f.problem, f.objective, log);
  const PathProblem& problem = file.problem;
  const MarketData& market = problem.market;
  const ScenarioTree& tree = market.tree();
  Solution s;
  if (f.solution.empty()) {
    s = solve_log_optimal(problem, file.options);
    if (!s.converged) {
      throw Error(ErrorCode::kNonConvergence, "solver did not converge");
    }
  } else {
    s = load_solution(file, f.solution).solution;
  }
  const DualPath dual = extract_dual(s, problem);
  const RapidityCertificate cert = verify_rapid(s.path, dual, market, f.verify_tol);
  if (!cert.certified) {
    throw Error(ErrorCode::kNotCertified,
                fmt::format("rapid path refuted by the {} check",
                            cert.witness->check));
  }
  const MarketConstants constants = market_constants(market);

  std::string csv =
      "strategy_id,t,node_count,max_conditional_growth,mean_growth,F_value,"
      "excluded_nodes\n";
  for (const std::string& spec : f.strategies) {
    const Path y = strategy_path(spec, market, constants, s.path);
    const GrowthTable table = growth_dominance(dual, y, market, false);
    const double value = log_objective(tree, problem.objective,
                                       y[static_cast<std::size_t>(tree.horizon())]);
    for (int t = 1; t <= tree.horizon(); ++t) {
      const auto ts = static_cast<std::size_t>(t);
      const int valid = table.node_count[ts];
      const int excluded = static_cast<int>(tree.count_at(t)) - valid;
      if (excluded > 0) {
        log.warn("strategy {}: {} node(s) at t={} have a nonpositive "
                 "denominator",
                 spec, excluded, t);
      }
      csv += fmt::format("{},{},{},{},{},{},{}\n", spec, t, valid,
                         valid > 0 ? fmt_value(table.max_ratio[ts]) : "nan",
                         valid > 0 ? fmt_value(table.mean_ratio[ts]) : "nan",
                         fmt_value(value), excluded);
    }
  }
  if (f.out.empty()) {
    out << csv;
  } else {
    io::write_atomic(f.out, csv);
    log.info("wrote {}", f.out);
  }
  return kExitOk;
}

}  // namespace

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMarginTooTight:
      return kExitMarginTooTight;
    case ErrorCode::kNonConvergence:
    case ErrorCode::kNotCertified:
      return kExitNotConverged;
    case ErrorCode::kDigestMismatch:
      return kExitDigestMismatch;
    case ErrorCode::kLpFailure:
      return kExitLpFailure;
    default:
      return kExitInput;
  }
}

Path strategy_path(std::string_view spec, const MarketData& market,
                   const MarketConstants& constants, const Path& rapid) {
  const std::vector<std::string_view> parts = split(spec);
  const Vector& x0 = rapid.front()[0];
  const std::string_view kind = parts.front();
  auto arity = [&](std::size_t n) {
    if (parts.size() != n) {
      throw Error(ErrorCode::kParseError,
                  fmt::format("strategy '{}': expected {} field(s)", spec, n));
    }
  };
  Path y;
  if (kind == "rapid") {
    arity(1);
    return rapid;
  } else if (kind == "buy_and_hold") {
    arity(1);
    y = scaled_hold(market, x0, 1.0);
  } else if (kind == "keep") {
    arity(2);
    const double keep = parse_double(parts[1], spec);
    if (!(keep > 0.0 && keep <= 1.0)) {
      throw Error(ErrorCode::kParseError,
                  fmt::format("strategy '{}': fraction must be in (0, 1]", spec));
    }
    y = scaled_hold(market, x0, keep);
  } else if (kind == "random") {
    arity(2);
    std::mt19937_64 rng(parse_seed(parts[1], spec));
    return random_path(market, constants, x0, rng);
  } else if (kind == "mix") {
    arity(3);
    const double w = parse_double(parts[1], spec);
    if (!(w >= 0.0 && w <= 1.0)) {
      throw Error(ErrorCode::kParseError,
                  fmt::format("strategy '{}': weight must be in [0, 1]", spec));
    }
    std::mt19937_64 rng(parse_seed(parts[2], spec));
    return mix(rapid, random_path(market, constants, x0, rng), w);
  } else {
    throw Error(ErrorCode::kParseError,
                fmt::format("unknown strategy '{}'", spec));
  }
  require_feasible(y, market, spec);
  return y;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  auto log = make_logger(err);
  CLI::App app{"Rapid paths of von Neumann-Gale systems: solve and certify",
               "vngale"};
  app.set_version_flag("--version", std::string(io::tool_version()));
  app.require_subcommand(1);
  Flags f;

  auto* validate = app.add_subcommand("validate", "check a problem file");
  validate->add_option("problem", f.problem, "problem file")->required();
  validate->add_option("--objective", f.objective, "objective override file");

  auto* solve = app.add_subcommand("solve", "compute the log-optimal path");
  solve->add_option("problem", f.problem, "problem file")->required();
  solve->add_option("--out", f.out, "solution file");
  solve->add_option("--tol", f.tol, "duality gap tolerance")
      ->check(CLI::PositiveNumber);
  solve->add_option("--max-iter", f.max_iter, "Newton step budget")
      ->check(CLI::PositiveNumber);
  solve->add_option("--seed", f.seed, "seed recorded with the solution");
  solve->add_option("--objective", f.objective, "objective override file");

  auto* certify = app.add_subcommand("certify", "verify rapidity of a solution");
  certify->add_option("problem", f.problem, "problem file")->required();
  certify->add_option("solution", f.solution, "solution file")->required();
  certify->add_option("--out", f.out, "certificate file");
  certify->add_option("--verify-tol", f.verify_tol, "residual tolerance")
      ->check(CLI::PositiveNumber);
  certify->add_option("--seed", f.seed, "competitor sampling seed");
  certify->add_option("--competitors", f.competitors, "competitor paths")
      ->check(CLI::NonNegativeNumber);
  certify->add_option("--objective", f.objective, "objective override file");

  auto* compare = app.add_subcommand("compare", "growth tables of strategies");
  compare->add_option("problem", f.problem, "problem file")->required();
  compare->add_option("strategies", f.strategies,
                      "rapid | buy_and_hold | keep:F | random:SEED | "
                      "mix:W:SEED");
  compare->add_option("--solution", f.solution, "reuse a solution file");
  compare->add_option("--out", f.out, "CSV file (default stdout)");
  compare->add_option("--verify-tol", f.verify_tol, "residual tolerance")
      ->check(CLI::PositiveNumber);
  compare->add_option("--objective", f.objective, "objective override file");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (validate->parsed()) return cmd_validate(f, out, *log);
    if (solve->parsed()) return cmd_solve(f, out, *log);
    if (certify->parsed()) return cmd_certify(f, out, *log);
    return cmd_compare(f, out, *log);
  } catch (const Error& e) {
    log->error("{}", e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kExitInput;
  }
}

}  // namespace vng::cli
