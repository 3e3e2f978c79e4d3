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

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "vngale/instances.hpp"
#include "vngale/io.hpp"

namespace vng {
namespace {

namespace fs = std::filesystem;
using io::Json;

const fs::path kFixtures = VNGALE_FIXTURES;
constexpr double kKellyF = 0.010309643601366283;

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Outcome r;
  r.code = cli::run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("vngale_cli_" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const Json& doc) const {
    io::write_atomic(dir_ / name, io::dump(doc));
    return path(name);
  }
  static std::string fixture(const std::string& name) {
    return (kFixtures / (name + ".json")).string();
  }

  fs::path dir_;
};

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  return out;
}

TEST(ExitCodes, MappingIsDisjoint) {
  EXPECT_EQ(cli::exit_code(ErrorCode::kParseError), 2);
  EXPECT_EQ(cli::exit_code(ErrorCode::kInfeasibleStart), 2);
  EXPECT_EQ(cli::exit_code(ErrorCode::kInvalidMarket), 2);
  EXPECT_EQ(cli::exit_code(ErrorCode::kInvalidObjective), 2);
  EXPECT_EQ(cli::exit_code(ErrorCode::kMarginTooTight), 3);
  EXPECT_EQ(cli::exit_code(ErrorCode::kNonConvergence), 4);
  EXPECT_EQ(cli::exit_code(ErrorCode::kNotCertified), 4);
  EXPECT_EQ(cli::exit_code(ErrorCode::kDigestMismatch), 5);
  EXPECT_EQ(cli::exit_code(ErrorCode::kLpFailure), 6);
  std::set<int> seen;
  for (int c = 0; c <= static_cast<int>(ErrorCode::kDigestMismatch); ++c) {
    const int code = cli::exit_code(static_cast<ErrorCode>(c));
    EXPECT_GE(code, 2);
    EXPECT_LE(code, 6);
    seen.insert(code);
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"solve"}).code, 2);
  EXPECT_EQ(run({"solve", fixture("kelly"), "--tol", "-1"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(Cli, ValidateKelly) {
  const Outcome r = run({"validate", fixture("kelly")});
  EXPECT_EQ(r.code, 0) << r.err;
  const auto out = lines(r.out);
  ASSERT_EQ(out.size(), 7u);
  EXPECT_EQ(out.back(), "validate: ok");
  EXPECT_NE(out[1].find("nu"), std::string::npos);
  EXPECT_NE(out[1].find("H"), std::string::npos);
}

TEST_F(Cli, ValidateRejectsMargins) {
  Json doc = io::read_json(fixture("kelly"));
  doc["market"]["margins"] = 1.0;
  Outcome r = run({"validate", write("mu1.json", doc)});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("InvalidMarket"), std::string::npos);

  // nu_1 = 2 for this market: 1 < mu < nu is too tight.
  doc["market"]["margins"] = 1.5;
  r = run({"validate", write("tight.json", doc)});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("t=1"), std::string::npos) << r.err;

  doc = io::read_json(fixture("kelly"));
  doc["x0"] = {2.0, -1.9};
  r = run({"validate", write("start.json", doc)});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("InfeasibleStart"), std::string::npos) << r.err;

  doc = io::read_json(fixture("kelly"));
  doc["tree"]["nodes"][1].erase("parent");
  r = run({"validate", write("forest.json", doc)});
  EXPECT_EQ(r.code, 2);
}

double summary_value(const std::string& line) {
  const auto at = line.find("F=");
  return std::stod(line.substr(at + 2));
}

TEST_F(Cli, SolveKellyMatchesOracle) {
  const Outcome r = run({"solve", fixture("kelly"), "--out", path("sol.json")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(summary_value(r.out), kKellyF, 1e-6);
  const Json sol = io::read_json(path("sol.json"));
  EXPECT_EQ(sol["schema"], "vngale.solution/1");
  EXPECT_TRUE(sol["converged"].get<bool>());
  const auto& root = sol["nodes"][1]["x"];
  const double frac = root[1].get<double>() / (root[0].get<double>() + root[1].get<double>());
  EXPECT_NEAR(frac, kKellyFraction, 1e-4);
}

TEST_F(Cli, SolveChainClosedForm) {
  const Outcome r = run({"solve", fixture("chain"), "--out", path("sol.json")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(summary_value(r.out), std::log(2.05) + 2.0 * std::log(1.1), 1e-6);
}

TEST_F(Cli, TolFlagTightensTheReport) {
  ASSERT_EQ(run({"solve", fixture("random"), "--out", path("a.json")}).code, 0);
  ASSERT_EQ(run({"solve", fixture("random"), "--out", path("b.json"), "--tol",
                 "1e-10"})
                .code,
            0);
  const Json a = io::read_json(path("a.json"));
  const Json b = io::read_json(path("b.json"));
  EXPECT_EQ(b["options"]["tol"].get<double>(), 1e-10);
  EXPECT_LT(b["duality_gap"].get<double>(), a["duality_gap"].get<double>());
  EXPECT_LE(b["duality_gap"].get<double>(), 1e-10);
}

TEST_F(Cli, NonConvergenceWritesTheIterate) {
  const Outcome r = run({"solve", fixture("random"), "--out", path("sol.json"),
                     "--max-iter", "3"});
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.out.find("converged=false"), std::string::npos);
  const Json sol = io::read_json(path("sol.json"));
  EXPECT_FALSE(sol["converged"].get<bool>());
  EXPECT_EQ(run({"certify", fixture("random"), path("sol.json"), "--out",
                 path("cert.json")})
                .code,
            4);
}

TEST_F(Cli, SolveThenCertify) {
  for (const std::string name : {"kelly", "chain", "random"}) {
    ASSERT_EQ(run({"solve", fixture(name), "--out", path(name + ".sol")}).code, 0);
    const Outcome r = run({"certify", fixture(name), path(name + ".sol"), "--out",
                       path(name + ".cert")});
    EXPECT_EQ(r.code, 0) << name << r.err;
    EXPECT_EQ(lines(r.out).front(), "certify: certified tol=1e-06 competitors=200");

    const io::ProblemFile file = io::read_problem(fixture(name));
    const MarketData& md = file.problem.market;
    const io::CertificateFile cert =
        io::certificate_from_json(io::read_json(path(name + ".cert")), md);
    const RapidityCertificate again = io::reverify(cert, md);
    EXPECT_TRUE(again.certified);
    EXPECT_NEAR(again.max_normalization, cert.certificate.max_normalization, 1e-12);
    EXPECT_NEAR(again.max_transition, cert.certificate.max_transition, 1e-12);
    EXPECT_NEAR(again.supermartingale, cert.certificate.supermartingale, 1e-12);
  }
}

TEST_F(Cli, TamperedSolutionIsRefuted) {
  ASSERT_EQ(run({"solve", fixture("kelly"), "--out", path("sol.json")}).code, 0);
  Json sol = io::read_json(path("sol.json"));
  auto& x = sol["nodes"][2]["x"];
  x[1] = x[1].get<double>() * 1.01;
  const Outcome r = run({"certify", fixture("kelly"), write("tampered.json", sol),
                     "--out", path("cert.json")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("certify: refuted"), std::string::npos) << r.out;
  const Json cert = io::read_json(path("cert.json"));
  EXPECT_EQ(cert["verdict"], "refuted");
  EXPECT_FALSE(cert["witness"].is_null());
}

TEST_F(Cli, DigestMismatch) {
  ASSERT_EQ(run({"solve", fixture("kelly"), "--out", path("sol.json")}).code, 0);
  Json doc = io::read_json(fixture("kelly"));
  doc["market"]["nodes"][2]["prices"][1] = 1.41;
  const Outcome r = run({"certify", write("other.json", doc), path("sol.json"),
                     "--out", path("cert.json")});
  EXPECT_EQ(r.code, 5);
  EXPECT_FALSE(fs::exists(path("cert.json")));
}

TEST_F(Cli, ObjectiveOverride) {
  const std::string obj = write(
      "obj.json", Json{{"objective", {{"kind", "linear"}, {"q", {1.0, 1.0}}}}});
  const Outcome plain = run({"solve", fixture("kelly"), "--out", path("a.json")});
  const Outcome lin = run({"solve", fixture("kelly"), "--out", path("b.json"),
                       "--objective", obj});
  ASSERT_EQ(lin.code, 0) << lin.err;
  // Frictionless: the linear and liquidation values coincide on long books.
  EXPECT_NEAR(summary_value(lin.out), summary_value(plain.out), 1e-6);
  EXPECT_EQ(run({"certify", fixture("kelly"), path("b.json"), "--out",
                 path("c.json")})
                .code,
            5);
  EXPECT_EQ(run({"certify", fixture("kelly"), path("b.json"), "--out",
                 path("c.json"), "--objective", obj})
                .code,
            0);
}

TEST_F(Cli, CompareRapidAndBuyAndHold) {
  ASSERT_EQ(run({"solve", fixture("kelly"), "--out", path("sol.json")}).code, 0);
  const Outcome r = run({"compare", fixture("kelly"), "rapid", "buy_and_hold",
                     "--solution", path("sol.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto out = lines(r.out);
  ASSERT_EQ(out.size(), 5u);
  EXPECT_EQ(out[0],
            "strategy_id,t,node_count,max_conditional_growth,mean_growth,"
            "F_value,excluded_nodes");
  for (std::size_t k = 1; k < out.size(); ++k) {
    const auto f = fields(out[k]);
    ASSERT_EQ(f.size(), 7u);
    if (f[0] == "rapid") {
      EXPECT_EQ(f[3], "1");
      EXPECT_EQ(f[4], "1");
    } else {
      EXPECT_LE(std::stod(f[3]), 1.0 + 1e-8);
    }
  }
}

TEST_F(Cli, CompareEmptyListIsHeaderOnly) {
  const Outcome r = run({"compare", fixture("kelly"), "--out", path("x.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(path("x.csv"));
  std::stringstream text;
  text << in.rdbuf();
  EXPECT_EQ(text.str(),
            "strategy_id,t,node_count,max_conditional_growth,mean_growth,"
            "F_value,excluded_nodes\n");
}

TEST_F(Cli, CompareRejectsBadStrategies) {
  EXPECT_EQ(run({"compare", fixture("kelly"), "sideways"}).code, 2);
  EXPECT_EQ(run({"compare", fixture("kelly"), "keep:1.5"}).code, 2);
  EXPECT_EQ(run({"compare", fixture("kelly"), "mix:0.5"}).code, 2);
  EXPECT_EQ(run({"compare", fixture("kelly"), "random:abc"}).code, 2);
}

TEST(Strategy, PathsAreFeasible) {
  const PathProblem p = random_problem(6);
  const MarketData& md = p.market;
  const MarketConstants c = market_constants(md);
  const Solution s = solve_log_optimal(p);
  const ScenarioTree& tree = md.tree();
  for (const std::string spec : {"rapid", "keep:1", "random:5", "mix:0.3:2"}) {
    const Path y = cli::strategy_path(spec, md, c, s.path);
    EXPECT_EQ(y.front()[0], p.x0);
    for (NodeIndex n = 1; n < tree.size(); ++n) {
      const int t = tree.depth(n);
      EXPECT_TRUE(in_Z(md, y[static_cast<std::size_t>(t) - 1].at(tree, tree.parent(n)),
                       y[static_cast<std::size_t>(t)].at(tree, n), n, 1e-9)
                      .member)
          << spec << " " << tree.id(n);
    }
  }
  // Same seed, same path.
  const Path a = cli::strategy_path("random:9", md, c, s.path);
  const Path b = cli::strategy_path("random:9", md, c, s.path);
  EXPECT_EQ(a.back()[0], b.back()[0]);
}

}  // namespace
}  // namespace vng
