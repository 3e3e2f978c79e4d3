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

#ifndef VNGALE_IO_HPP_
#define VNGALE_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "vngale/certification.hpp"
#include "vngale/solver.hpp"

namespace vng::io {

using Json = nlohmann::json;

inline constexpr std::string_view kProblemSchema = "vngale.problem/1";
inline constexpr std::string_view kSolutionSchema = "vngale.solution/1";
inline constexpr std::string_view kCertificateSchema = "vngale.certificate/1";

std::string_view tool_version();

struct ProblemFile {
  PathProblem problem;
  SolverOptions options;
};

// Failures of the document shape throw ParseError naming the node id and
// field; semantic failures keep their codes (InvalidMarket, ...).
ProblemFile parse_problem(const Json& doc);
ProblemFile read_problem(const std::filesystem::path& file);
TerminalObjective parse_objective(const Json& objective,
                                  const MarketData& market);

// Canonical document: returns (never prices), explicit costs, per-leaf
// objective data.
Json problem_to_json(const ProblemFile& file);
Json objective_to_json(const TerminalObjective& objective,
                       const ScenarioTree& tree);
Json options_to_json(const SolverOptions& options);
SolverOptions options_from_json(const Json& doc, SolverOptions base = {});

std::string sha256_hex(std::string_view bytes);
// Hash of the canonical problem and the solver options.
std::string digest(const ProblemFile& file);

struct SolutionFile {
  Solution solution;
  SolverOptions options;
  std::string digest;
};

Json solution_to_json(const SolutionFile& file, const ScenarioTree& tree);
// The merit and centering traces are not stored.
SolutionFile solution_from_json(const Json& doc, const PathProblem& problem);

struct CertificateFile {
  RapidityCertificate certificate;
  Path path;
  DualPath dual;
  std::string digest;
  std::uint64_t seed = 0;  // competitor sampling
  std::string version;
  double wall_time = 0.0;
};

Json certificate_to_json(const CertificateFile& file, const ScenarioTree& tree);
CertificateFile certificate_from_json(const Json& doc,
                                      const MarketData& market);

// Samples `count` competitors with `seed` and runs verify_rapid.
RapidityCertificate verify_with_competitors(const Path& path,
                                            const DualPath& dual,
                                            const MarketData& market,
                                            double tol, int count,
                                            std::uint64_t seed);
// Runs the verification stored in a certificate again.
RapidityCertificate reverify(const CertificateFile& file,
                             const MarketData& market);

Json read_json(const std::filesystem::path& file);
// Writes a sibling temporary file and renames it over the target.
void write_atomic(const std::filesystem::path& file, std::string_view text);
// Two-space indent, trailing newline.
std::string dump(const Json& doc);

}  // namespace vng::io

#endif  // VNGALE_IO_HPP_
