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

#ifndef VNGALE_CLI_HPP_
#define VNGALE_CLI_HPP_

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "vngale/error.hpp"
#include "vngale/market.hpp"

namespace vng::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRefuted = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitMarginTooTight = 3;
inline constexpr int kExitNotConverged = 4;
inline constexpr int kExitDigestMismatch = 5;
inline constexpr int kExitLpFailure = 6;

int exit_code(ErrorCode code);

// Competitor strategy for `compare`: rapid, buy_and_hold, keep:<f>,
// random:<seed>, mix:<w>:<seed>. Throws ParseError on a malformed spec and
// PreconditionViolated when the strategy leaves the transition cones.
Path strategy_path(std::string_view spec, const MarketData& market,
                   const MarketConstants& constants, const Path& rapid);

// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace vng::cli

#endif  // VNGALE_CLI_HPP_
