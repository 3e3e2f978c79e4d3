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

#include "vngale/error.hpp"

namespace vng {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kCycleOrForest: return "CycleOrForest";
    case ErrorCode::kBadProbability: return "BadProbability";
    case ErrorCode::kRaggedDepth: return "RaggedDepth";
    case ErrorCode::kUnknownNode: return "UnknownNode";
    case ErrorCode::kDepthMismatch: return "DepthMismatch";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonpositivePrice: return "NonpositivePrice";
    case ErrorCode::kInvalidMarket: return "InvalidMarket";
    case ErrorCode::kInvalidObjective: return "InvalidObjective";
    case ErrorCode::kMarginTooTight: return "MarginTooTight";
    case ErrorCode::kNotInCone: return "NotInCone";
    case ErrorCode::kPreconditionViolated: return "PreconditionViolated";
    case ErrorCode::kLpFailure: return "LPFailure";
    case ErrorCode::kNegativeValue: return "NegativeValue";
    case ErrorCode::kZeroValue: return "ZeroValue";
    case ErrorCode::kInfeasibleStart: return "InfeasibleStart";
    case ErrorCode::kNonConvergence: return "NonConvergence";
    case ErrorCode::kNotCertified: return "NotCertified";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonpositiveDenominator: return "NonpositiveDenominator";
    case ErrorCode::kZeroDenominator: return "ZeroDenominator";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDigestMismatch: return "DigestMismatch";
  }
  return "Unknown";
}

}  // namespace vng
