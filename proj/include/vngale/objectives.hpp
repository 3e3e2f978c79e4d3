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

#ifndef VNGALE_OBJECTIVES_HPP_
#define VNGALE_OBJECTIVES_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vngale/market.hpp"

namespace vng {

enum class ObjectiveKind { kLinear, kLiquidation, kNormPenalized };
enum class PenaltyNorm { kL1, kL2 };

std::string_view objective_kind_name(ObjectiveKind kind);
ObjectiveKind parse_objective_kind(std::string_view name);
std::string_view penalty_norm_name(PenaltyNorm norm);
PenaltyNorm parse_penalty_norm(std::string_view name);

// Terminal valuation psi_N on each leaf. Leaf data is stored by leaf slot.
//   LINEAR          psi(a) = q a
//   LIQUIDATION     psi(a) = sum (1 - lambda^+) a^+ - sum (1 + lambda^-) a^-
//   NORM_PENALIZED  psi(a) = q a - theta |a|_norm
class TerminalObjective {
 public:
  // `q` holds either one vector for every leaf or one per leaf. Throws
  // InvalidObjective unless q lies in the interior of X_N^* at every leaf.
  static TerminalObjective linear(const MarketData& market,
                                  std::vector<Vector> q);
  // Needs the market constants for H_psi.
  static TerminalObjective liquidation(const MarketData& market,
                                       const MarketConstants& constants);
  // Enforces 0 <= theta <= (1 - delta) / (H_q Hhat) per leaf.
  static TerminalObjective norm_penalized(const MarketData& market,
                                          std::vector<Vector> q,
                                          std::vector<double> theta,
                                          PenaltyNorm norm, double delta);
  // Same without the theta bound; H_psi is still the one the bound would
  // guarantee, so a violating theta shows up in check_psi_class.
  static TerminalObjective norm_penalized_unchecked(
      const MarketData& market, std::vector<Vector> q,
      std::vector<double> theta, PenaltyNorm norm, double delta);

  ObjectiveKind kind() const { return kind_; }
  PenaltyNorm norm() const { return norm_; }
  double delta() const { return delta_; }
  std::size_t leaves() const { return bound_.size(); }
  const Vector& q(std::size_t slot) const { return q_[slot]; }
  double theta(std::size_t slot) const { return theta_[slot]; }
  const Vector& sell_factor(std::size_t slot) const { return sell_[slot]; }
  const Vector& buy_factor(std::size_t slot) const { return buy_[slot]; }
  // H_psi of the two-sided bound H^-1 |a| <= psi(a) <= H |a|.
  double bound(std::size_t slot) const { return bound_[slot]; }
  // Largest theta admitted by the penalized construction (0 otherwise).
  double theta_limit(std::size_t slot) const { return theta_limit_[slot]; }

  // Raw evaluation without membership checks.
  double value(std::size_t slot, const Vector& a) const;
  // Supergradient with sign(0) = +.
  Vector gradient(std::size_t slot, const Vector& a) const;

 private:
  TerminalObjective() = default;
  static TerminalObjective penalized(const MarketData& market,
                                     std::vector<Vector> q,
                                     std::vector<double> theta,
                                     PenaltyNorm norm, double delta,
                                     bool enforce);

  ObjectiveKind kind_ = ObjectiveKind::kLinear;
  PenaltyNorm norm_ = PenaltyNorm::kL1;
  double delta_ = 1.0;
  std::vector<Vector> q_;
  std::vector<double> theta_;
  std::vector<Vector> sell_;
  std::vector<Vector> buy_;
  std::vector<double> bound_;
  std::vector<double> theta_limit_;
};

// psi_N(leaf, a); NotInCone if a fails the leaf margin test, NegativeValue if
// the value is negative.
double evaluate(const MarketData& market, const TerminalObjective& objective,
                NodeIndex leaf, const Vector& a);

// Supergradient g with g a = psi(a). NotInCone / ZeroValue on bad input.
Vector gradient(const MarketData& market, const TerminalObjective& objective,
                NodeIndex leaf, const Vector& a);

// E ln psi_N(x_N); -inf if some leaf value is <= 0.
double log_objective(const ScenarioTree& tree,
                     const TerminalObjective& objective,
                     const AdaptedVector& terminal);

// min { q a : a in X_N(leaf), |a| = 1 } via LP.
double dual_interior_margin(const MarketData& market, const Vector& q,
                            NodeIndex leaf);

struct AxiomCount {
  int checked = 0;
  int violations = 0;
  double worst = 0.0;  // largest violation, relative to the sample scale
};

struct PsiClassReport {
  AxiomCount superadditivity;
  AxiomCount homogeneity;
  AxiomCount lower_bound;      // H^-1 |a| <= psi(a)
  AxiomCount upper_bound;      // psi(a) <= H |a|
  AxiomCount monotonicity;     // a' - a in X_N => psi(a) <= psi(a')
  AxiomCount concavity;
  AxiomCount euler;            // g(a) a = psi(a)
  // Continuity is automatic on a finite probability space.
  std::string continuity_note;
  bool passed() const;
};

// Sampled verification of the class axioms, plus the extreme rays of every
// leaf cone for the two-sided bound.
PsiClassReport check_psi_class(const TerminalObjective& objective,
                               const MarketData& market, int samples,
                               std::uint64_t seed, double tol = 1e-9);

}  // namespace vng

#endif  // VNGALE_OBJECTIVES_HPP_
