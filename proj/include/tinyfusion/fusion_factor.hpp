// Copyright 2026 The tinyfusion Authors.
//
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

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tinyfusion/assignment.hpp"

namespace tinyfusion {

// Fusion factors for the three top-down merges of a P2..P6 pyramid, ordered
// shallow to deep: alpha[0] weights P3 into P2, alpha[1] P4 into P3 and
// alpha[2] P5 into P4. P6 is a subsample of P5 and has no factor of its own.
struct FusionFactors {
  std::array<double, 3> alpha{1.0, 1.0, 1.0};
  std::array<bool, 3> fallback{false, false, false};

  static FusionFactors uniform(double a) { return {{a, a, a}, {false, false, false}}; }

  double alpha_2_3() const { return alpha[0]; }
  double alpha_3_4() const { return alpha[1]; }
  double alpha_4_5() const { return alpha[2]; }

  friend bool operator==(const FusionFactors&, const FusionFactors&) = default;
};

// Statistic fusion factors from per-level object counts [N2, N3, N4, N5, N6]:
//   a23 = N3 / N2,  a34 = N4 / N3,  a45 = (N5 + N6) / N4.
// The deepest factor folds P6 into P5 because P6 is not fused separately. A
// zero denominator yields 1.0 with the matching fallback flag set.
// Throws DomainError unless exactly five non-negative counts are given.
FusionFactors compute_factors(std::span<const std::int64_t> counts);
FusionFactors compute_factors(const LevelCounts& c);

// Uniform alpha values for a brute-force sweep.
struct SweepPlan {
  std::vector<double> values;
};

inline constexpr double kMaxSweepAlpha = 1.1;

// min, min+step, ... up to max inclusive (1e-9 slack). Each value is rounded
// to 12 decimals so that 0.1 * 3 prints as 0.3. Throws ConfigError unless
// 0 <= min <= max <= 1.1 and step > 0.
SweepPlan sweep_plan(double min, double max, double step);

// Short decimal text for an alpha value, used in sweep file names:
// 0 -> "0.0", 0.3 -> "0.3", 0.05 -> "0.05".
std::string format_alpha(double value);

// {"alpha":[a23,a34,a45],"fallback":[b,b,b],"counts":[n2,...,n6]}
std::string alpha_json(const FusionFactors& f, std::span<const std::int64_t> counts);

}  // namespace tinyfusion
