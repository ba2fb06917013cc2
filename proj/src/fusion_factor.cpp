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

#include "tinyfusion/fusion_factor.hpp"

#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "tinyfusion/errors.hpp"

namespace tinyfusion {

namespace {

void ratio(std::int64_t num, std::int64_t den, double& alpha, bool& fallback) {
  if (den == 0) {
    alpha = 1.0;
    fallback = true;
  } else {
    alpha = static_cast<double>(num) / static_cast<double>(den);
    fallback = false;
  }
}

}  // namespace

FusionFactors compute_factors(std::span<const std::int64_t> counts) {
  if (counts.size() != 5) {
    throw DomainError("compute_factors: expected counts for five levels (P2..P6), got " +
                      std::to_string(counts.size()));
  }
  for (std::int64_t n : counts) {
    if (n < 0) throw DomainError("compute_factors: counts must be non-negative");
  }
  FusionFactors f;
  ratio(counts[1], counts[0], f.alpha[0], f.fallback[0]);
  ratio(counts[2], counts[1], f.alpha[1], f.fallback[1]);
  ratio(counts[3] + counts[4], counts[2], f.alpha[2], f.fallback[2]);
  return f;
}

FusionFactors compute_factors(const LevelCounts& c) { return compute_factors(c.counts); }

SweepPlan sweep_plan(double min, double max, double step) {
  if (!std::isfinite(min) || !std::isfinite(max) || !std::isfinite(step)) {
    throw ConfigError("sweep: bounds and step must be finite");
  }
  if (min < 0.0 || min > max || max > kMaxSweepAlpha + 1e-9) {
    throw ConfigError("sweep: require 0 <= min <= max <= 1.1");
  }
  if (step <= 0.0) throw ConfigError("sweep: step must be positive");

  const auto n = static_cast<long long>(std::floor((max - min) / step + 1e-9)) + 1;
  SweepPlan plan;
  plan.values.reserve(static_cast<std::size_t>(n));
  for (long long k = 0; k < n; ++k) {
    const double v = min + static_cast<double>(k) * step;
    plan.values.push_back(std::round(v * 1e12) / 1e12);
  }
  return plan;
}

std::string format_alpha(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  std::string s(buf);
  while (s.size() > 1 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
  return s;
}

std::string alpha_json(const FusionFactors& f, std::span<const std::int64_t> counts) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["alpha"] = f.alpha;
  j["fallback"] = f.fallback;
  j["counts"] = std::vector<std::int64_t>(counts.begin(), counts.end());
  return j.dump();
}

}  // namespace tinyfusion
