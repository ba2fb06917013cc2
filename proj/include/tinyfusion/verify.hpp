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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tinyfusion/micro_fpn.hpp"

namespace tinyfusion {

struct CheckRecord {
  std::string name;
  bool passed = false;
  double measured = 0.0;   // worst error seen
  double tolerance = 0.0;  // pass iff measured <= tolerance
  std::uint64_t seed = 0;  // first instance seed
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckRecord> checks;

  bool passed() const;
};

using ForwardFn = std::function<fpn::PyramidOutputs(const fpn::Inputs&, const fpn::FpnParams&,
                                                    const FusionFactors&)>;

struct VerifyOptions {
  std::uint64_t seed = 20210101;
  int instances = 25;     // per algebraic check
  int fd_instances = 3;   // finite differences are the slow part
  double fd_step = 1e-5;
  // Swappable so a deliberately broken forward can be shown to fail.
  ForwardFn forward = [](const fpn::Inputs& c, const fpn::FpnParams& p, const FusionFactors& a) {
    return fpn::forward(c, p, a);
  };
};

// Runs every micro-FPN invariant check on seeded random instances.
VerifyReport run_verification(const VerifyOptions& opts = {});

// Individual checks, exposed for tests.
CheckRecord check_reparameterization(const VerifyOptions& opts, double sigma);
CheckRecord check_forward_linearity(const VerifyOptions& opts);
CheckRecord check_alpha_zero_decoupling(const VerifyOptions& opts);
CheckRecord check_finite_differences(const VerifyOptions& opts);
CheckRecord check_shallow_alpha_linearity(const VerifyOptions& opts);
CheckRecord check_deep_alpha_independence(const VerifyOptions& opts);
CheckRecord check_decomposition_sum(const VerifyOptions& opts);
CheckRecord check_determinism(const VerifyOptions& opts);

// max |a - b| / max |b| over the whole map; 0 when both are zero.
double relative_max_error(const fpn::FeatureMap& a, const fpn::FeatureMap& b);

// Count of entries whose bit patterns differ.
std::size_t bitwise_mismatches(const fpn::FeatureMap& a, const fpn::FeatureMap& b);

// Central-difference estimate of dL/dC and dL/dW, built from the forward pass
// only. The loss difference is expanded as
//   0.5 * sum (P+ - P-) * (P+ + P- - 2T)
// so it is not lost to cancellation against the full loss value.
fpn::Gradients finite_difference_gradients(const ForwardFn& forward, const fpn::Inputs& inputs,
                                           const fpn::FpnParams& params, const FusionFactors& alphas,
                                           const fpn::LossSpec& loss, double step);

// Worst entrywise |a - b| / max(|a|, |b|, floor) across inputs and weights.
double gradient_relative_error(const fpn::Gradients& analytic, const fpn::Gradients& numeric,
                               double floor = 1e-6);

}  // namespace tinyfusion
