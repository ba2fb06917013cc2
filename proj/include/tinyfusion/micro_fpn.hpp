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
#include <vector>

#include "tinyfusion/fusion_factor.hpp"

namespace tinyfusion::fpn {

// Dense channels x height x width tensor, row-major within each channel.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, 0.0) {}

  double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  std::size_t size() const { return data.size(); }
  bool same_shape(const FeatureMap& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

inline constexpr int kFusedLevels = 4;   // P2..P5 (C2..C5)
inline constexpr int kOutputLevels = 5;  // P2..P6

// Weights of one pyramid level. No biases: every op is linear.
struct LevelParams {
  int in_channels = 0;
  int out_channels = 0;
  std::vector<double> inner;  // 1x1 lateral projection, [out][in]
  std::vector<double> layer;  // 3x3 output conv, [out][out][3][3]

  friend bool operator==(const LevelParams&, const LevelParams&) = default;
};

// levels[k] belongs to pyramid level k + 2.
struct FpnParams {
  std::array<LevelParams, kFusedLevels> levels;

  friend bool operator==(const FpnParams&, const FpnParams&) = default;
};

using Inputs = std::array<FeatureMap, kFusedLevels>;  // C2..C5

struct PyramidOutputs {
  std::array<FeatureMap, kOutputLevels> outputs;  // P2..P6
  std::array<FeatureMap, kFusedLevels> fused;     // P'2..P'5, before the 3x3 conv
};

// Forward pass of a linear FPN:
//   P'5 = inner5(C5)
//   P'i = inner_i(C_i) + alpha_i * up2(P'_{i+1})    i = 4, 3, 2
//   P_i = layer_i(P'_i)                             3x3, stride 1, zero pad 1
//   P6  = P5 sampled at even rows and columns
// up2 is 2x nearest-neighbour. Throws ShapeError naming the offending level
// when C_i does not halve exactly from level to level or channels mismatch.
PyramidOutputs forward(const Inputs& inputs, const FpnParams& params, const FusionFactors& alphas);

// inner_i *= sigma^(i-2), layer_i /= sigma^(i-2). Throws DomainError for
// sigma <= 0.
FpnParams reparameterize(const FpnParams& params, double sigma);

// Per-level quadratic loss 0.5 * ||P_l - target_l||^2, summed over the
// included levels. Index k belongs to P(k+2).
struct LossSpec {
  std::array<bool, kOutputLevels> include{true, true, true, true, true};
  std::array<FeatureMap, kOutputLevels> targets;
};

struct Gradients {
  double loss = 0.0;
  Inputs inputs;     // dL/dC2..dL/dC5
  FpnParams params;  // dL/dW, same layout as the weights
};

// Reverse-mode gradients of the loss. Returns the raw gradient; applying a
// learning rate is left to the caller.
Gradients backward(const Inputs& inputs, const FpnParams& params, const FusionFactors& alphas,
                   const LossSpec& loss);

double loss_value(const PyramidOutputs& out, const LossSpec& loss);

// dL/dP2..dL/dP6: the residual P - target on included levels, zero elsewhere.
using Cotangents = std::array<FeatureMap, kOutputLevels>;
Cotangents loss_cotangents(const PyramidOutputs& out, const LossSpec& loss);

// Pulls fixed output cotangents back through the network (a vector-Jacobian
// product). The network is linear, so the input part depends only on the
// weights and alphas. `loss` is left at 0.
Gradients pullback(const Inputs& inputs, const FpnParams& params, const FusionFactors& alphas,
                   const Cotangents& cotangents);

// Gradient wrt C_k split by where the loss comes from: `deep` collects the
// losses at P_k and above (P6 included), `shallow` the losses below P_k. For
// C4 these are the two bracketed terms of the backbone update, and `shallow`
// carries the alpha_3_4 factor.
//
// The LossSpec overload evaluates the residuals at the given alphas, so its
// shallow part also moves with alpha through the forward pass. The Cotangents
// overload holds dL/dP fixed; there the shallow part of C4 is exactly
// alpha_3_4 times an alpha_3_4-free term.
struct GradientSplit {
  FeatureMap deep;
  FeatureMap shallow;
};

std::array<GradientSplit, kFusedLevels> gradient_decomposition(const Inputs& inputs,
                                                               const FpnParams& params,
                                                               const FusionFactors& alphas,
                                                               const LossSpec& loss);
std::array<GradientSplit, kFusedLevels> gradient_decomposition(const Inputs& inputs,
                                                               const FpnParams& params,
                                                               const FusionFactors& alphas,
                                                               const Cotangents& cotangents);

// A seeded random problem: inputs and targets uniform in [-1, 1], weights
// uniform in [-0.1, 0.1]. `height` and `width` are the C2 resolution and must
// be divisible by 8.
struct Instance {
  Inputs inputs;
  FpnParams params;
  LossSpec loss;
};

struct InstanceShape {
  std::array<int, kFusedLevels> in_channels{4, 4, 4, 4};
  int out_channels = 4;
  int height = 16;
  int width = 16;
};

Instance make_instance(std::uint64_t seed, const InstanceShape& shape = {});

// Output shapes of P2..P6 for the given inputs (used to size loss targets).
std::array<FeatureMap, kOutputLevels> output_shapes(const Inputs& inputs, int out_channels);

}  // namespace tinyfusion::fpn
