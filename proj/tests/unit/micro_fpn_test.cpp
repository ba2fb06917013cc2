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

#include "tinyfusion/micro_fpn.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "tinyfusion/errors.hpp"
#include "tinyfusion/verify.hpp"

namespace tinyfusion::fpn {
namespace {

bool all_zero(const FeatureMap& m) {
  return std::all_of(m.data.begin(), m.data.end(), [](double v) { return v == 0.0; });
}

LossSpec only(const Instance& inst, std::array<bool, kOutputLevels> include) {
  LossSpec l = inst.loss;
  l.include = include;
  return l;
}

TEST(Forward, OutputShapes) {
  InstanceShape shape;
  shape.in_channels = {3, 2, 4, 1};
  shape.out_channels = 2;
  shape.height = 16;
  shape.width = 8;
  const Instance inst = make_instance(1, shape);
  const PyramidOutputs out = forward(inst.inputs, inst.params, FusionFactors{});
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(out.outputs[k].channels, 2);
    EXPECT_EQ(out.outputs[k].height, 16 >> k);
    EXPECT_EQ(out.outputs[k].width, 8 >> k);
  }
  EXPECT_EQ(out.outputs[4].height, 1);
  EXPECT_EQ(out.outputs[4].width, 1);
}

TEST(Forward, AlphaZeroDecouplesLevels) {
  const Instance inst = make_instance(3);
  Inputs perturbed = inst.inputs;
  for (double& v : perturbed[3].data) v = v * 3.0 + 0.5;
  const auto zero = FusionFactors::uniform(0.0);
  const PyramidOutputs a = forward(inst.inputs, inst.params, zero);
  const PyramidOutputs b = forward(perturbed, inst.params, zero);
  for (int l = 0; l < 3; ++l) EXPECT_EQ(bitwise_mismatches(a.outputs[l], b.outputs[l]), 0u) << "P" << l + 2;
  EXPECT_GT(bitwise_mismatches(a.outputs[3], b.outputs[3]), 0u);
}

TEST(Forward, ZeroWeightsGiveZeroOutputs) {
  Instance inst = make_instance(4);
  for (auto& lp : inst.params.levels) {
    std::fill(lp.inner.begin(), lp.inner.end(), 0.0);
    std::fill(lp.layer.begin(), lp.layer.end(), 0.0);
  }
  const PyramidOutputs out = forward(inst.inputs, inst.params, FusionFactors{});
  for (const auto& p : out.outputs) EXPECT_TRUE(all_zero(p));
}

TEST(Forward, MatchesNaiveLoops) {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const Instance inst = make_instance(seed);
    const PyramidOutputs got = forward(inst.inputs, inst.params, FusionFactors::uniform(1.0));
    const PyramidOutputs ref = oracle::naive_forward(inst.inputs, inst.params, FusionFactors::uniform(1.0));
    for (int l = 0; l < kOutputLevels; ++l) {
      ASSERT_TRUE(got.outputs[l].same_shape(ref.outputs[l]));
      EXPECT_LE(oracle::max_abs_diff(got.outputs[l], ref.outputs[l]), 1e-12);
    }
    for (int k = 0; k < kFusedLevels; ++k) EXPECT_LE(oracle::max_abs_diff(got.fused[k], ref.fused[k]), 1e-12);
  }
  const Instance inst = make_instance(99);
  const FusionFactors mixed{{0.3, 0.7, 1.05}, {}};
  const PyramidOutputs got = forward(inst.inputs, inst.params, mixed);
  const PyramidOutputs ref = oracle::naive_forward(inst.inputs, inst.params, mixed);
  for (int l = 0; l < kOutputLevels; ++l) EXPECT_LE(oracle::max_abs_diff(got.outputs[l], ref.outputs[l]), 1e-12);
}

TEST(Forward, Linear) {
  const Instance inst = make_instance(5);
  Inputs scaled = inst.inputs;
  for (auto& m : scaled) {
    for (double& v : m.data) v *= 2.5;
  }
  const FusionFactors alphas{{0.4, 0.9, 0.6}, {}};
  const PyramidOutputs a = forward(inst.inputs, inst.params, alphas);
  const PyramidOutputs b = forward(scaled, inst.params, alphas);
  for (int l = 0; l < kOutputLevels; ++l) {
    FeatureMap expect = a.outputs[l];
    for (double& v : expect.data) v *= 2.5;
    EXPECT_LE(relative_max_error(b.outputs[l], expect), 1e-14);
  }
}

TEST(Forward, ShapeErrorsNameLevel) {
  Instance inst = make_instance(6);
  Inputs bad = inst.inputs;
  bad[2] = FeatureMap(4, 3, 4);
  try {
    forward(bad, inst.params, FusionFactors{});
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("P4"), std::string::npos) << e.what();
  }
  bad = inst.inputs;
  bad[1] = FeatureMap(3, 8, 8);
  try {
    forward(bad, inst.params, FusionFactors{});
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("P3"), std::string::npos) << e.what();
  }
  FpnParams p = inst.params;
  p.levels[3].out_channels = 3;
  EXPECT_THROW(forward(inst.inputs, p, FusionFactors{}), ShapeError);
  InstanceShape odd;
  odd.height = 12;
  EXPECT_THROW(make_instance(0, odd), ShapeError);
}

TEST(Reparameterize, SigmaOneIsIdentity) {
  const Instance inst = make_instance(7);
  EXPECT_EQ(reparameterize(inst.params, 1.0), inst.params);
}

TEST(Reparameterize, HalfScalesByLevelPower) {
  const Instance inst = make_instance(8);
  const FpnParams r = reparameterize(inst.params, 0.5);
  EXPECT_EQ(r.levels[0], inst.params.levels[0]);
  for (std::size_t i = 0; i < r.levels[3].inner.size(); ++i) {
    EXPECT_EQ(r.levels[3].inner[i], inst.params.levels[3].inner[i] * 0.125);
  }
  for (std::size_t i = 0; i < r.levels[3].layer.size(); ++i) {
    EXPECT_EQ(r.levels[3].layer[i], inst.params.levels[3].layer[i] * 8.0);
  }
  for (std::size_t i = 0; i < r.levels[1].inner.size(); ++i) {
    EXPECT_EQ(r.levels[1].inner[i], inst.params.levels[1].inner[i] * 0.5);
  }
}

TEST(Reparameterize, RejectsNonPositiveSigma) {
  const Instance inst = make_instance(9);
  EXPECT_THROW(reparameterize(inst.params, 0.0), DomainError);
  EXPECT_THROW(reparameterize(inst.params, -0.5), DomainError);
}

TEST(Reparameterize, EquivalentToUniformAlpha) {
  for (std::uint64_t seed = 20; seed < 30; ++seed) {
    const Instance inst = make_instance(seed);
    for (double sigma : {0.25, 0.5, 0.9, 1.7}) {
      const PyramidOutputs a = forward(inst.inputs, reparameterize(inst.params, sigma), FusionFactors::uniform(1.0));
      const PyramidOutputs b = oracle::naive_forward(inst.inputs, inst.params, FusionFactors::uniform(sigma));
      for (int l = 0; l < kOutputLevels; ++l) EXPECT_LE(relative_max_error(a.outputs[l], b.outputs[l]), 1e-9);
    }
  }
}

// Independent central differences: plain loss evaluation through the naive
// forward, with the loss difference expanded term by term.
double fd_loss_diff(const PyramidOutputs& plus, const PyramidOutputs& minus, const LossSpec& loss) {
  double s = 0.0;
  for (int l = 0; l < kOutputLevels; ++l) {
    if (!loss.include[l]) continue;
    for (std::size_t i = 0; i < plus.outputs[l].size(); ++i) {
      const double dp = plus.outputs[l].data[i] - loss.targets[l].data[i];
      const double dm = minus.outputs[l].data[i] - loss.targets[l].data[i];
      s += 0.5 * (dp - dm) * (dp + dm);
    }
  }
  return s;
}

TEST(Backward, MatchesFiniteDifferences) {
  constexpr double h = 1e-5;
  for (std::uint64_t seed : {31u, 32u}) {
    const Instance inst = make_instance(seed);
    const FusionFactors alphas{{0.45, 0.8, 1.1}, {}};
    const LossSpec loss = seed == 31 ? inst.loss : only(inst, {false, true, true, false, true});
    const Gradients g = backward(inst.inputs, inst.params, alphas, loss);
    double worst = 0.0;
    auto compare = [&](double analytic, double numeric) {
      worst = std::max(worst, std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
    };
    Inputs probe = inst.inputs;
    for (int k = 0; k < kFusedLevels; ++k) {
      for (std::size_t i = 0; i < probe[k].size(); ++i) {
        const double x = probe[k].data[i];
        probe[k].data[i] = x + h;
        const auto plus = oracle::naive_forward(probe, inst.params, alphas);
        probe[k].data[i] = x - h;
        const auto minus = oracle::naive_forward(probe, inst.params, alphas);
        probe[k].data[i] = x;
        compare(g.inputs[k].data[i], fd_loss_diff(plus, minus, loss) / (2 * h));
      }
    }
    FpnParams p = inst.params;
    for (int k = 0; k < kFusedLevels; ++k) {
      for (std::size_t i = 0; i < p.levels[k].layer.size(); i += 3) {
        const double x = p.levels[k].layer[i];
        p.levels[k].layer[i] = x + h;
        const auto plus = oracle::naive_forward(inst.inputs, p, alphas);
        p.levels[k].layer[i] = x - h;
        const auto minus = oracle::naive_forward(inst.inputs, p, alphas);
        p.levels[k].layer[i] = x;
        compare(g.params.levels[k].layer[i], fd_loss_diff(plus, minus, loss) / (2 * h));
      }
      for (std::size_t i = 0; i < p.levels[k].inner.size(); ++i) {
        const double x = p.levels[k].inner[i];
        p.levels[k].inner[i] = x + h;
        const auto plus = oracle::naive_forward(inst.inputs, p, alphas);
        p.levels[k].inner[i] = x - h;
        const auto minus = oracle::naive_forward(inst.inputs, p, alphas);
        p.levels[k].inner[i] = x;
        compare(g.params.levels[k].inner[i], fd_loss_diff(plus, minus, loss) / (2 * h));
      }
    }
    EXPECT_LE(worst, 1e-4) << "seed " << seed;
  }
}

TEST(Backward, LossValueMatchesDefinition) {
  const Instance inst = make_instance(33);
  const Gradients g = backward(inst.inputs, inst.params, FusionFactors{}, inst.loss);
  const auto out = oracle::naive_forward(inst.inputs, inst.params, FusionFactors{});
  double expect = 0.0;
  for (int l = 0; l < kOutputLevels; ++l) {
    for (std::size_t i = 0; i < out.outputs[l].size(); ++i) {
      const double d = out.outputs[l].data[i] - inst.loss.targets[l].data[i];
      expect += 0.5 * d * d;
    }
  }
  EXPECT_NEAR(g.loss, expect, 1e-12 * expect);
}

TEST(Backward, P2GradientOnC4ScalesWithAlpha34AtFixedResidual) {
  const Instance inst = make_instance(34);
  const LossSpec loss = only(inst, {true, false, false, false, false});
  FusionFactors alphas{{0.6, 0.4, 0.9}, {}};
  const Cotangents cot = loss_cotangents(forward(inst.inputs, inst.params, alphas), loss);
  const FeatureMap low = pullback(inst.inputs, inst.params, alphas, cot).inputs[2];
  alphas.alpha[1] = 0.8;
  FeatureMap high = pullback(inst.inputs, inst.params, alphas, cot).inputs[2];
  for (double& v : high.data) v /= 2.0;
  EXPECT_EQ(bitwise_mismatches(high, low), 0u);
  EXPECT_FALSE(all_zero(low));
}

TEST(Backward, RecomputedResidualIsNotLinearInAlpha34) {
  // The quadratic loss moves with alpha_3_4 through the forward pass, so the
  // full gradient carries a second-order term. Documented, not a defect.
  const Instance inst = make_instance(34);
  const LossSpec loss = only(inst, {true, false, false, false, false});
  FusionFactors alphas{{0.6, 0.4, 0.9}, {}};
  const FeatureMap low = backward(inst.inputs, inst.params, alphas, loss).inputs[2];
  alphas.alpha[1] = 0.8;
  FeatureMap high = backward(inst.inputs, inst.params, alphas, loss).inputs[2];
  for (double& v : high.data) v /= 2.0;
  EXPECT_GT(relative_max_error(high, low), 1e-6);
}

TEST(Backward, DeepLossesIgnoreAlpha34) {
  const Instance inst = make_instance(35);
  const LossSpec loss = only(inst, {false, false, true, true, false});
  FusionFactors alphas{{0.6, 0.25, 0.9}, {}};
  const FeatureMap a = backward(inst.inputs, inst.params, alphas, loss).inputs[2];
  alphas.alpha[1] = 1.1;
  const FeatureMap b = backward(inst.inputs, inst.params, alphas, loss).inputs[2];
  EXPECT_EQ(bitwise_mismatches(a, b), 0u);
}

TEST(Pullback, AgreesWithBackwardAtResidual) {
  const Instance inst = make_instance(36);
  const FusionFactors alphas{{0.3, 0.6, 0.9}, {}};
  const Gradients g = backward(inst.inputs, inst.params, alphas, inst.loss);
  const Gradients p =
      pullback(inst.inputs, inst.params, alphas, loss_cotangents(forward(inst.inputs, inst.params, alphas), inst.loss));
  for (int k = 0; k < kFusedLevels; ++k) EXPECT_EQ(bitwise_mismatches(g.inputs[k], p.inputs[k]), 0u);
  EXPECT_EQ(g.params, p.params);
}

TEST(Decomposition, SumsToTotal) {
  for (std::uint64_t seed = 40; seed < 45; ++seed) {
    const Instance inst = make_instance(seed);
    const FusionFactors alphas{{0.5, 0.7, 0.2}, {}};
    const Gradients total = backward(inst.inputs, inst.params, alphas, inst.loss);
    const auto split = gradient_decomposition(inst.inputs, inst.params, alphas, inst.loss);
    for (int k = 0; k < kFusedLevels; ++k) {
      for (std::size_t i = 0; i < total.inputs[k].size(); ++i) {
        EXPECT_LE(std::abs(split[k].deep.data[i] + split[k].shallow.data[i] - total.inputs[k].data[i]), 1e-12);
      }
    }
    EXPECT_TRUE(all_zero(split[0].shallow));  // nothing lies below P2
  }
}

TEST(Decomposition, NoShallowLossesNoShallowPart) {
  const Instance inst = make_instance(46);
  const auto split =
      gradient_decomposition(inst.inputs, inst.params, FusionFactors{}, only(inst, {false, false, true, true, true}));
  EXPECT_TRUE(all_zero(split[2].shallow));
  EXPECT_FALSE(all_zero(split[2].deep));
}

TEST(Decomposition, ZeroAlpha34KillsShallowPart) {
  const Instance inst = make_instance(47);
  const auto split = gradient_decomposition(inst.inputs, inst.params, FusionFactors{{0.8, 0.0, 0.7}, {}}, inst.loss);
  EXPECT_TRUE(all_zero(split[2].shallow));
}

TEST(Decomposition, ShallowNormOverAlphaConstant) {
  const Instance inst = make_instance(48);
  FusionFactors alphas{{0.8, 1.0, 0.7}, {}};
  const Cotangents cot = loss_cotangents(forward(inst.inputs, inst.params, alphas), inst.loss);
  auto norm = [](const FeatureMap& m) {
    double s = 0.0;
    for (double v : m.data) s += v * v;
    return std::sqrt(s);
  };
  std::vector<double> ratios;
  for (double a : {0.25, 0.5, 1.0}) {
    alphas.alpha[1] = a;
    ratios.push_back(norm(gradient_decomposition(inst.inputs, inst.params, alphas, cot)[2].shallow) / a);
  }
  EXPECT_NEAR(ratios[0] / ratios[2], 1.0, 1e-9);
  EXPECT_NEAR(ratios[1] / ratios[2], 1.0, 1e-9);
}

TEST(MakeInstance, Deterministic) {
  const Instance a = make_instance(50);
  const Instance b = make_instance(50);
  EXPECT_EQ(a.params, b.params);
  for (int k = 0; k < kFusedLevels; ++k) EXPECT_EQ(bitwise_mismatches(a.inputs[k], b.inputs[k]), 0u);
  const Instance c = make_instance(51);
  EXPECT_FALSE(a.params == c.params);
  for (const auto& lp : a.params.levels) {
    for (double w : lp.layer) {
      EXPECT_GE(w, -0.1);
      EXPECT_LE(w, 0.1);
    }
  }
}

}  // namespace
}  // namespace tinyfusion::fpn
