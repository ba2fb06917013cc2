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

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "tinyfusion/errors.hpp"

namespace tinyfusion::fpn {

namespace {

std::string level_name(int k) { return "P" + std::to_string(k + 2); }

FeatureMap conv1x1(const FeatureMap& in, const std::vector<double>& w, int out_ch) {
  FeatureMap out(out_ch, in.height, in.width);
  const std::size_t plane = static_cast<std::size_t>(in.height) * in.width;
  for (int o = 0; o < out_ch; ++o) {
    double* dst = out.data.data() + o * plane;
    for (int c = 0; c < in.channels; ++c) {
      const double k = w[static_cast<std::size_t>(o) * in.channels + c];
      const double* src = in.data.data() + c * plane;
      for (std::size_t p = 0; p < plane; ++p) dst[p] += k * src[p];
    }
  }
  return out;
}

// Accumulates the input gradient into g_in and the weight gradient into g_w.
void conv1x1_backward(const FeatureMap& in, const std::vector<double>& w, const FeatureMap& g_out,
                      FeatureMap& g_in, std::vector<double>& g_w) {
  const std::size_t plane = static_cast<std::size_t>(in.height) * in.width;
  for (int o = 0; o < g_out.channels; ++o) {
    const double* go = g_out.data.data() + o * plane;
    for (int c = 0; c < in.channels; ++c) {
      const std::size_t wi = static_cast<std::size_t>(o) * in.channels + c;
      const double k = w[wi];
      const double* src = in.data.data() + c * plane;
      double* gi = g_in.data.data() + c * plane;
      double acc = 0.0;
      for (std::size_t p = 0; p < plane; ++p) {
        gi[p] += k * go[p];
        acc += go[p] * src[p];
      }
      g_w[wi] += acc;
    }
  }
}

inline std::size_t kernel_index(int o, int c, int ky, int kx, int channels) {
  return ((static_cast<std::size_t>(o) * channels + c) * 3 + ky) * 3 + kx;
}

FeatureMap conv3x3(const FeatureMap& in, const std::vector<double>& k) {
  const int ch = in.channels;
  FeatureMap out(ch, in.height, in.width);
  for (int o = 0; o < ch; ++o) {
    for (int c = 0; c < ch; ++c) {
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double w = k[kernel_index(o, c, ky, kx, ch)];
          const int dy = ky - 1;
          const int dx = kx - 1;
          const int y0 = std::max(0, -dy), y1 = std::min(in.height, in.height - dy);
          const int x0 = std::max(0, -dx), x1 = std::min(in.width, in.width - dx);
          for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) out.at(o, y, x) += w * in.at(c, y + dy, x + dx);
          }
        }
      }
    }
  }
  return out;
}

void conv3x3_backward(const FeatureMap& in, const std::vector<double>& k, const FeatureMap& g_out,
                      FeatureMap& g_in, std::vector<double>& g_k) {
  const int ch = in.channels;
  for (int o = 0; o < ch; ++o) {
    for (int c = 0; c < ch; ++c) {
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const std::size_t wi = kernel_index(o, c, ky, kx, ch);
          const double w = k[wi];
          const int dy = ky - 1;
          const int dx = kx - 1;
          const int y0 = std::max(0, -dy), y1 = std::min(in.height, in.height - dy);
          const int x0 = std::max(0, -dx), x1 = std::min(in.width, in.width - dx);
          double acc = 0.0;
          for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) {
              const double go = g_out.at(o, y, x);
              g_in.at(c, y + dy, x + dx) += w * go;
              acc += go * in.at(c, y + dy, x + dx);
            }
          }
          g_k[wi] += acc;
        }
      }
    }
  }
}

// dst += alpha * up2(src)
void add_upsampled(FeatureMap& dst, double alpha, const FeatureMap& src) {
  for (int c = 0; c < dst.channels; ++c) {
    for (int y = 0; y < dst.height; ++y) {
      for (int x = 0; x < dst.width; ++x) dst.at(c, y, x) += alpha * src.at(c, y / 2, x / 2);
    }
  }
}

// dst += alpha * up2^T(src): each coarse cell collects its 2x2 block.
void add_upsample_adjoint(FeatureMap& dst, double alpha, const FeatureMap& src) {
  for (int c = 0; c < dst.channels; ++c) {
    for (int y = 0; y < dst.height; ++y) {
      for (int x = 0; x < dst.width; ++x) {
        const double s = src.at(c, 2 * y, 2 * x) + src.at(c, 2 * y, 2 * x + 1) +
                         src.at(c, 2 * y + 1, 2 * x) + src.at(c, 2 * y + 1, 2 * x + 1);
        dst.at(c, y, x) += alpha * s;
      }
    }
  }
}

FeatureMap subsample(const FeatureMap& in) {
  FeatureMap out(in.channels, (in.height + 1) / 2, (in.width + 1) / 2);
  for (int c = 0; c < out.channels; ++c) {
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) out.at(c, y, x) = in.at(c, 2 * y, 2 * x);
    }
  }
  return out;
}

void add_subsample_adjoint(FeatureMap& dst, const FeatureMap& g) {
  for (int c = 0; c < g.channels; ++c) {
    for (int y = 0; y < g.height; ++y) {
      for (int x = 0; x < g.width; ++x) dst.at(c, 2 * y, 2 * x) += g.at(c, y, x);
    }
  }
}

void check_shapes(const Inputs& inputs, const FpnParams& params) {
  const int out_ch = params.levels[0].out_channels;
  if (out_ch <= 0) throw ShapeError("P2: out_channels must be positive");
  for (int k = 0; k < kFusedLevels; ++k) {
    const FeatureMap& c = inputs[k];
    const LevelParams& p = params.levels[k];
    const std::string name = level_name(k);
    if (c.channels <= 0 || c.height <= 0 || c.width <= 0) throw ShapeError(name + ": empty input map");
    if (c.data.size() != static_cast<std::size_t>(c.channels) * c.height * c.width) {
      throw ShapeError(name + ": input data length does not match its shape");
    }
    if (p.out_channels != out_ch) throw ShapeError(name + ": out_channels differs from P2");
    if (p.in_channels != c.channels) throw ShapeError(name + ": input channels do not match inner weights");
    if (p.inner.size() != static_cast<std::size_t>(out_ch) * p.in_channels) {
      throw ShapeError(name + ": inner weights must be out x in");
    }
    if (p.layer.size() != static_cast<std::size_t>(out_ch) * out_ch * 9) {
      throw ShapeError(name + ": layer weights must be out x out x 3 x 3");
    }
    if (k > 0) {
      const FeatureMap& finer = inputs[k - 1];
      if (finer.height != 2 * c.height || finer.width != 2 * c.width) {
        throw ShapeError(name + ": spatial size must be exactly half of " + level_name(k - 1));
      }
    }
  }
}

FeatureMap zeros_like(const FeatureMap& m) { return FeatureMap(m.channels, m.height, m.width); }

}  // namespace

PyramidOutputs forward(const Inputs& inputs, const FpnParams& params, const FusionFactors& alphas) {
  check_shapes(inputs, params);
  const int out_ch = params.levels[0].out_channels;
  PyramidOutputs r;
  for (int k = kFusedLevels - 1; k >= 0; --k) {
    r.fused[k] = conv1x1(inputs[k], params.levels[k].inner, out_ch);
    if (k + 1 < kFusedLevels) add_upsampled(r.fused[k], alphas.alpha[k], r.fused[k + 1]);
  }
  for (int k = 0; k < kFusedLevels; ++k) r.outputs[k] = conv3x3(r.fused[k], params.levels[k].layer);
  r.outputs[4] = subsample(r.outputs[3]);
  return r;
}

FpnParams reparameterize(const FpnParams& params, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("reparameterize: sigma must be positive");
  FpnParams out = params;
  for (int k = 0; k < kFusedLevels; ++k) {
    const double s = std::pow(sigma, k);
    for (double& w : out.levels[k].inner) w *= s;
    for (double& w : out.levels[k].layer) w /= s;
  }
  return out;
}

double loss_value(const PyramidOutputs& out, const LossSpec& loss) {
  double total = 0.0;
  for (int l = 0; l < kOutputLevels; ++l) {
    if (!loss.include[l]) continue;
    const FeatureMap& p = out.outputs[l];
    const FeatureMap& t = loss.targets[l];
    if (!p.same_shape(t)) throw ShapeError(level_name(l) + ": loss target shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double d = p.data[i] - t.data[i];
      s += d * d;
    }
    total += 0.5 * s;
  }
  return total;
}

namespace {

Gradients pullback_from(const PyramidOutputs& fwd, const Inputs& inputs, const FpnParams& params,
                        const FusionFactors& alphas, const Cotangents& cotangents) {
  Gradients g;
  g.params = params;
  for (auto& lp : g.params.levels) {
    std::fill(lp.inner.begin(), lp.inner.end(), 0.0);
    std::fill(lp.layer.begin(), lp.layer.end(), 0.0);
  }

  std::array<FeatureMap, kOutputLevels> g_out;
  for (int l = 0; l < kOutputLevels; ++l) {
    if (!cotangents[l].same_shape(fwd.outputs[l])) {
      throw ShapeError(level_name(l) + ": cotangent shape mismatch");
    }
    g_out[l] = cotangents[l];
  }
  add_subsample_adjoint(g_out[3], g_out[4]);

  std::array<FeatureMap, kFusedLevels> g_fused;
  for (int k = 0; k < kFusedLevels; ++k) {
    g_fused[k] = zeros_like(fwd.fused[k]);
    conv3x3_backward(fwd.fused[k], params.levels[k].layer, g_out[k], g_fused[k], g.params.levels[k].layer);
  }
  // Top-down path in reverse: each fused map hands alpha times its gradient,
  // summed over 2x2 blocks, to the next deeper one.
  for (int k = 0; k + 1 < kFusedLevels; ++k) add_upsample_adjoint(g_fused[k + 1], alphas.alpha[k], g_fused[k]);

  for (int k = 0; k < kFusedLevels; ++k) {
    g.inputs[k] = zeros_like(inputs[k]);
    conv1x1_backward(inputs[k], params.levels[k].inner, g_fused[k], g.inputs[k], g.params.levels[k].inner);
  }
  return g;
}

}  // namespace

Cotangents loss_cotangents(const PyramidOutputs& out, const LossSpec& loss) {
  Cotangents c;
  for (int l = 0; l < kOutputLevels; ++l) {
    const FeatureMap& p = out.outputs[l];
    c[l] = zeros_like(p);
    if (!loss.include[l]) continue;
    if (!p.same_shape(loss.targets[l])) throw ShapeError(level_name(l) + ": loss target shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) c[l].data[i] = p.data[i] - loss.targets[l].data[i];
  }
  return c;
}

Gradients pullback(const Inputs& inputs, const FpnParams& params, const FusionFactors& alphas,
                   const Cotangents& cotangents) {
  return pullback_from(forward(inputs, params, alphas), inputs, params, alphas, cotangents);
}

Gradients backward(const Inputs& inputs, const FpnParams& params, const FusionFactors& alphas,
                   const LossSpec& loss) {
  const PyramidOutputs fwd = forward(inputs, params, alphas);
  Gradients g = pullback_from(fwd, inputs, params, alphas, loss_cotangents(fwd, loss));
  g.loss = loss_value(fwd, loss);
  return g;
}

std::array<GradientSplit, kFusedLevels> gradient_decomposition(const Inputs& inputs,
                                                               const FpnParams& params,
                                                               const FusionFactors& alphas,
                                                               const Cotangents& cotangents) {
  const PyramidOutputs fwd = forward(inputs, params, alphas);
  std::array<GradientSplit, kFusedLevels> out;
  for (int k = 0; k < kFusedLevels; ++k) {
    Cotangents deep = cotangents;
    Cotangents shallow = cotangents;
    for (int l = 0; l < kOutputLevels; ++l) {
      auto& drop = l >= k ? shallow[l] : deep[l];
      std::fill(drop.data.begin(), drop.data.end(), 0.0);
    }
    out[k].deep = pullback_from(fwd, inputs, params, alphas, deep).inputs[k];
    out[k].shallow = pullback_from(fwd, inputs, params, alphas, shallow).inputs[k];
  }
  return out;
}

std::array<GradientSplit, kFusedLevels> gradient_decomposition(const Inputs& inputs,
                                                               const FpnParams& params,
                                                               const FusionFactors& alphas,
                                                               const LossSpec& loss) {
  return gradient_decomposition(inputs, params, alphas, loss_cotangents(forward(inputs, params, alphas), loss));
}

std::array<FeatureMap, kOutputLevels> output_shapes(const Inputs& inputs, int out_channels) {
  std::array<FeatureMap, kOutputLevels> shapes;
  for (int k = 0; k < kFusedLevels; ++k) shapes[k] = FeatureMap(out_channels, inputs[k].height, inputs[k].width);
  shapes[4] = FeatureMap(out_channels, (inputs[3].height + 1) / 2, (inputs[3].width + 1) / 2);
  return shapes;
}

Instance make_instance(std::uint64_t seed, const InstanceShape& shape) {
  if (shape.height <= 0 || shape.width <= 0 || shape.height % 8 != 0 || shape.width % 8 != 0) {
    throw ShapeError("P2: base resolution must be a positive multiple of 8");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> weight(-0.1, 0.1);

  Instance inst;
  for (int k = 0; k < kFusedLevels; ++k) {
    inst.inputs[k] = FeatureMap(shape.in_channels[k], shape.height >> k, shape.width >> k);
    for (double& v : inst.inputs[k].data) v = unit(rng);
  }
  for (int k = 0; k < kFusedLevels; ++k) {
    LevelParams& p = inst.params.levels[k];
    p.in_channels = shape.in_channels[k];
    p.out_channels = shape.out_channels;
    p.inner.resize(static_cast<std::size_t>(p.out_channels) * p.in_channels);
    p.layer.resize(static_cast<std::size_t>(p.out_channels) * p.out_channels * 9);
    for (double& w : p.inner) w = weight(rng);
    for (double& w : p.layer) w = weight(rng);
  }
  inst.loss.targets = output_shapes(inst.inputs, shape.out_channels);
  for (auto& t : inst.loss.targets) {
    for (double& v : t.data) v = unit(rng);
  }
  return inst;
}

}  // namespace tinyfusion::fpn
