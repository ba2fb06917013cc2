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

#include "tinyfusion/anchors.hpp"

#include <cmath>

#include "json.hpp"
#include "tinyfusion/errors.hpp"

namespace tinyfusion {

namespace {

template <typename T>
bool strictly_increasing(const std::vector<T>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i - 1] < v[i])) return false;
  }
  return true;
}

bool all_positive(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x) || x <= 0.0) return false;
  }
  return true;
}

template <typename T>
void read_list(const nlohmann::json& j, const char* key, std::vector<T>& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_array()) throw ConfigError(std::string("anchor config: '") + key + "' must be an array");
  std::vector<T> values;
  for (const auto& v : *it) {
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) {
        throw ConfigError(std::string("anchor config: '") + key + "' must hold integers");
      }
    } else if (!v.is_number()) {
      throw ConfigError(std::string("anchor config: '") + key + "' must hold numbers");
    }
    values.push_back(v.get<T>());
  }
  out = std::move(values);
}

}  // namespace

void AnchorConfig::validate() const {
  if (levels.empty()) throw ConfigError("anchor config: 'levels' is empty");
  if (strides.size() != levels.size() || base_sizes.size() != levels.size()) {
    throw ConfigError("anchor config: 'levels', 'strides' and 'base_sizes' differ in length");
  }
  if (!strictly_increasing(levels)) throw ConfigError("anchor config: 'levels' must be strictly increasing");
  if (!all_positive(strides)) throw ConfigError("anchor config: 'strides' must be positive");
  if (!strictly_increasing(strides)) throw ConfigError("anchor config: 'strides' must be strictly increasing");
  if (!all_positive(base_sizes)) throw ConfigError("anchor config: 'base_sizes' must be positive");
  if (!strictly_increasing(base_sizes)) {
    throw ConfigError("anchor config: 'base_sizes' must be strictly increasing");
  }
  if (aspect_ratios.empty() || !all_positive(aspect_ratios)) {
    throw ConfigError("anchor config: 'aspect_ratios' must be a non-empty list of positive values");
  }
  if (scales_per_level.empty() || !all_positive(scales_per_level)) {
    throw ConfigError("anchor config: 'scales_per_level' must be a non-empty list of positive values");
  }
}

AnchorConfig anchor_config_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("anchor config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("anchor config: expected a JSON object");
  AnchorConfig cfg;
  read_list(j, "levels", cfg.levels);
  read_list(j, "strides", cfg.strides);
  read_list(j, "base_sizes", cfg.base_sizes);
  read_list(j, "aspect_ratios", cfg.aspect_ratios);
  read_list(j, "scales_per_level", cfg.scales_per_level);
  cfg.validate();
  return cfg;
}

std::string anchor_config_to_json(const AnchorConfig& cfg) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["levels"] = cfg.levels;
  j["strides"] = cfg.strides;
  j["base_sizes"] = cfg.base_sizes;
  j["aspect_ratios"] = cfg.aspect_ratios;
  j["scales_per_level"] = cfg.scales_per_level;
  return j.dump();
}

AnchorPyramid build_pyramid(const AnchorConfig& cfg, int image_w, int image_h) {
  cfg.validate();
  if (image_w <= 0 || image_h <= 0) throw ConfigError("build_pyramid: image size must be positive");

  struct Shape {
    double w, h;
  };

  AnchorPyramid p;
  const std::size_t per_cell = cfg.anchors_per_cell();
  std::size_t offset = 0;
  for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
    LevelGrid g;
    g.level = cfg.levels[l];
    g.stride = cfg.strides[l];
    g.grid_w = static_cast<int>(std::ceil(image_w / g.stride));
    g.grid_h = static_cast<int>(std::ceil(image_h / g.stride));
    g.offset = offset;
    g.count = static_cast<std::size_t>(g.grid_w) * g.grid_h * per_cell;
    offset += g.count;
    p.levels.push_back(g);
  }
  p.anchors.reserve(offset);
  p.level_index.reserve(offset);

  std::vector<Shape> shapes;
  for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
    const LevelGrid& g = p.levels[l];
    shapes.clear();
    for (double ratio : cfg.aspect_ratios) {
      for (double scale : cfg.scales_per_level) {
        const double side = cfg.base_sizes[l] * scale;
        shapes.push_back({side * std::sqrt(1.0 / ratio), side * std::sqrt(ratio)});
      }
    }
    for (int j = 0; j < g.grid_h; ++j) {
      const double cy = (j + 0.5) * g.stride;
      for (int i = 0; i < g.grid_w; ++i) {
        const double cx = (i + 0.5) * g.stride;
        for (const Shape& s : shapes) {
          p.anchors.push_back({cx - 0.5 * s.w, cy - 0.5 * s.h, s.w, s.h});
          p.level_index.push_back(static_cast<int>(l));
        }
      }
    }
  }
  return p;
}

std::vector<std::size_t> total_anchors(const AnchorPyramid& p) {
  std::vector<std::size_t> counts;
  counts.reserve(p.levels.size());
  for (const auto& g : p.levels) counts.push_back(g.count);
  return counts;
}

}  // namespace tinyfusion
