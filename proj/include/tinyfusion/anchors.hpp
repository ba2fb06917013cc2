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

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "tinyfusion/bbox.hpp"

namespace tinyfusion {

// Per-level anchor layout. Defaults are the P2..P6 RetinaNet setup used for
// tiny-object datasets: sizes 8..128, ratios 0.5/1/2, one scale.
struct AnchorConfig {
  std::vector<int> levels{2, 3, 4, 5, 6};
  std::vector<double> strides{4, 8, 16, 32, 64};
  std::vector<double> base_sizes{8, 16, 32, 64, 128};
  std::vector<double> aspect_ratios{0.5, 1.0, 2.0};  // h / w
  std::vector<double> scales_per_level{1.0};

  friend bool operator==(const AnchorConfig&, const AnchorConfig&) = default;

  // Throws ConfigError describing the first violated constraint.
  void validate() const;

  std::size_t anchors_per_cell() const { return aspect_ratios.size() * scales_per_level.size(); }
};

// Reads an AnchorConfig from a JSON object. Missing fields keep their
// defaults, unknown fields are ignored. Throws ConfigError.
AnchorConfig anchor_config_from_json(std::string_view text);
std::string anchor_config_to_json(const AnchorConfig& cfg);

struct LevelGrid {
  int level = 0;
  double stride = 0.0;
  int grid_w = 0;
  int grid_h = 0;
  std::size_t offset = 0;  // first flat anchor index of this level
  std::size_t count = 0;
};

// Dense anchors for one image size. Flat order: levels ascending, then
// row-major grid cells, then aspect ratio, then scale.
struct AnchorPyramid {
  std::vector<LevelGrid> levels;
  std::vector<BBox> anchors;
  std::vector<int> level_index;  // position in `levels` for each anchor

  std::size_t size() const { return anchors.size(); }
};

// Anchors for cell (i, j) are centred at ((i + 0.5) * stride, (j + 0.5) * stride)
// and have width base*scale/sqrt(ratio), height base*scale*sqrt(ratio). The
// grid is ceil(image / stride) on each side and anchors are not clipped.
AnchorPyramid build_pyramid(const AnchorConfig& cfg, int image_w, int image_h);

std::vector<std::size_t> total_anchors(const AnchorPyramid& p);

}  // namespace tinyfusion
