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
#include <cstdint>
#include <span>
#include <vector>

#include "tinyfusion/anchors.hpp"
#include "tinyfusion/bbox.hpp"
#include "tinyfusion/dataset.hpp"

namespace tinyfusion {

// Row-major (#ground truths x #anchors) IoU table for one image.
struct IoUMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values).subspan(r * cols, cols);
  }
};

struct Match {
  std::size_t anchor = 0;
  int level = -1;  // position in AnchorPyramid::levels; -1 when not resolved
  double iou = 0.0;
  bool zero_overlap = false;
};

struct MatchResult {
  std::vector<Match> matches;  // one per ground truth, in row order
};

// Ground truths per pyramid level. `counts[k]` belongs to `levels[k]`.
struct LevelCounts {
  std::vector<int> levels;
  std::vector<std::int64_t> counts;
  std::int64_t zero_overlap = 0;  // ground truths no anchor overlaps

  std::int64_t total() const;
  LevelCounts& operator+=(const LevelCounts& other);
  friend bool operator==(const LevelCounts&, const LevelCounts&) = default;
};

// Column order follows the pyramid's flat anchor order.
IoUMatrix iou_matrix(std::span<const BBox> gts, const AnchorPyramid& pyramid);

// Picks, for every row, the column with the largest IoU. Ties go to the lowest
// column. Rows whose maximum is 0 keep column 0 and are flagged zero_overlap.
// Throws DomainError for a matrix without columns.
MatchResult match_gt(const IoUMatrix& m);
MatchResult match_gt(const IoUMatrix& m, const AnchorPyramid& pyramid);

// Zero-overlap matches are skipped unless `include_zero_overlap` is set; they
// are tallied in LevelCounts::zero_overlap either way.
LevelCounts count_per_level(const MatchResult& r, const AnchorPyramid& pyramid,
                            bool include_zero_overlap);

struct CountOptions {
  bool include_zero_overlap = false;
  unsigned threads = 0;  // 0: hardware concurrency
};

// Sums count_per_level over every image, one image at a time. Ignore
// annotations do not take part. The result is independent of image order and
// of the thread count.
LevelCounts dataset_level_counts(const Dataset& d, const AnchorConfig& cfg,
                                 const CountOptions& opts = {});

}  // namespace tinyfusion
