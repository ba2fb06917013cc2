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

#include "tinyfusion/assignment.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <utility>

#include "tinyfusion/errors.hpp"

namespace tinyfusion {

std::int64_t LevelCounts::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

LevelCounts& LevelCounts::operator+=(const LevelCounts& other) {
  if (counts.empty()) {
    levels = other.levels;
    counts.assign(other.counts.size(), 0);
  }
  if (other.counts.size() != counts.size()) {
    throw std::logic_error("LevelCounts: adding counts with different level layouts");
  }
  for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += other.counts[k];
  zero_overlap += other.zero_overlap;
  return *this;
}

IoUMatrix iou_matrix(std::span<const BBox> gts, const AnchorPyramid& pyramid) {
  for (const BBox& g : gts) {
    if (!is_valid(g)) throw DomainError("iou_matrix: ground-truth box with non-positive area");
  }
  IoUMatrix m;
  m.rows = gts.size();
  m.cols = pyramid.size();
  m.values.resize(m.rows * m.cols);
  for (std::size_t r = 0; r < m.rows; ++r) {
    double* out = m.values.data() + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) out[c] = iou_unchecked(gts[r], pyramid.anchors[c]);
  }
  return m;
}

MatchResult match_gt(const IoUMatrix& m) {
  if (m.cols == 0) throw DomainError("match_gt: IoU matrix has no anchor columns");
  MatchResult result;
  result.matches.reserve(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto row = m.row(r);
    // max_element keeps the first of equal maxima, which is the tie rule.
    const auto best = std::max_element(row.begin(), row.end());
    Match match;
    match.anchor = static_cast<std::size_t>(best - row.begin());
    match.iou = *best;
    match.zero_overlap = !(*best > 0.0);
    result.matches.push_back(match);
  }
  return result;
}

MatchResult match_gt(const IoUMatrix& m, const AnchorPyramid& pyramid) {
  if (m.cols != pyramid.size()) throw std::logic_error("match_gt: matrix and pyramid disagree");
  MatchResult result = match_gt(m);
  for (Match& match : result.matches) match.level = pyramid.level_index[match.anchor];
  return result;
}

LevelCounts count_per_level(const MatchResult& r, const AnchorPyramid& pyramid,
                            bool include_zero_overlap) {
  LevelCounts out;
  for (const auto& g : pyramid.levels) out.levels.push_back(g.level);
  out.counts.assign(pyramid.levels.size(), 0);
  for (const Match& match : r.matches) {
    if (match.anchor >= pyramid.size()) {
      throw std::logic_error("count_per_level: anchor index out of range");
    }
    if (match.zero_overlap) {
      ++out.zero_overlap;
      if (!include_zero_overlap) continue;
    }
    ++out.counts[static_cast<std::size_t>(pyramid.level_index[match.anchor])];
  }
  return out;
}

namespace {

struct ImageWork {
  int width;
  int height;
  std::vector<BBox> gts;
};

LevelCounts empty_counts(const AnchorConfig& cfg) {
  LevelCounts c;
  c.levels = cfg.levels;
  c.counts.assign(cfg.levels.size(), 0);
  return c;
}

void count_range(std::span<const ImageWork> work, const AnchorConfig& cfg,
                 bool include_zero_overlap, LevelCounts& out) {
  std::map<std::pair<int, int>, AnchorPyramid> pyramids;
  for (const ImageWork& img : work) {
    auto key = std::make_pair(img.width, img.height);
    auto it = pyramids.find(key);
    if (it == pyramids.end()) {
      it = pyramids.emplace(key, build_pyramid(cfg, img.width, img.height)).first;
    }
    const AnchorPyramid& pyramid = it->second;
    if (img.gts.empty()) continue;
    const IoUMatrix m = iou_matrix(img.gts, pyramid);
    out += count_per_level(match_gt(m, pyramid), pyramid, include_zero_overlap);
  }
}

}  // namespace

LevelCounts dataset_level_counts(const Dataset& d, const AnchorConfig& cfg,
                                 const CountOptions& opts) {
  cfg.validate();

  std::unordered_map<std::int64_t, std::size_t> slot;
  std::vector<ImageWork> work;
  work.reserve(d.images.size());
  for (const auto& img : d.images) {
    slot.emplace(img.id, work.size());
    work.push_back({img.width, img.height, {}});
  }
  for (const auto& ann : d.annotations) {
    if (ann.ignore) continue;
    auto it = slot.find(ann.image_id);
    if (it == slot.end()) {
      throw ValidationError("annotation " + std::to_string(ann.id) + " references missing image " +
                                std::to_string(ann.image_id),
                            ann.id);
    }
    work[it->second].gts.push_back(ann.bbox);
  }

  unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(work.size(), 1)));

  std::vector<LevelCounts> partial(threads, empty_counts(cfg));
  const std::span<const ImageWork> all(work);
  const std::size_t chunk = (work.size() + threads - 1) / threads;
  if (threads == 1) {
    count_range(all, cfg, opts.include_zero_overlap, partial[0]);
  } else {
    std::vector<std::jthread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = std::min(work.size(), t * chunk);
      const std::size_t end = std::min(work.size(), begin + chunk);
      pool.emplace_back([&, t, begin, end] {
        try {
          count_range(all.subspan(begin, end - begin), cfg, opts.include_zero_overlap, partial[t]);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    pool.clear();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  LevelCounts total = empty_counts(cfg);
  for (const auto& p : partial) total += p;
  return total;
}

}  // namespace tinyfusion
