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

#include "tinyfusion/bbox.hpp"

#include <cmath>

#include "tinyfusion/errors.hpp"

namespace tinyfusion {

bool is_valid(const BBox& b) {
  return std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) &&
         std::isfinite(b.h) && b.w > 0.0 && b.h > 0.0;
}

double iou(const BBox& a, const BBox& b) {
  if (!is_valid(a) || !is_valid(b)) {
    throw DomainError("iou: boxes must be finite with positive width and height");
  }
  return iou_unchecked(a, b);
}

}  // namespace tinyfusion
