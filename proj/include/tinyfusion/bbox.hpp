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

namespace tinyfusion {

// Axis-aligned box in continuous pixel coordinates, top-left corner plus size.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  double right() const { return x + w; }
  double bottom() const { return y + h; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

// Returns true when every field is finite and both sides are positive.
bool is_valid(const BBox& b);

// Intersection over union. Throws DomainError when either box has
// non-positive area.
double iou(const BBox& a, const BBox& b);

// Same as iou() without the argument checks; for inner loops over boxes that
// are already known to be valid.
inline double iou_unchecked(const BBox& a, const BBox& b) {
  const double ix = (a.right() < b.right() ? a.right() : b.right()) -
                    (a.x > b.x ? a.x : b.x);
  if (ix <= 0.0) return 0.0;
  const double iy = (a.bottom() < b.bottom() ? a.bottom() : b.bottom()) -
                    (a.y > b.y ? a.y : b.y);
  if (iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  return inter / (a.area() + b.area() - inter);
}

}  // namespace tinyfusion
