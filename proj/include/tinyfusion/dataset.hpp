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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tinyfusion/bbox.hpp"

namespace tinyfusion {

struct ImageRecord {
  std::int64_t id = 0;
  int width = 0;
  int height = 0;
  std::optional<std::string> file_name;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct Annotation {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  BBox bbox;
  bool ignore = false;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

// Images and their ground-truth boxes. Treated as immutable once built; every
// pipeline stage takes it by const reference and returns new values.
struct Dataset {
  std::vector<ImageRecord> images;
  std::vector<Annotation> annotations;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Parses the annotation JSON format:
//   {"images":[{"id","width","height","file_name"?}],
//    "annotations":[{"id","image_id","bbox":[x,y,w,h],"ignore"?}]}
// Unknown fields are ignored and record order is kept.
//
// Throws ParseError (with byte offset) on malformed JSON, SchemaError on a
// missing or mistyped field, and ValidationError on non-positive sizes,
// dangling image_id references or duplicate ids.
Dataset parse_annotations(std::string_view raw);

// Inverse of parse_annotations(). Output is compact JSON with keys in a fixed
// order and doubles printed at round-trip precision.
std::string serialize_annotations(const Dataset& d);

// Keeps the images whose non-ignore annotation count is strictly below
// `max_objects`, together with all of their annotations.
Dataset filter_images(const Dataset& d, int max_objects);

// Number of non-ignore annotations.
std::int64_t count_ground_truths(const Dataset& d);

enum class Severity { kHard, kSoft };

struct Finding {
  Severity severity = Severity::kHard;
  std::string code;
  std::string record;  // "image:<id>" or "annotation:<id>"
  std::string message;
};

struct ValidationReport {
  bool valid = true;
  std::vector<Finding> findings;

  std::size_t hard_count() const;
  std::size_t soft_count() const;
};

// Never throws. Hard findings: non-positive or non-finite sizes, dangling
// image_id, duplicate ids. Soft findings (at most one per annotation, most
// severe wins): box lies entirely outside the image, box leaves the image
// frame padded by 10% of its size, box crosses the image border.
ValidationReport validate(const Dataset& d);

}  // namespace tinyfusion
