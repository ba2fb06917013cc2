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

#include "tinyfusion/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "tinyfusion/errors.hpp"

namespace tinyfusion {

namespace {

using nlohmann::json;

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaError(where + ": missing required field '" + key + "'", key);
  }
  return *it;
}

std::int64_t require_int(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number_integer()) {
    throw SchemaError(where + ": field '" + key + "' must be an integer", key);
  }
  return v.get<std::int64_t>();
}

std::string image_tag(std::int64_t id) { return "image:" + std::to_string(id); }
std::string annotation_tag(std::int64_t id) { return "annotation:" + std::to_string(id); }

ImageRecord parse_image(const json& j, std::size_t index) {
  const std::string where = "images[" + std::to_string(index) + "]";
  if (!j.is_object()) throw SchemaError(where + ": expected an object", "images");
  ImageRecord img;
  img.id = require_int(j, "id", where);
  const std::int64_t w = require_int(j, "width", where);
  const std::int64_t h = require_int(j, "height", where);
  if (w <= 0 || h <= 0) {
    throw ValidationError("image " + std::to_string(img.id) +
                              ": width and height must be positive",
                          img.id);
  }
  if (w > INT32_MAX || h > INT32_MAX) {
    throw ValidationError("image " + std::to_string(img.id) + ": size out of range", img.id);
  }
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  if (auto it = j.find("file_name"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) {
      throw SchemaError(where + ": field 'file_name' must be a string", "file_name");
    }
    img.file_name = it->get<std::string>();
  }
  return img;
}

Annotation parse_annotation(const json& j, std::size_t index) {
  const std::string where = "annotations[" + std::to_string(index) + "]";
  if (!j.is_object()) throw SchemaError(where + ": expected an object", "annotations");
  Annotation ann;
  ann.id = require_int(j, "id", where);
  ann.image_id = require_int(j, "image_id", where);
  const json& box = require(j, "bbox", where);
  if (!box.is_array() || box.size() != 4 ||
      !std::all_of(box.begin(), box.end(), [](const json& v) { return v.is_number(); })) {
    throw SchemaError(where + ": field 'bbox' must be an array of 4 numbers", "bbox");
  }
  ann.bbox = {box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
              box[3].get<double>()};
  if (!is_valid(ann.bbox)) {
    throw ValidationError("annotation " + std::to_string(ann.id) +
                              ": bbox must be finite with positive width and height",
                          ann.id);
  }
  if (auto it = j.find("ignore"); it != j.end() && !it->is_null()) {
    if (!it->is_boolean()) {
      throw SchemaError(where + ": field 'ignore' must be a boolean", "ignore");
    }
    ann.ignore = it->get<bool>();
  }
  return ann;
}

const json& require_array(const json& root, const char* key) {
  const json& v = require(root, key, "root");
  if (!v.is_array()) throw SchemaError(std::string("root: field '") + key + "' must be an array", key);
  return v;
}

}  // namespace

Dataset parse_annotations(std::string_view raw) {
  json root;
  try {
    root = json::parse(raw.begin(), raw.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!root.is_object()) throw SchemaError("root: expected an object", "root");

  Dataset d;
  const json& images = require_array(root, "images");
  const json& annotations = require_array(root, "annotations");
  d.images.reserve(images.size());
  d.annotations.reserve(annotations.size());

  std::unordered_set<std::int64_t> image_ids;
  for (std::size_t i = 0; i < images.size(); ++i) {
    ImageRecord img = parse_image(images[i], i);
    if (!image_ids.insert(img.id).second) {
      throw ValidationError("duplicate image id " + std::to_string(img.id), img.id);
    }
    d.images.push_back(std::move(img));
  }

  std::unordered_set<std::int64_t> annotation_ids;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    Annotation ann = parse_annotation(annotations[i], i);
    if (!annotation_ids.insert(ann.id).second) {
      throw ValidationError("duplicate annotation id " + std::to_string(ann.id), ann.id);
    }
    if (!image_ids.contains(ann.image_id)) {
      throw ValidationError("annotation " + std::to_string(ann.id) +
                                " references missing image " + std::to_string(ann.image_id),
                            ann.id);
    }
    d.annotations.push_back(ann);
  }
  return d;
}

std::string serialize_annotations(const Dataset& d) {
  json images = json::array();
  for (const auto& img : d.images) {
    json j = json::object();
    j["id"] = img.id;
    j["width"] = img.width;
    j["height"] = img.height;
    if (img.file_name) j["file_name"] = *img.file_name;
    images.push_back(std::move(j));
  }
  json annotations = json::array();
  for (const auto& ann : d.annotations) {
    json j = json::object();
    j["id"] = ann.id;
    j["image_id"] = ann.image_id;
    j["bbox"] = {ann.bbox.x, ann.bbox.y, ann.bbox.w, ann.bbox.h};
    j["ignore"] = ann.ignore;
    annotations.push_back(std::move(j));
  }
  json root = json::object();
  root["images"] = std::move(images);
  root["annotations"] = std::move(annotations);
  return root.dump();
}

Dataset filter_images(const Dataset& d, int max_objects) {
  std::unordered_map<std::int64_t, std::int64_t> per_image;
  for (const auto& ann : d.annotations) {
    if (!ann.ignore) ++per_image[ann.image_id];
  }
  Dataset out;
  std::unordered_set<std::int64_t> kept;
  for (const auto& img : d.images) {
    auto it = per_image.find(img.id);
    const std::int64_t n = it == per_image.end() ? 0 : it->second;
    if (n < max_objects) {
      out.images.push_back(img);
      kept.insert(img.id);
    }
  }
  for (const auto& ann : d.annotations) {
    if (kept.contains(ann.image_id)) out.annotations.push_back(ann);
  }
  return out;
}

std::int64_t count_ground_truths(const Dataset& d) {
  return std::count_if(d.annotations.begin(), d.annotations.end(),
                       [](const Annotation& a) { return !a.ignore; });
}

std::size_t ValidationReport::hard_count() const {
  return std::count_if(findings.begin(), findings.end(),
                       [](const Finding& f) { return f.severity == Severity::kHard; });
}

std::size_t ValidationReport::soft_count() const {
  return findings.size() - hard_count();
}

ValidationReport validate(const Dataset& d) {
  ValidationReport report;
  auto hard = [&](std::string code, std::string record, std::string message) {
    report.findings.push_back({Severity::kHard, std::move(code), std::move(record), std::move(message)});
    report.valid = false;
  };
  auto soft = [&](std::string code, std::string record, std::string message) {
    report.findings.push_back({Severity::kSoft, std::move(code), std::move(record), std::move(message)});
  };

  std::unordered_map<std::int64_t, const ImageRecord*> by_id;
  for (const auto& img : d.images) {
    if (!by_id.emplace(img.id, &img).second) {
      hard("duplicate_id", image_tag(img.id), "duplicate image id");
    }
    if (img.width <= 0 || img.height <= 0) {
      hard("non_positive_size", image_tag(img.id), "image width and height must be positive");
    }
  }

  std::unordered_set<std::int64_t> seen;
  for (const auto& ann : d.annotations) {
    const std::string tag = annotation_tag(ann.id);
    if (!seen.insert(ann.id).second) hard("duplicate_id", tag, "duplicate annotation id");
    const BBox& b = ann.bbox;
    const bool box_ok = is_valid(b);
    if (!box_ok) hard("non_positive_size", tag, "bbox must be finite with positive width and height");

    auto it = by_id.find(ann.image_id);
    if (it == by_id.end()) {
      hard("dangling_image_id", tag, "references missing image " + std::to_string(ann.image_id));
      continue;
    }
    const ImageRecord& img = *it->second;
    if (!box_ok || img.width <= 0 || img.height <= 0) continue;

    const double w = img.width;
    const double h = img.height;
    const double cw = std::min(b.right(), w) - std::max(b.x, 0.0);
    const double ch = std::min(b.bottom(), h) - std::max(b.y, 0.0);
    const double pad_x = 0.1 * w;
    const double pad_y = 0.1 * h;
    if (cw <= 0.0 || ch <= 0.0) {
      soft("zero_area_after_clamp", tag, "bbox lies entirely outside the image");
    } else if (b.x < -pad_x || b.y < -pad_y || b.right() > w + pad_x || b.bottom() > h + pad_y) {
      soft("outside_padded_frame", tag, "bbox leaves the 10%-padded image frame");
    } else if (b.x < 0.0 || b.y < 0.0 || b.right() > w || b.bottom() > h) {
      soft("crosses_image_border", tag, "bbox extends past the image border");
    }
  }
  return report;
}

}  // namespace tinyfusion
