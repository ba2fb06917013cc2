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

#include <gtest/gtest.h>

#include <random>

#include "support/oracles.hpp"
#include "tinyfusion/errors.hpp"

namespace tinyfusion {
namespace {

std::string dataset_with_counts(const std::vector<int>& boxes_per_image) {
  Dataset d;
  std::int64_t ann = 1;
  for (std::size_t i = 0; i < boxes_per_image.size(); ++i) {
    d.images.push_back({static_cast<std::int64_t>(i + 1), 640, 512, std::nullopt});
    for (int b = 0; b < boxes_per_image[i]; ++b) {
      d.annotations.push_back({ann++, static_cast<std::int64_t>(i + 1), {1.0 * b, 2.0, 4.0, 4.0}, false});
    }
  }
  return serialize_annotations(d);
}

TEST(ParseAnnotations, EmptyDataset) {
  const Dataset d = parse_annotations(R"({"images":[],"annotations":[]})");
  EXPECT_TRUE(d.images.empty());
  EXPECT_TRUE(d.annotations.empty());
}

TEST(ParseAnnotations, MinimalDataset) {
  const Dataset d = parse_annotations(
      R"({"images":[{"id":1,"width":640,"height":512}],
          "annotations":[{"id":7,"image_id":1,"bbox":[10,10,16,16]}]})");
  ASSERT_EQ(d.images.size(), 1u);
  ASSERT_EQ(d.annotations.size(), 1u);
  EXPECT_EQ(d.images[0].width, 640);
  EXPECT_EQ(d.images[0].height, 512);
  EXPECT_FALSE(d.images[0].file_name.has_value());
  EXPECT_EQ(d.annotations[0].image_id, 1);
  EXPECT_EQ(d.annotations[0].bbox, (BBox{10, 10, 16, 16}));
  EXPECT_FALSE(d.annotations[0].ignore);
  EXPECT_TRUE(validate(d).valid);
}

TEST(ParseAnnotations, KeepsFractionalCoordinatesAndUnknownFields) {
  const Dataset d = parse_annotations(
      R"({"info":{"x":1},"images":[{"id":3,"width":10,"height":10,"file_name":"a.jpg","extra":true}],
          "annotations":[{"id":1,"image_id":3,"bbox":[0.25,1.5,2.75,3.125],"ignore":true,"area":9}]})");
  EXPECT_EQ(d.images[0].file_name.value(), "a.jpg");
  EXPECT_EQ(d.annotations[0].bbox, (BBox{0.25, 1.5, 2.75, 3.125}));
  EXPECT_TRUE(d.annotations[0].ignore);
}

TEST(ParseAnnotations, DanglingImageIdNamesAnnotation) {
  try {
    parse_annotations(R"({"images":[{"id":1,"width":4,"height":4}],
                          "annotations":[{"id":5,"image_id":99,"bbox":[0,0,1,1]}]})");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.record_id(), 5);
  }
}

TEST(ParseAnnotations, MalformedJsonReportsOffset) {
  try {
    parse_annotations(R"({"images":[}, "annotations":[]})");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 12u);
  }
}

TEST(ParseAnnotations, MissingFieldNamesIt) {
  try {
    parse_annotations(R"({"images":[{"id":1,"height":4}],"annotations":[]})");
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.field(), "width");
  }
  try {
    parse_annotations(R"({"images":[]})");
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.field(), "annotations");
  }
  EXPECT_THROW(parse_annotations(R"({"images":[],"annotations":[{"id":1,"image_id":1,"bbox":[1,2,3]}]})"),
               SchemaError);
}

TEST(ParseAnnotations, NonPositiveSizesNameRecord) {
  try {
    parse_annotations(R"({"images":[{"id":4,"width":0,"height":4}],"annotations":[]})");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.record_id(), 4);
  }
  try {
    parse_annotations(R"({"images":[{"id":1,"width":4,"height":4}],
                          "annotations":[{"id":8,"image_id":1,"bbox":[0,0,3,-1]}]})");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.record_id(), 8);
  }
}

TEST(ParseAnnotations, DuplicateIdsRejected) {
  EXPECT_THROW(parse_annotations(R"({"images":[{"id":1,"width":4,"height":4},{"id":1,"width":4,"height":4}],
                                     "annotations":[]})"),
               ValidationError);
  EXPECT_THROW(parse_annotations(R"({"images":[{"id":1,"width":4,"height":4}],
                                     "annotations":[{"id":2,"image_id":1,"bbox":[0,0,1,1]},
                                                    {"id":2,"image_id":1,"bbox":[0,0,1,1]}]})"),
               ValidationError);
}

TEST(ParseAnnotations, RoundTripProperty) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    oracle::SyntheticShape shape;
    shape.max_images = 8;
    shape.max_boxes = 30;
    shape.ignore_fraction = 0.3;
    Dataset d = oracle::synthetic_dataset(seed, shape);
    if (!d.images.empty()) d.images[0].file_name = "img \"quoted\".png";
    EXPECT_EQ(parse_annotations(serialize_annotations(d)), d) << "seed " << seed;
  }
}

TEST(FilterImages, StrictThreshold) {
  const Dataset d = parse_annotations(dataset_with_counts({150, 250, 199, 200}));
  const Dataset kept = filter_images(d, 200);
  ASSERT_EQ(kept.images.size(), 2u);
  EXPECT_EQ(kept.images[0].id, 1);
  EXPECT_EQ(kept.images[1].id, 3);
  EXPECT_EQ(kept.annotations.size(), 150u + 199u);
}

TEST(FilterImages, ThresholdOneKeepsOnlyEmptyImages) {
  const Dataset d = parse_annotations(dataset_with_counts({0, 1, 0, 3}));
  const Dataset kept = filter_images(d, 1);
  ASSERT_EQ(kept.images.size(), 2u);
  EXPECT_EQ(kept.images[0].id, 1);
  EXPECT_EQ(kept.images[1].id, 3);
  EXPECT_TRUE(kept.annotations.empty());
}

TEST(FilterImages, EmptyDataset) { EXPECT_EQ(filter_images(Dataset{}, 200), Dataset{}); }

TEST(FilterImages, IgnoreBoxesDoNotCount) {
  Dataset d = parse_annotations(dataset_with_counts({3}));
  d.annotations[0].ignore = true;
  const Dataset kept = filter_images(d, 3);
  ASSERT_EQ(kept.images.size(), 1u);
  EXPECT_EQ(kept.annotations.size(), 3u);  // ignore boxes travel with their image
}

TEST(FilterImages, IdempotentAndMembershipOnly) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset d = oracle::synthetic_dataset(seed);
    const Dataset copy = d;
    for (int threshold : {1, 20, 100, 200}) {
      const Dataset once = filter_images(d, threshold);
      EXPECT_EQ(filter_images(once, threshold), once);
      // Survivors are unchanged records, in input order.
      std::size_t cursor = 0;
      for (const auto& a : once.annotations) {
        while (cursor < d.annotations.size() && !(d.annotations[cursor] == a)) ++cursor;
        ASSERT_LT(cursor, d.annotations.size());
      }
    }
    EXPECT_EQ(d, copy);
  }
}

TEST(Validate, WellFormed) {
  const Dataset d = parse_annotations(dataset_with_counts({3, 2}));
  const ValidationReport r = validate(d);
  EXPECT_TRUE(r.valid);
  EXPECT_TRUE(r.findings.empty());
}

TEST(Validate, ZeroWidthBoxIsHard) {
  Dataset d = parse_annotations(dataset_with_counts({1}));
  d.annotations[0].bbox.w = 0.0;
  const ValidationReport r = validate(d);
  EXPECT_FALSE(r.valid);
  ASSERT_EQ(r.findings.size(), 1u);
  EXPECT_EQ(r.findings[0].severity, Severity::kHard);
  EXPECT_EQ(r.findings[0].record, "annotation:1");
}

TEST(Validate, BoxPastEdgeIsSoft) {
  Dataset d;
  d.images.push_back({1, 640, 512, std::nullopt});
  d.annotations.push_back({1, 1, {630, 100, 15, 15}, false});  // 5 px past the right edge
  const ValidationReport r = validate(d);
  EXPECT_TRUE(r.valid);
  ASSERT_EQ(r.findings.size(), 1u);
  EXPECT_EQ(r.findings[0].severity, Severity::kSoft);
  EXPECT_EQ(r.findings[0].code, "crosses_image_border");
}

TEST(Validate, SoftTiers) {
  Dataset d;
  d.images.push_back({1, 100, 100, std::nullopt});
  d.annotations.push_back({1, 1, {95, 10, 20, 10}, false});    // right edge 115 > 110
  d.annotations.push_back({2, 1, {120, 10, 5, 5}, false});     // fully outside
  d.annotations.push_back({3, 1, {-5, -5, 10, 10}, false});    // inside the padding
  const ValidationReport r = validate(d);
  EXPECT_TRUE(r.valid);
  ASSERT_EQ(r.soft_count(), 3u);
  EXPECT_EQ(r.findings[0].code, "outside_padded_frame");
  EXPECT_EQ(r.findings[1].code, "zero_area_after_clamp");
  EXPECT_EQ(r.findings[2].code, "crosses_image_border");
}

TEST(Validate, IntegrityViolations) {
  Dataset d;
  d.images.push_back({1, 10, 10, std::nullopt});
  d.images.push_back({1, 0, 10, std::nullopt});
  d.annotations.push_back({1, 2, {0, 0, 1, 1}, false});
  d.annotations.push_back({1, 1, {0, 0, 1, 1}, false});
  const ValidationReport r = validate(d);
  EXPECT_FALSE(r.valid);
  EXPECT_EQ(r.hard_count(), 4u);  // duplicate image, zero width, dangling ref, duplicate annotation
}

}  // namespace
}  // namespace tinyfusion
