// Copyright 2026 The medaug Authors
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

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "medaug/corpus.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "support/support.hpp"

namespace medaug {
namespace {

using testing::fixture;

using testing::make_volume;

TEST(Ingest, FixtureCorpus) {
  auto res = ingest(fixture("e2e/cases.jsonl").string(), RecordFormat::kCases);
  ASSERT_EQ(res.records.size(), 4u);
  ASSERT_EQ(res.rejects.size(), 1u);
  EXPECT_EQ(res.rejects[0].id, "bad-005");
  EXPECT_EQ(res.rejects[0].line, 5u);
  EXPECT_EQ(res.rejects[0].reason, "slice_index without volume_id");
  const auto& c1 = res.records[0];
  EXPECT_EQ(c1.source, Source::kEurorad);
  EXPECT_TRUE(c1.human_annotated);
  ASSERT_EQ(c1.images[0].rois.size(), 1u);
  EXPECT_DOUBLE_EQ(c1.images[0].rois[0].x0, 0.42);
  EXPECT_EQ(res.records[2].images.size(), 24u);
}

TEST(Ingest, MalformedAndDuplicateLines) {
  std::vector<RawLine> lines = {
      {1, "{not json"},
      {2, R"({"id":"a","source":"other"})"},
      {3, R"({"id":"a","source":"other"})"},
      {4, R"({"id":"b","source":"martian"})"},
  };
  auto res = ingest_lines(lines, RecordFormat::kCases);
  EXPECT_EQ(res.records.size(), 1u);
  ASSERT_EQ(res.rejects.size(), 3u);
  EXPECT_EQ(res.rejects[0].reason, "malformed JSON");
  EXPECT_EQ(res.rejects[1].reason, "duplicate id");
  EXPECT_NE(res.rejects[2].reason.find("unknown source"), std::string::npos);
}

TEST(Ingest, CaptionPairs) {
  std::vector<RawLine> lines = {
      {1, R"({"id":"p1","image":"x.png","caption":"a caption"})"},
      {2, R"({"id":"p2","caption":"no image"})"},
  };
  auto res = ingest_lines(lines, RecordFormat::kCaptionPairs);
  ASSERT_EQ(res.records.size(), 1u);
  EXPECT_EQ(res.records[0].source, Source::kPmc);
  EXPECT_EQ(res.records[0].images[0].caption.value(), "a caption");
  EXPECT_EQ(res.rejects.size(), 1u);
  EXPECT_THROW(parse_record_format("csv"), Error);
}

TEST(Validate, Rules) {
  CaseRecord r;
  r.id = "x";
  r.source = Source::kPmc;
  EXPECT_EQ(validate(r).value(), "no images for image-bearing source");
  ImageRef im;
  im.image_id = "i";
  im.uri = "i.png";
  im.rois.push_back({0.5, 0.1, 0.4, 0.9, "flipped"});
  r.images.push_back(im);
  EXPECT_EQ(validate(r).value(), "invalid roi on image i");
  r.images[0].rois.clear();
  r.images.push_back(r.images[0]);
  EXPECT_EQ(validate(r).value(), "duplicate image_id i");
  r.images.pop_back();
  r.human_annotated = true;
  EXPECT_EQ(validate(r).value(), "human_annotated record without annotation text");
  r.image_findings = "findings";
  EXPECT_FALSE(validate(r).has_value());
}

TEST(CaseJson, RoundTrip) {
  auto res = ingest(fixture("e2e/cases.jsonl").string(), RecordFormat::kCases);
  for (const auto& r : res.records) {
    EXPECT_EQ(case_from_json(to_json(r)), r) << r.id;
  }
}

TEST(Enums, RoundTrip) {
  for (auto m : kAllModalities) EXPECT_EQ(parse_modality(to_string(m)), m);
  EXPECT_EQ(parse_source(to_string(Source::kVqaBenchmark)), Source::kVqaBenchmark);
  EXPECT_EQ(parse_language("zh"), Language::kZh);
  EXPECT_THROW(parse_language("fr"), Error);
}

TEST(CaptionFilter, DropsShortOnly) {
  auto res = ingest(fixture("e2e/cases.jsonl").string(), RecordFormat::kCases);
  auto f = filter_short_captions(res.records, 20);
  ASSERT_EQ(f.dropped.size(), 1u);
  EXPECT_EQ(f.dropped[0].id, "pmc-004");
  EXPECT_EQ(f.kept.size(), 3u);
  EXPECT_THROW(filter_short_captions(res.records, 0), Error);
}

TEST(CaptionFilter, BoundaryAtMinWords) {
  CaseRecord r;
  r.id = "p";
  r.source = Source::kPmc;
  ImageRef im;
  im.image_id = "i";
  im.uri = "i.png";
  std::string cap;
  for (int i = 0; i < 19; ++i) cap += "w ";
  im.caption = cap;
  r.images.push_back(im);
  EXPECT_EQ(filter_short_captions({r}, 20).kept.size(), 0u);
  r.images[0].caption = cap + "w";
  EXPECT_EQ(filter_short_captions({r}, 20).kept.size(), 1u);
}

TEST(EvenSpacing, Examples) {
  EXPECT_EQ(even_spacing(10, 1), (std::vector<std::size_t>{0}));
  EXPECT_EQ(even_spacing(5, 3), (std::vector<std::size_t>{0, 2, 4}));
  EXPECT_EQ(even_spacing(3, 5), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(even_spacing(0, 3), (std::vector<std::size_t>{}));
  EXPECT_EQ(even_spacing(24, 18).size(), 18u);
}

TEST(EvenSpacing, MatchesRationalOracle) {
  for (std::size_t n = 0; n <= 120; ++n) {
    for (std::size_t m = 0; m <= n + 2; ++m) {
      auto got = even_spacing(n, m);
      ASSERT_EQ(got, oracle::even_spacing(n, m)) << n << " " << m;
      ASSERT_EQ(got.size(), std::min(n, m));
      if (m >= 2 && m <= n) {
        EXPECT_EQ(got.front(), 0u);
        EXPECT_EQ(got.back(), n - 1);
      }
    }
  }
}

TEST(SampleSlices, FixtureVolume) {
  auto res = ingest(fixture("e2e/cases.jsonl").string(), RecordFormat::kCases);
  auto picked = sample_slices(res.records[2].images, 20);
  ASSERT_EQ(picked.size(), 20u);
  std::set<int> idx;
  for (const auto& p : picked) idx.insert(*p.slice_index);
  EXPECT_TRUE(idx.count(9));
  EXPECT_TRUE(idx.count(14));
  EXPECT_TRUE(idx.count(0));
  EXPECT_TRUE(idx.count(23));
}

TEST(SampleSlices, RandomizedProperties) {
  SeededRng rng(20260101);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(500);
    const double rate = testing::annotation_rate(rng, trial);
    auto vol = make_volume(rng, n, rate);
    auto out = sample_slices(vol, 20);
    ASSERT_LE(out.size(), 20u);
    ASSERT_EQ(out.size(), std::min<std::size_t>(n, 20));

    std::vector<oracle::Slice> os;
    std::size_t annotated = 0;
    for (const auto& im : vol) {
      os.push_back({*im.slice_index, im.annotated_slice});
      annotated += im.annotated_slice;
    }
    std::vector<int> got;
    for (const auto& im : out) got.push_back(*im.slice_index);
    ASSERT_EQ(got, oracle::sample_slices(os, 20)) << "trial " << trial;
    ASSERT_TRUE(std::is_sorted(got.begin(), got.end()));
    if (annotated <= 20) {
      for (const auto& im : vol) {
        if (im.annotated_slice) {
          ASSERT_TRUE(std::count(got.begin(), got.end(), *im.slice_index)) << trial;
        }
      }
    }
    ASSERT_EQ(sample_slices(out, 20), out);
    auto shuffled = vol;
    rng.shuffle(shuffled);
    ASSERT_EQ(sample_slices(shuffled, 20), out);
  }
}

TEST(SampleSlices, Errors) {
  ImageRef a;
  a.image_id = "a";
  a.uri = "a";
  a.volume_id = "v";
  a.slice_index = 1;
  ImageRef b = a;
  b.image_id = "b";
  EXPECT_THROW(sample_slices({a, b}, 20), Error);
  b.slice_index = 2;
  b.volume_id = "w";
  EXPECT_THROW(sample_slices({a, b}, 20), Error);
  EXPECT_THROW(sample_slices({a}, 0), Error);
  EXPECT_TRUE(sample_slices({}, 20).empty());
}

TEST(SelectImages, KeepsLooseImagesAndCapsEachVolume) {
  SeededRng rng(9);
  auto v1 = make_volume(rng, 30, 0.1);
  std::vector<ImageRef> images;
  ImageRef loose;
  loose.image_id = "loose";
  loose.uri = "loose.png";
  images.push_back(loose);
  images.insert(images.end(), v1.begin(), v1.end());
  auto out = select_images(images, 20);
  EXPECT_EQ(out.size(), 21u);
  EXPECT_EQ(out.front().image_id, "loose");
}

}  // namespace
}  // namespace medaug
