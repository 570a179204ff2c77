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

// Dataset schemas plus ingestion, caption filtering and slice sampling.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "medaug/io.hpp"

namespace medaug {

namespace llm {
class Client;
}

enum class Source {
  kEurorad,
  kRadiopaedia,
  kPmc,
  kMimic,
  kPadchest,
  kDeeplesion,
  kLld,
  kMamamia,
  kQuilt,
  kVqaBenchmark,
  kOther,
};

enum class Language { kEn, kZh };

enum class ModalityLabel {
  kXRay,
  kDSA,
  kCT,
  kMR,
  kPetSpect,
  kUltrasound,
  kHistopathology,
  kSimulatedChart,
  kNonMedical,
  kOther,
};

inline constexpr ModalityLabel kAllModalities[] = {
    ModalityLabel::kXRay,         ModalityLabel::kDSA,
    ModalityLabel::kCT,           ModalityLabel::kMR,
    ModalityLabel::kPetSpect,     ModalityLabel::kUltrasound,
    ModalityLabel::kHistopathology, ModalityLabel::kSimulatedChart,
    ModalityLabel::kNonMedical,   ModalityLabel::kOther,
};

std::string_view to_string(Source s);
std::string_view to_string(Language l);
std::string_view to_string(ModalityLabel m);
Source parse_source(std::string_view s);
Language parse_language(std::string_view s);
/// Exact serialised names only ("XRay", "PET_SPECT", ...).
ModalityLabel parse_modality(std::string_view s);

/// Axis-aligned box in normalised image coordinates.
struct Roi {
  double x0 = 0, y0 = 0, x1 = 1, y1 = 1;
  std::string label;
};

struct ImageRef {
  std::string image_id;
  std::string uri;
  std::optional<std::string> caption;
  std::vector<Roi> rois;
  std::optional<std::string> volume_id;
  std::optional<int> slice_index;
  bool annotated_slice = false;
  /// Per-image findings produced by annotation segmentation.
  std::optional<std::string> findings;
};

/// Annotation text as it arrived, kept when segmentation rewrites it.
struct OriginalAnnotation {
  std::optional<std::string> image_findings;
  std::optional<std::string> discussion;
};

struct CaseRecord {
  std::string id;
  Source source = Source::kOther;
  std::vector<ImageRef> images;
  std::optional<std::string> clinical_history;
  std::optional<std::string> image_findings;
  std::optional<std::string> discussion;
  std::optional<ModalityLabel> modality_label;
  bool human_annotated = false;
  Language language = Language::kEn;
  std::optional<OriginalAnnotation> original_annotation;
};

bool operator==(const Roi& a, const Roi& b);
bool operator==(const ImageRef& a, const ImageRef& b);
bool operator==(const OriginalAnnotation& a, const OriginalAnnotation& b);
bool operator==(const CaseRecord& a, const CaseRecord& b);

json to_json(const Roi& roi);
json to_json(const ImageRef& image);
json to_json(const CaseRecord& record);

/// Parses and validates one record. Throws Error(kData) with the reason.
CaseRecord case_from_json(const json& j);

/// Checks the record-level invariants; returns the first violation.
std::optional<std::string> validate(const CaseRecord& record);

/// Declared line-delimited record schemas.
enum class RecordFormat {
  kCases,         // one CaseRecord per line
  kCaptionPairs,  // {id, image, caption[, source]} pretraining pairs
};

RecordFormat parse_record_format(std::string_view tag);

struct Reject {
  std::size_t line = 0;
  std::string id;
  std::string reason;
};

json to_json(const Reject& reject);

struct IngestResult {
  std::vector<CaseRecord> records;
  std::vector<Reject> rejects;
};

/// Reads a line-delimited file. Invalid rows become rejects; valid rows are
/// returned in file order.
IngestResult ingest(const std::string& path, RecordFormat format);
IngestResult ingest_lines(const std::vector<RawLine>& lines, RecordFormat format);

struct CaptionFilterResult {
  std::vector<CaseRecord> kept;
  std::vector<CaseRecord> dropped;
};

/// A record survives iff it has a caption of at least `min_words`
/// whitespace tokens or other annotation text. Records are never modified.
CaptionFilterResult filter_short_captions(const std::vector<CaseRecord>& records,
                                          int min_words = 20);

/// Picks `m` of `n` candidate positions at round(i*(n-1)/(m-1)),
/// deduplicated then backfilled left to right. Sorted ascending.
std::vector<std::size_t> even_spacing(std::size_t n, std::size_t m);

/// At most `cap` slices of one volume: annotated slices first, remaining
/// budget spread evenly over the rest. Output is sorted by slice_index.
std::vector<ImageRef> sample_slices(const std::vector<ImageRef>& volume,
                                    int cap = 20);

/// Applies sample_slices to every volume among `images`; images without a
/// volume pass through. Original order is kept.
std::vector<ImageRef> select_images(const std::vector<ImageRef>& images, int cap = 20);

/// Rewrites a long human annotation into per-image findings, consolidated
/// findings and a discussion, one templated call each. The incoming
/// findings/discussion are kept in `original_annotation`.
CaseRecord segment_long_annotation(const CaseRecord& record, llm::Client& client,
                                   const std::string& model = "gpt-4o");

}  // namespace medaug
