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

#include <fmt/format.h>

#include <algorithm>

#include "medaug/augment.hpp"
#include "medaug/common.hpp"
#include "medaug/corpus.hpp"

namespace medaug {

namespace {

bool nonempty(const std::optional<std::string>& s) { return s && !trim(*s).empty(); }

constexpr const char* kSegmentSystem =
    "You are a radiologist restructuring an expert case annotation. Use precise medical "
    "terminology, keep a formal tone and state only facts supported by the annotation.";

std::string annotation_text(const CaseRecord& r) {
  std::string out;
  if (nonempty(r.clinical_history)) out += "Clinical history: " + *r.clinical_history + "\n";
  for (std::size_t i = 0; i < r.images.size(); ++i) {
    if (nonempty(r.images[i].caption)) {
      out += fmt::format("Image {} caption: {}\n", i + 1, *r.images[i].caption);
    }
  }
  if (nonempty(r.image_findings)) out += "Image findings: " + *r.image_findings + "\n";
  if (nonempty(r.discussion)) out += "Discussion: " + *r.discussion + "\n";
  return out;
}

std::string ask_report(augment::PromptBundle bundle, const char* task, llm::Client& client,
                       const std::string& model) {
  bundle.format_block = augment::kFormatBlock;
  std::vector<std::string> keys;
  return *augment::request_parsed(augment::render(bundle, task, model), true, client, keys)
              .report;
}

}  // namespace

CaseRecord segment_long_annotation(const CaseRecord& record, llm::Client& client,
                                   const std::string& model) {
  if (!record.human_annotated) {
    throw_data("segmentation requires a human_annotated record: " + record.id);
  }
  const bool per_image_done =
      std::all_of(record.images.begin(), record.images.end(),
                  [](const ImageRef& im) { return nonempty(im.findings); });
  if (per_image_done && nonempty(record.image_findings) && nonempty(record.discussion)) {
    return record;
  }
  const std::string source = annotation_text(record);
  if (!nonempty(record.image_findings) && !nonempty(record.discussion) &&
      std::none_of(record.images.begin(), record.images.end(),
                   [](const ImageRef& im) { return nonempty(im.caption); })) {
    throw_data("no annotation to segment in " + record.id);
  }

  CaseRecord out = record;
  if (!out.original_annotation) {
    out.original_annotation = OriginalAnnotation{record.image_findings, record.discussion};
  }

  const std::size_t n = out.images.size();
  std::string per_image;
  for (std::size_t i = 0; i < n; ++i) {
    auto& im = out.images[i];
    if (!nonempty(im.findings)) {
      augment::PromptBundle b;
      b.system = kSegmentSystem;
      b.instruction = fmt::format(
          "Using the case annotation, write the findings visible in image {} of {} (id {}) "
          "only. Put them in the Report field; no questions are needed.",
          i + 1, n, im.image_id);
      b.body = source;
      b.attachments = {im.uri};
      im.findings = ask_report(std::move(b), "segment_image_findings", client, model);
    }
    per_image += fmt::format("Image {}: {}\n", i + 1, *im.findings);
  }

  {
    augment::PromptBundle b;
    b.system = kSegmentSystem;
    b.instruction =
        "Consolidate the per-image findings into the overall image findings of the case. "
        "Put them in the Report field; no questions are needed.";
    b.body = per_image;
    out.image_findings = ask_report(std::move(b), "segment_consolidate", client, model);
  }
  {
    augment::PromptBundle b;
    b.system = kSegmentSystem;
    b.instruction =
        "Extend the image findings into the discussion section of the case: differential "
        "diagnosis, the reasoning that supports the final diagnosis, and management "
        "implications. Put it in the Report field; no questions are needed.";
    b.body = "Image findings: " + *out.image_findings + "\n" + source;
    out.discussion = ask_report(std::move(b), "segment_discussion", client, model);
  }
  return out;
}

}  // namespace medaug
