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

#include "medaug/corpus.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <set>

#include "medaug/common.hpp"

namespace medaug {

namespace {

struct SourceName {
  Source value;
  std::string_view name;
};

constexpr SourceName kSources[] = {
    {Source::kEurorad, "eurorad"},   {Source::kRadiopaedia, "radiopaedia"},
    {Source::kPmc, "pmc"},           {Source::kMimic, "mimic"},
    {Source::kPadchest, "padchest"}, {Source::kDeeplesion, "deeplesion"},
    {Source::kLld, "lld"},           {Source::kMamamia, "mamamia"},
    {Source::kQuilt, "quilt"},       {Source::kVqaBenchmark, "vqa_benchmark"},
    {Source::kOther, "other"},
};

constexpr std::string_view kModalityNames[] = {
    "XRay",           "DSA",        "CT",      "MR",
    "PET_SPECT",      "Ultrasound", "Histopathology",
    "SimulatedChart", "NonMedical", "Other",
};

bool nonempty(const std::optional<std::string>& s) {
  return s && !trim(*s).empty();
}

std::optional<std::string> opt_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

}  // namespace

std::string_view to_string(Source s) {
  for (const auto& e : kSources)
    if (e.value == s) return e.name;
  return "other";
}

Source parse_source(std::string_view s) {
  for (const auto& e : kSources)
    if (e.name == s) return e.value;
  throw_data("unknown source: " + std::string(s));
}

std::string_view to_string(Language l) { return l == Language::kZh ? "zh" : "en"; }

Language parse_language(std::string_view s) {
  if (s == "en") return Language::kEn;
  if (s == "zh") return Language::kZh;
  throw_data("unknown language: " + std::string(s));
}

std::string_view to_string(ModalityLabel m) {
  return kModalityNames[static_cast<int>(m)];
}

ModalityLabel parse_modality(std::string_view s) {
  for (int i = 0; i < static_cast<int>(std::size(kModalityNames)); ++i) {
    if (kModalityNames[i] == s) return static_cast<ModalityLabel>(i);
  }
  throw_data("unknown modality label: " + std::string(s));
}

bool operator==(const Roi& a, const Roi& b) {
  return a.x0 == b.x0 && a.y0 == b.y0 && a.x1 == b.x1 && a.y1 == b.y1 &&
         a.label == b.label;
}

bool operator==(const ImageRef& a, const ImageRef& b) {
  return a.image_id == b.image_id && a.uri == b.uri && a.caption == b.caption &&
         a.rois == b.rois && a.volume_id == b.volume_id &&
         a.slice_index == b.slice_index && a.annotated_slice == b.annotated_slice &&
         a.findings == b.findings;
}

bool operator==(const OriginalAnnotation& a, const OriginalAnnotation& b) {
  return a.image_findings == b.image_findings && a.discussion == b.discussion;
}

bool operator==(const CaseRecord& a, const CaseRecord& b) {
  return a.id == b.id && a.source == b.source && a.images == b.images &&
         a.clinical_history == b.clinical_history &&
         a.image_findings == b.image_findings && a.discussion == b.discussion &&
         a.modality_label == b.modality_label &&
         a.human_annotated == b.human_annotated && a.language == b.language &&
         a.original_annotation == b.original_annotation;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

json to_json(const Roi& roi) {
  return {{"box", {roi.x0, roi.y0, roi.x1, roi.y1}}, {"label", roi.label}};
}

json to_json(const ImageRef& image) {
  json j = {{"image_id", image.image_id},
            {"uri", image.uri},
            {"annotated_slice", image.annotated_slice}};
  if (image.caption) j["caption"] = *image.caption;
  if (!image.rois.empty()) {
    j["rois"] = json::array();
    for (const auto& r : image.rois) j["rois"].push_back(to_json(r));
  }
  if (image.volume_id) j["volume_id"] = *image.volume_id;
  if (image.slice_index) j["slice_index"] = *image.slice_index;
  if (image.findings) j["findings"] = *image.findings;
  return j;
}

json to_json(const CaseRecord& r) {
  json j = {{"id", r.id},
            {"source", to_string(r.source)},
            {"human_annotated", r.human_annotated},
            {"language", to_string(r.language)},
            {"images", json::array()}};
  for (const auto& im : r.images) j["images"].push_back(to_json(im));
  if (r.clinical_history) j["clinical_history"] = *r.clinical_history;
  if (r.image_findings) j["image_findings"] = *r.image_findings;
  if (r.discussion) j["discussion"] = *r.discussion;
  if (r.modality_label) j["modality_label"] = to_string(*r.modality_label);
  if (r.original_annotation) {
    json o = json::object();
    if (r.original_annotation->image_findings)
      o["image_findings"] = *r.original_annotation->image_findings;
    if (r.original_annotation->discussion)
      o["discussion"] = *r.original_annotation->discussion;
    j["original_annotation"] = o;
  }
  return j;
}

CaseRecord case_from_json(const json& j) {
  if (!j.is_object()) throw_data("record is not an object");
  CaseRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.source = parse_source(j.value("source", "other"));
    r.clinical_history = opt_string(j, "clinical_history");
    r.image_findings = opt_string(j, "image_findings");
    r.discussion = opt_string(j, "discussion");
    if (auto m = opt_string(j, "modality_label")) r.modality_label = parse_modality(*m);
    r.human_annotated = j.value("human_annotated", false);
    r.language = parse_language(j.value("language", "en"));
    if (j.contains("original_annotation") && j["original_annotation"].is_object()) {
      const auto& o = j["original_annotation"];
      r.original_annotation =
          OriginalAnnotation{opt_string(o, "image_findings"), opt_string(o, "discussion")};
    }
    for (const auto& ji : j.value("images", json::array())) {
      ImageRef im;
      im.image_id = ji.at("image_id").get<std::string>();
      im.uri = ji.value("uri", "");
      im.caption = opt_string(ji, "caption");
      im.volume_id = opt_string(ji, "volume_id");
      if (ji.contains("slice_index") && !ji["slice_index"].is_null()) {
        im.slice_index = ji["slice_index"].get<int>();
      }
      im.annotated_slice = ji.value("annotated_slice", false);
      im.findings = opt_string(ji, "findings");
      for (const auto& jr : ji.value("rois", json::array())) {
        const auto box = jr.at("box").get<std::vector<double>>();
        if (box.size() != 4) throw_data("roi box needs 4 coordinates");
        im.rois.push_back({box[0], box[1], box[2], box[3], jr.value("label", "")});
      }
      r.images.push_back(std::move(im));
    }
  } catch (const json::exception& e) {
    throw_data(std::string("malformed record: ") + e.what());
  }
  if (auto why = validate(r)) throw_data(*why);
  return r;
}

std::optional<std::string> validate(const CaseRecord& r) {
  if (r.id.empty()) return "empty id";
  if (r.source != Source::kOther && r.images.empty()) {
    return "no images for image-bearing source";
  }
  std::set<std::string> image_ids;
  std::map<std::string, std::set<int>> slices;
  bool any_caption = false;
  for (const auto& im : r.images) {
    if (im.image_id.empty()) return "empty image_id";
    if (!image_ids.insert(im.image_id).second) return "duplicate image_id " + im.image_id;
    if (im.uri.empty()) return "empty uri for image " + im.image_id;
    if (im.slice_index && !im.volume_id) return "slice_index without volume_id";
    if (im.volume_id && !im.slice_index) return "volume_id without slice_index";
    if (im.slice_index) {
      if (*im.slice_index < 0) return "negative slice_index";
      if (!slices[*im.volume_id].insert(*im.slice_index).second) {
        return fmt::format("duplicate slice_index {} in volume {}", *im.slice_index,
                           *im.volume_id);
      }
    }
    for (const auto& roi : im.rois) {
      const bool in_range = roi.x0 >= 0 && roi.y0 >= 0 && roi.x1 <= 1 && roi.y1 <= 1;
      if (!in_range || !(roi.x0 < roi.x1) || !(roi.y0 < roi.y1)) {
        return "invalid roi on image " + im.image_id;
      }
    }
    any_caption = any_caption || nonempty(im.caption) || nonempty(im.findings);
  }
  if (r.human_annotated && !any_caption && !nonempty(r.image_findings) &&
      !nonempty(r.discussion)) {
    return "human_annotated record without annotation text";
  }
  return std::nullopt;
}

RecordFormat parse_record_format(std::string_view tag) {
  if (tag == "cases") return RecordFormat::kCases;
  if (tag == "caption_pairs") return RecordFormat::kCaptionPairs;
  throw_usage("unknown format tag: " + std::string(tag));
}

json to_json(const Reject& reject) {
  return {{"line", reject.line}, {"id", reject.id}, {"reason", reject.reason}};
}

namespace {

CaseRecord caption_pair_from_json(const json& j) {
  CaseRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.source = parse_source(j.value("source", "pmc"));
    ImageRef im;
    im.image_id = r.id;
    im.uri = j.at("image").get<std::string>();
    im.caption = opt_string(j, "caption");
    r.images.push_back(std::move(im));
  } catch (const json::exception& e) {
    throw_data(std::string("malformed record: ") + e.what());
  }
  if (auto why = validate(r)) throw_data(*why);
  return r;
}

}  // namespace

IngestResult ingest_lines(const std::vector<RawLine>& lines, RecordFormat format) {
  IngestResult out;
  std::set<std::string> ids;
  for (const auto& raw : lines) {
    json j;
    try {
      j = json::parse(raw.text);
    } catch (const json::parse_error&) {
      out.rejects.push_back({raw.line, "", "malformed JSON"});
      continue;
    }
    std::string id;
    if (j.is_object() && j.contains("id") && j["id"].is_string()) {
      id = j["id"].get<std::string>();
    }
    try {
      CaseRecord r = format == RecordFormat::kCases ? case_from_json(j)
                                                    : caption_pair_from_json(j);
      if (!ids.insert(r.id).second) {
        out.rejects.push_back({raw.line, id, "duplicate id"});
        continue;
      }
      out.records.push_back(std::move(r));
    } catch (const Error& e) {
      out.rejects.push_back({raw.line, id, e.what()});
    }
  }
  return out;
}

IngestResult ingest(const std::string& path, RecordFormat format) {
  return ingest_lines(read_nonblank_lines(path), format);
}

CaptionFilterResult filter_short_captions(const std::vector<CaseRecord>& records,
                                          int min_words) {
  if (min_words < 1) throw_usage("min_words must be >= 1");
  CaptionFilterResult out;
  for (const auto& r : records) {
    bool keep = nonempty(r.image_findings) || nonempty(r.discussion);
    for (const auto& im : r.images) {
      if (keep) break;
      if (nonempty(im.findings)) keep = true;
      if (im.caption && word_count(*im.caption) >= static_cast<std::size_t>(min_words)) {
        keep = true;
      }
    }
    (keep ? out.kept : out.dropped).push_back(r);
  }
  return out;
}

std::vector<std::size_t> even_spacing(std::size_t n, std::size_t m) {
  std::vector<std::size_t> out;
  if (m == 0 || n == 0) return out;
  if (m >= n) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  std::set<std::size_t> picked;
  if (m == 1) {
    picked.insert(0);
  } else {
    // round(i*(n-1)/(m-1)) half-up, in integers.
    for (std::size_t i = 0; i < m; ++i) {
      picked.insert((2 * i * (n - 1) + (m - 1)) / (2 * (m - 1)));
    }
  }
  for (std::size_t i = 0; picked.size() < m && i < n; ++i) picked.insert(i);
  return {picked.begin(), picked.end()};
}

std::vector<ImageRef> sample_slices(const std::vector<ImageRef>& volume, int cap) {
  if (cap < 1) throw_usage("slice cap must be >= 1");
  if (volume.empty()) return {};
  for (const auto& im : volume) {
    if (!im.volume_id) throw_data("missing volume_id on image " + im.image_id);
    if (*im.volume_id != *volume.front().volume_id) throw_data("mixed volume_ids");
    if (!im.slice_index) throw_data("missing slice_index on image " + im.image_id);
  }
  std::vector<ImageRef> sorted = volume;
  std::sort(sorted.begin(), sorted.end(), [](const ImageRef& a, const ImageRef& b) {
    return *a.slice_index < *b.slice_index;
  });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (*sorted[i].slice_index == *sorted[i - 1].slice_index) {
      throw_data(fmt::format("duplicate slice_index {}", *sorted[i].slice_index));
    }
  }
  const auto limit = static_cast<std::size_t>(cap);
  if (sorted.size() <= limit) return sorted;

  std::vector<ImageRef> annotated;
  std::vector<ImageRef> rest;
  for (auto& im : sorted) (im.annotated_slice ? annotated : rest).push_back(im);

  std::vector<ImageRef> out;
  if (annotated.size() > limit) {
    for (std::size_t i : even_spacing(annotated.size(), limit)) out.push_back(annotated[i]);
    return out;
  }
  out = annotated;
  for (std::size_t i : even_spacing(rest.size(), limit - annotated.size())) {
    out.push_back(rest[i]);
  }
  std::sort(out.begin(), out.end(), [](const ImageRef& a, const ImageRef& b) {
    return *a.slice_index < *b.slice_index;
  });
  return out;
}

std::vector<ImageRef> select_images(const std::vector<ImageRef>& images, int cap) {
  std::vector<std::size_t> keep;
  std::map<std::string, std::vector<std::size_t>> volumes;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].volume_id) {
      volumes[*images[i].volume_id].push_back(i);
    } else {
      keep.push_back(i);
    }
  }
  for (const auto& [vid, members] : volumes) {
    std::vector<ImageRef> volume;
    for (std::size_t i : members) volume.push_back(images[i]);
    for (const auto& picked : sample_slices(volume, cap)) {
      for (std::size_t i : members) {
        if (images[i].image_id == picked.image_id) keep.push_back(i);
      }
    }
  }
  std::sort(keep.begin(), keep.end());
  std::vector<ImageRef> out;
  for (std::size_t i : keep) out.push_back(images[i]);
  return out;
}

}  // namespace medaug
