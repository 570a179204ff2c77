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

#include "medaug/analyze.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <map>

#include "medaug/common.hpp"

namespace medaug::analyze {

namespace {

// Lowercase, punctuation to spaces (keeping '/', '-' and '&'), collapsed.
std::string normalise_reply(std::string_view s) {
  std::string out;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || c == '/' || c == '-' || c == '&') {
      out.push_back(static_cast<char>(std::tolower(u)));
    } else {
      out.push_back(' ');
    }
  }
  return collapse_whitespace(out);
}

struct Synonym {
  std::string_view phrase;
  ModalityLabel label;
};

// Phrases are already in normalise_reply form.
constexpr Synonym kSynonyms[] = {
    {"xray", ModalityLabel::kXRay},
    {"x-ray", ModalityLabel::kXRay},
    {"x ray", ModalityLabel::kXRay},
    {"radiograph", ModalityLabel::kXRay},
    {"radiography", ModalityLabel::kXRay},
    {"chest radiograph", ModalityLabel::kXRay},
    {"chest x-ray", ModalityLabel::kXRay},
    {"plain film", ModalityLabel::kXRay},
    {"mammography", ModalityLabel::kXRay},
    {"mammogram", ModalityLabel::kXRay},
    {"fluoroscopy", ModalityLabel::kXRay},
    {"dsa", ModalityLabel::kDSA},
    {"digital subtraction angiography", ModalityLabel::kDSA},
    {"angiography", ModalityLabel::kDSA},
    {"angiogram", ModalityLabel::kDSA},
    {"ct", ModalityLabel::kCT},
    {"ct scan", ModalityLabel::kCT},
    {"cta", ModalityLabel::kCT},
    {"computed tomography", ModalityLabel::kCT},
    {"ct angiography", ModalityLabel::kCT},
    {"mr", ModalityLabel::kMR},
    {"mri", ModalityLabel::kMR},
    {"magnetic resonance", ModalityLabel::kMR},
    {"magnetic resonance imaging", ModalityLabel::kMR},
    {"pet", ModalityLabel::kPetSpect},
    {"spect", ModalityLabel::kPetSpect},
    {"pet/spect", ModalityLabel::kPetSpect},
    {"pet_spect", ModalityLabel::kPetSpect},
    {"pet-ct", ModalityLabel::kPetSpect},
    {"pet/ct", ModalityLabel::kPetSpect},
    {"positron emission tomography", ModalityLabel::kPetSpect},
    {"nuclear medicine", ModalityLabel::kPetSpect},
    {"scintigraphy", ModalityLabel::kPetSpect},
    {"ultrasound", ModalityLabel::kUltrasound},
    {"ultrasonography", ModalityLabel::kUltrasound},
    {"sonography", ModalityLabel::kUltrasound},
    {"us", ModalityLabel::kUltrasound},
    {"doppler", ModalityLabel::kUltrasound},
    {"echocardiography", ModalityLabel::kUltrasound},
    {"histopathology", ModalityLabel::kHistopathology},
    {"histology", ModalityLabel::kHistopathology},
    {"pathology", ModalityLabel::kHistopathology},
    {"h&e", ModalityLabel::kHistopathology},
    {"microscopy", ModalityLabel::kHistopathology},
    {"cytology", ModalityLabel::kHistopathology},
    {"whole slide image", ModalityLabel::kHistopathology},
    {"chart", ModalityLabel::kSimulatedChart},
    {"statistical chart", ModalityLabel::kSimulatedChart},
    {"simulated chart", ModalityLabel::kSimulatedChart},
    {"simulatedchart", ModalityLabel::kSimulatedChart},
    {"diagram", ModalityLabel::kSimulatedChart},
    {"plot", ModalityLabel::kSimulatedChart},
    {"graph", ModalityLabel::kSimulatedChart},
    {"illustration", ModalityLabel::kSimulatedChart},
    {"flowchart", ModalityLabel::kSimulatedChart},
    {"non-medical", ModalityLabel::kNonMedical},
    {"nonmedical", ModalityLabel::kNonMedical},
    {"non medical", ModalityLabel::kNonMedical},
    {"photograph", ModalityLabel::kNonMedical},
    {"natural image", ModalityLabel::kNonMedical},
};

bool contains_phrase(const std::string& text, std::string_view phrase) {
  std::size_t pos = text.find(phrase);
  while (pos != std::string::npos) {
    const bool left_ok = pos == 0 || text[pos - 1] == ' ';
    const std::size_t end = pos + phrase.size();
    const bool right_ok = end == text.size() || text[end] == ' ';
    if (left_ok && right_ok) return true;
    pos = text.find(phrase, pos + 1);
  }
  return false;
}

}  // namespace

ModalityMapping map_modality_reply(std::string_view reply) {
  const std::string trimmed = trim(reply);
  for (auto m : kAllModalities) {
    if (to_lower_ascii(to_string(m)) == to_lower_ascii(trimmed)) return {m, std::nullopt};
  }
  const std::string norm = normalise_reply(reply);
  for (auto m : kAllModalities) {
    if (to_lower_ascii(to_string(m)) == norm) return {m, std::nullopt};
  }
  for (const auto& s : kSynonyms) {
    if (s.phrase == norm) return {s.label, std::nullopt};
  }
  const Synonym* best = nullptr;
  for (const auto& s : kSynonyms) {
    if (contains_phrase(norm, s.phrase) && (!best || s.phrase.size() > best->phrase.size())) {
      best = &s;
    }
  }
  if (best) return {best->label, std::nullopt};
  return {ModalityLabel::kOther, "unmapped modality reply: " + trimmed};
}

ModalityClassification classify_modality(const std::optional<std::string>& image_uri,
                                         const std::optional<std::string>& caption,
                                         llm::Client& client, const std::string& model) {
  if (!image_uri && (!caption || trim(*caption).empty())) {
    throw_usage("modality classification needs an image or a caption");
  }
  llm::Request req;
  req.model = model;
  req.task = "modality";
  std::string user =
      "Classify the imaging modality of this image. Answer with exactly one of: XRay, DSA, "
      "CT, MR, PET_SPECT, Ultrasound, Histopathology, SimulatedChart, NonMedical, Other.";
  if (caption && !trim(*caption).empty()) user += "\nCaption: " + *caption;
  req.messages = {{"system", "You are an expert radiologist classifying medical images."},
                  {"user", user}};
  if (image_uri) req.attachments.push_back(llm::attach_image(*image_uri));
  const auto resp = client.call(req);
  const auto mapped = map_modality_reply(resp.text);
  return {mapped.label, mapped.audit_note, resp.text, resp.request_key};
}

DistributionReport distribution_report(const std::vector<ModalityLabel>& labels,
                                       std::uint64_t seed) {
  if (labels.empty()) throw_data("distribution report over empty input");
  DistributionReport r;
  r.total = labels.size();
  r.seed = seed;
  for (auto l : labels) ++r.counts[static_cast<int>(l)];
  const auto n = static_cast<std::int64_t>(r.total);
  for (std::size_t i = 0; i < r.counts.size(); ++i) {
    // round(count * 10000 / n) half-up, exact in integers.
    const auto c = static_cast<std::int64_t>(r.counts[i]);
    r.hundredths[i] = (c * 20000 + n) / (2 * n);
  }
  return r;
}

json to_json(const DistributionReport& r) {
  json rows = json::array();
  for (auto m : kAllModalities) {
    rows.push_back({{"modality", to_string(m)},
                    {"count", r.count(m)},
                    {"percent", fmt::format("{:.2f}", r.percent(m))}});
  }
  return {{"total", r.total}, {"seed", r.seed}, {"modalities", rows}};
}

std::string format_table(const DistributionReport& r) {
  std::string out = fmt::format("{:<16}{:>10}{:>10}\n", "modality", "count", "percent");
  for (auto m : kAllModalities) {
    out += fmt::format("{:<16}{:>10}{:>9.2f}%\n", to_string(m), r.count(m), r.percent(m));
  }
  out += fmt::format("{:<16}{:>10}\n", "total", r.total);
  return out;
}

std::vector<ReviewRow> audit_sample(const std::vector<LabeledItem>& model_labels, std::size_t n,
                                    std::uint64_t seed) {
  if (n > model_labels.size()) {
    throw_usage(fmt::format("audit sample of {} exceeds population {}", n, model_labels.size()));
  }
  SeededRng rng(seed);
  std::vector<ReviewRow> sheet;
  for (std::size_t i : rng.sample_indices(model_labels.size(), n)) {
    sheet.push_back({model_labels[i].item_id, model_labels[i].label, std::nullopt});
  }
  return sheet;
}

double audit_accuracy(const std::vector<ReviewRow>& sheet,
                      const std::vector<ModalityLabel>& expert_labels) {
  if (sheet.size() != expert_labels.size()) {
    throw_data(fmt::format("sheet has {} rows but {} expert labels", sheet.size(),
                           expert_labels.size()));
  }
  if (sheet.empty()) throw_data("empty review sheet");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < sheet.size(); ++i) hits += sheet[i].model_label == expert_labels[i];
  return static_cast<double>(hits) / static_cast<double>(sheet.size());
}

double audit_accuracy(const std::vector<ReviewRow>& filled) {
  std::vector<ModalityLabel> experts;
  for (const auto& row : filled) {
    if (!row.expert_label) throw_data("review sheet row " + row.item_id + " has no expert label");
    experts.push_back(*row.expert_label);
  }
  return audit_accuracy(filled, experts);
}

json to_json(const ReviewRow& row) {
  return {{"item_id", row.item_id},
          {"model_label", to_string(row.model_label)},
          {"expert_label", row.expert_label ? json(to_string(*row.expert_label)) : json(nullptr)}};
}

ReviewRow review_row_from_json(const json& j) {
  ReviewRow row;
  try {
    row.item_id = j.at("item_id").get<std::string>();
    row.model_label = parse_modality(j.at("model_label").get<std::string>());
    if (j.contains("expert_label") && !j["expert_label"].is_null()) {
      const auto s = trim(j["expert_label"].get<std::string>());
      if (!s.empty()) row.expert_label = parse_modality(s);
    }
  } catch (const json::exception& e) {
    throw_data(std::string("malformed review row: ") + e.what());
  }
  return row;
}

std::string_view to_string(QuestionClass c) {
  return c == QuestionClass::kKnowledgeBased ? "knowledge_based" : "inference_based";
}

QuestionClass parse_question_class(std::string_view s) {
  if (s == "knowledge_based") return QuestionClass::kKnowledgeBased;
  if (s == "inference_based") return QuestionClass::kInferenceBased;
  throw_data("unknown question class: " + std::string(s));
}

std::optional<QuestionClass> map_question_reply(std::string_view reply) {
  const std::string norm = normalise_reply(reply);
  const bool knowledge = norm.find("knowledge") != std::string::npos;
  const bool inference = norm.find("inference") != std::string::npos ||
                         norm.find("reasoning") != std::string::npos;
  if (knowledge == inference) return std::nullopt;
  return knowledge ? QuestionClass::kKnowledgeBased : QuestionClass::kInferenceBased;
}

QuestionClassification classify_question(const std::string& question, const std::string& answer,
                                          llm::Client& client, const std::string& model) {
  if (trim(question).empty()) throw_usage("question must be nonempty");
  llm::Request req;
  req.model = model;
  req.task = "question_class";
  req.messages = {
      {"system",
       "You classify medical exam questions. Knowledge-based questions require minimal "
       "inference and can be answered with sufficient medical knowledge alone. "
       "Inference-based questions require reasoning to reach the correct diagnosis, "
       "regardless of how complex the medical knowledge involved is."},
      {"user", "Question: " + question + "\nAnswer: " + answer +
                   "\nReply with one word: knowledge or inference."}};
  QuestionClassification out;
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (attempt == 1) {
      req.messages.push_back({"assistant", out.raw_replies.back()});
      req.messages.push_back({"user", "Reply with exactly one word: knowledge or inference."});
    }
    const auto resp = client.call(req);
    out.raw_replies.push_back(resp.text);
    out.request_keys.push_back(resp.request_key);
    if (auto c = map_question_reply(resp.text)) {
      out.value = *c;
      return out;
    }
  }
  throw_provider("unmappable question-class reply after retry: " + out.raw_replies.back());
}

double knowledge_share(const std::vector<QuestionClass>& classes) {
  if (classes.empty()) throw_data("knowledge share over empty input");
  const auto k = std::count(classes.begin(), classes.end(), QuestionClass::kKnowledgeBased);
  return 100.0 * static_cast<double>(k) / static_cast<double>(classes.size());
}

template <typename T>
double agreement(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.size() != b.size()) {
    throw_data(fmt::format("length mismatch: {} vs {}", a.size(), b.size()));
  }
  if (a.empty()) throw_data("agreement over empty input");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return static_cast<double>(same) / static_cast<double>(a.size());
}

template double agreement<QuestionClass>(const std::vector<QuestionClass>&,
                                         const std::vector<QuestionClass>&);
template double agreement<ModalityLabel>(const std::vector<ModalityLabel>&,
                                         const std::vector<ModalityLabel>&);
template double agreement<std::string>(const std::vector<std::string>&,
                                       const std::vector<std::string>&);

std::vector<QuestionClass> majority_vote(
    const std::vector<std::vector<QuestionClass>>& experts) {
  if (experts.empty()) throw_data("majority vote needs at least one expert");
  const std::size_t n = experts.front().size();
  for (const auto& e : experts) {
    if (e.size() != n) throw_data("experts labelled different numbers of items");
  }
  std::vector<QuestionClass> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t knowledge = 0;
    for (const auto& e : experts) knowledge += e[i] == QuestionClass::kKnowledgeBased;
    out[i] = 2 * knowledge > experts.size() ? QuestionClass::kKnowledgeBased
                                            : QuestionClass::kInferenceBased;
  }
  return out;
}

}  // namespace medaug::analyze
