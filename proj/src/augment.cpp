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

#include "medaug/augment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <regex>
#include <set>
#include <thread>

#include "medaug/common.hpp"
#include "medaug/retrieval.hpp"

namespace medaug::augment {

// ---------------------------------------------------------------------------
// Enums and sample schema
// ---------------------------------------------------------------------------

std::string_view to_string(Role r) { return r == Role::kUser ? "user" : "assistant"; }

std::string_view to_string(TaskType t) {
  switch (t) {
    case TaskType::kClosedQa: return "closed_qa";
    case TaskType::kOpenQa: return "open_qa";
    case TaskType::kCaption: return "caption";
    case TaskType::kReport: return "report";
    case TaskType::kTranslation: return "translation";
  }
  return "open_qa";
}

std::string_view to_string(Provenance p) {
  return p == Provenance::kHumanAnnotated ? "human_annotated" : "synthetic";
}

TaskType parse_task_type(std::string_view s) {
  for (auto t : {TaskType::kClosedQa, TaskType::kOpenQa, TaskType::kCaption,
                 TaskType::kReport, TaskType::kTranslation}) {
    if (to_string(t) == s) return t;
  }
  throw_data("unknown task_type: " + std::string(s));
}

Provenance parse_provenance(std::string_view s) {
  if (s == "human_annotated") return Provenance::kHumanAnnotated;
  if (s == "synthetic") return Provenance::kSynthetic;
  throw_data("unknown provenance: " + std::string(s));
}

json to_json(const InstructionSample& s) {
  json turns = json::array();
  for (const auto& t : s.turns) turns.push_back({{"role", to_string(t.role)}, {"text", t.text}});
  json j = {{"sample_id", s.sample_id},
            {"images", s.images},
            {"turns", turns},
            {"task_type", to_string(s.task_type)},
            {"provenance", to_string(s.provenance)},
            {"language", to_string(s.language)},
            {"source_case", s.source_case},
            {"retrieval_docs", s.retrieval_docs},
            {"request_keys", s.request_keys}};
  if (s.translated_from) j["translated_from"] = *s.translated_from;
  return j;
}

InstructionSample sample_from_json(const json& j) {
  InstructionSample s;
  try {
    s.sample_id = j.at("sample_id").get<std::string>();
    s.images = j.value("images", std::vector<std::string>{});
    for (const auto& t : j.at("turns")) {
      const auto role = t.at("role").get<std::string>();
      if (role != "user" && role != "assistant") throw_data("unknown role: " + role);
      s.turns.push_back({role == "user" ? Role::kUser : Role::kAssistant,
                         t.at("text").get<std::string>()});
    }
    s.task_type = parse_task_type(j.at("task_type").get<std::string>());
    s.provenance = parse_provenance(j.at("provenance").get<std::string>());
    s.language = parse_language(j.value("language", "en"));
    s.source_case = j.value("source_case", "");
    s.retrieval_docs = j.value("retrieval_docs", std::vector<std::string>{});
    s.request_keys = j.value("request_keys", std::vector<std::string>{});
    if (j.contains("translated_from") && !j["translated_from"].is_null())
      s.translated_from = j["translated_from"].get<std::string>();
  } catch (const json::exception& e) {
    throw_data(std::string("malformed instruction sample: ") + e.what());
  }
  return s;
}

bool has_enumerated_options(std::string_view text) {
  static const std::regex kOption(R"((^|[\s(\[])([A-E])[\).:\]](\s|$))");
  std::set<char> letters;
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kOption);
       it != std::sregex_iterator(); ++it) {
    letters.insert((*it)[2].str()[0]);
  }
  return letters.size() >= 2;
}

std::optional<std::string> validate(const InstructionSample& s) {
  if (s.sample_id.empty()) return "empty sample_id";
  if (s.turns.empty()) return "no turns";
  for (std::size_t i = 0; i < s.turns.size(); ++i) {
    const Role expected = i % 2 == 0 ? Role::kUser : Role::kAssistant;
    if (s.turns[i].role != expected) return "turns must alternate user/assistant";
  }
  if (s.task_type == TaskType::kClosedQa) {
    for (const auto& t : s.turns) {
      if (t.role == Role::kUser && !has_enumerated_options(t.text)) {
        return "closed_qa user turn without enumerated options";
      }
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Reply parsing
// ---------------------------------------------------------------------------

namespace {

std::string strip_emphasis(std::string s) {
  s = trim(s);
  while (!s.empty() && (s.front() == '*' || s.front() == '#')) s.erase(s.begin());
  while (!s.empty() && s.back() == '*') s.pop_back();
  return trim(s);
}

}  // namespace

ParsedReply parse_report_qa(std::string_view raw, bool report_requested) {
  static const std::regex kMarker(R"(\*{0,2}\b(report|question|answer)\b\*{0,2}\s*:\*{0,2})",
                                  std::regex::icase);
  ParsedReply out;
  out.raw = std::string(raw);

  struct Mark {
    char kind;
    std::size_t begin;
    std::size_t end;
  };
  std::vector<Mark> marks;
  for (auto it = std::sregex_iterator(out.raw.begin(), out.raw.end(), kMarker);
       it != std::sregex_iterator(); ++it) {
    const char kind = static_cast<char>(std::tolower((*it)[1].str()[0]));
    marks.push_back({kind, static_cast<std::size_t>(it->position()),
                     static_cast<std::size_t>(it->position() + it->length())});
  }

  std::optional<std::string> pending_question;
  for (std::size_t i = 0; i < marks.size(); ++i) {
    const std::size_t seg_end = i + 1 < marks.size() ? marks[i + 1].begin : out.raw.size();
    std::string segment = strip_emphasis(out.raw.substr(marks[i].end, seg_end - marks[i].end));
    switch (marks[i].kind) {
      case 'r':
        if (out.report) throw_provider("duplicate report");
        out.report = std::move(segment);
        break;
      case 'q':
        if (pending_question) throw_provider("dangling question");
        pending_question = std::move(segment);
        break;
      case 'a':
        if (!pending_question) throw_provider("answer without question");
        out.pairs.push_back({std::move(*pending_question), std::move(segment)});
        pending_question.reset();
        break;
    }
  }
  if (pending_question) throw_provider("dangling question");
  if (out.report && out.report->empty()) out.report.reset();
  if (report_requested && !out.report) throw_provider("missing report");
  for (const auto& p : out.pairs) {
    if (p.question.empty() || p.answer.empty()) throw_provider("empty question or answer");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prompts
// ---------------------------------------------------------------------------

const std::string kFormatBlock =
    "Return the results in the following format:\n"
    "Report: {report content}\n"
    "Question: {question content}\n"
    "Answer: {answer content}\n"
    "Don't generate any other information.";

llm::Request render(const PromptBundle& bundle, std::string task, std::string model) {
  llm::Request req;
  req.model = std::move(model);
  req.task = std::move(task);
  req.messages.push_back({"system", bundle.system});
  std::string user;
  if (!bundle.guideline_context.empty()) {
    user += "Relevant medical guidelines and clinical cases:\n";
    for (std::size_t i = 0; i < bundle.guideline_context.size(); ++i) {
      user += fmt::format("[{}] {}\n", i + 1, bundle.guideline_context[i]);
    }
    user += "\n";
  }
  user += bundle.instruction + "\n\n" + bundle.format_block;
  if (!bundle.body.empty()) user += "\nHere is the image and its description:\n" + bundle.body;
  req.messages.push_back({"user", user});
  for (const auto& uri : bundle.attachments) req.attachments.push_back(llm::attach_image(uri));
  return req;
}

std::vector<std::string> fit_context(const std::vector<ContextDoc>& docs,
                                     std::size_t token_budget) {
  std::vector<std::string> out;
  std::size_t used = 0;
  for (const auto& d : docs) {
    if (used >= token_budget) break;
    const auto words = split_whitespace(d.text);
    if (used + words.size() <= token_budget) {
      out.push_back(d.text);
      used += words.size();
      continue;
    }
    std::string cut;
    for (std::size_t i = 0; i < token_budget - used; ++i) {
      if (i) cut.push_back(' ');
      cut += words[i];
    }
    out.push_back(cut);
    used = token_budget;
  }
  return out;
}

std::string render_roi_callouts(const std::vector<Roi>& rois) {
  std::string out;
  for (const auto& r : rois) {
    out += fmt::format("region ({:.3f},{:.3f})-({:.3f},{:.3f}): {}\n", r.x0, r.y0, r.x1, r.y1,
                       r.label);
  }
  return out;
}

int qa_count(std::size_t words, const Options& o) {
  const auto extra = static_cast<long long>(words / static_cast<std::size_t>(o.qa_words_per_extra));
  const long long n = o.qa_min + extra;
  return static_cast<int>(std::clamp<long long>(n, o.qa_min, o.qa_max));
}

ParsedReply request_parsed(const llm::Request& request, bool report_requested,
                           llm::Client& client, std::vector<std::string>& keys) {
  auto first = client.call(request);
  keys.push_back(first.request_key);
  std::string reason;
  try {
    return parse_report_qa(first.text, report_requested);
  } catch (const Error& e) {
    reason = e.what();
  }
  llm::Request retry = request;
  retry.messages.push_back({"assistant", first.text});
  retry.messages.push_back(
      {"user", "Your previous reply could not be parsed (" + reason +
                   "). Reply again using exactly the required format."});
  auto second = client.call(retry);
  keys.push_back(second.request_key);
  try {
    return parse_report_qa(second.text, report_requested);
  } catch (const Error& e) {
    throw_provider(std::string("unparseable response: ") + e.what());
  }
}

namespace {

std::string report_system_prompt(const std::string& modality) {
  return fmt::format(
      "Analyze the provided {} image and generate a detailed and professional medical "
      "report that describes only the abnormalities, significant features, or relevant "
      "observations directly seen in the image. Use precise medical terminology and "
      "maintain a formal tone. Do not include any introductory phrases, such as \"The "
      "provided image reveals,\" or any concluding remarks. Here are some relevant medical "
      "guidelines and clinical cases for you to generate.",
      modality);
}

}  // namespace

Generated generate_report(const ReportInput& input, const std::vector<ContextDoc>& context,
                          llm::Client& client, const Options& options) {
  const bool annotated = input.annotation && !trim(*input.annotation).empty();
  if (!annotated && context.empty()) throw_data("ungrounded augmentation refused");

  PromptBundle b;
  b.system = report_system_prompt(input.modality);
  b.guideline_context = fit_context(context, options.context_token_budget);
  b.attachments = input.image_uris;
  if (annotated) {
    b.instruction =
        "Your task is to augment the existing expert annotation into a comprehensive "
        "clinical report, adding context and medical insight supported by the guidelines "
        "and cases. Keep every finding stated in the annotation.";
    b.body = "Existing annotation: " + *input.annotation + "\n";
  } else {
    b.instruction =
        "Your task is to generate a comprehensive clinical report for the image, grounded "
        "in the guidelines and cases above. Do not state findings the image does not show.";
  }
  if (!input.rois.empty()) {
    b.body += "Regions of interest (normalized coordinates):\n" +
              render_roi_callouts(input.rois);
  }
  Generated out;
  const auto parsed =
      request_parsed(render(b, "report", options.model), true, client, out.request_keys);
  out.text = *parsed.report;
  return out;
}

SubimageCaptions generate_subimage_captions(const CaseRecord& record, llm::Client& client,
                                            const Options& options) {
  if (!record.image_findings || trim(*record.image_findings).empty()) {
    throw_data("case " + record.id + " has no image_findings");
  }
  SubimageCaptions out;
  const std::size_t n = record.images.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& im = record.images[i];
    if (im.caption && !trim(*im.caption).empty()) {
      out.captions.push_back(*im.caption);
      continue;
    }
    PromptBundle b;
    b.system =
        "You write precise captions for the individual images of a radiology case. Use "
        "precise medical terminology and only facts supported by the case description.";
    b.instruction = fmt::format(
        "Based on the case-level image findings, write a detailed caption for image {} of "
        "{} (id {}). Describe only what this image shows. Put the caption in the Report "
        "field; no questions are needed.",
        i + 1, n, im.image_id);
    b.body = "Image findings: " + *record.image_findings + "\n";
    b.attachments = {im.uri};
    const auto parsed = request_parsed(render(b, "subimage_caption", options.model), true,
                                       client, out.request_keys);
    out.captions.push_back(*parsed.report);
    ++out.generated;
  }
  return out;
}

std::vector<InstructionSample> generate_qapairs(std::string_view text,
                                                const std::vector<std::string>& images,
                                                llm::Client& client, const SampleOrigin& origin,
                                                const Options& options) {
  if (trim(text).empty()) throw_data("cannot generate QA pairs from empty text");
  const int n = qa_count(word_count(text), options);

  PromptBundle b;
  b.system =
      "You are a medical educator writing question-answer pairs for image-grounded "
      "instruction data.";
  b.instruction = fmt::format(
      "Your task is to generate {} valuable questions and their corresponding answers that "
      "are relevant to the image's content. The answers must be explicitly found in, or "
      "directly inferred from, the text below.",
      n);
  b.body = std::string(text) + "\n";
  b.attachments = images;
  const llm::Request req = render(b, "qa", options.model);

  std::vector<std::string> keys;
  std::vector<QaPair> pairs;
  bool accepted = false;
  auto first = client.call(req);
  keys.push_back(first.request_key);
  std::string problem;
  try {
    pairs = parse_report_qa(first.text, false).pairs;
    accepted = static_cast<int>(pairs.size()) == n;
    if (!accepted) problem = fmt::format("expected {} pairs, got {}", n, pairs.size());
  } catch (const Error& e) {
    problem = e.what();
  }
  if (!accepted) {
    llm::Request retry = req;
    retry.messages.push_back({"assistant", first.text});
    retry.messages.push_back(
        {"user", fmt::format("Your previous reply was not usable ({}). Return exactly {} "
                             "Question/Answer pairs in the required format.",
                             problem, n)});
    auto second = client.call(retry);
    keys.push_back(second.request_key);
    try {
      pairs = parse_report_qa(second.text, false).pairs;
    } catch (const Error&) {
      pairs.clear();
    }
    if (static_cast<int>(pairs.size()) < options.qa_min) {
      throw_provider(fmt::format("fewer than {} parseable pairs after retry", options.qa_min));
    }
    if (static_cast<int>(pairs.size()) > options.qa_max) pairs.resize(options.qa_max);
  }

  std::vector<InstructionSample> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    InstructionSample s;
    s.sample_id = fmt::format("{}/qa{}", origin.id_prefix, i + 1);
    s.images = images;
    s.turns = {{Role::kUser, pairs[i].question}, {Role::kAssistant, pairs[i].answer}};
    s.task_type = has_enumerated_options(pairs[i].question) ? TaskType::kClosedQa
                                                            : TaskType::kOpenQa;
    s.provenance = origin.provenance;
    s.source_case = origin.case_id;
    s.retrieval_docs = origin.retrieval_docs;
    s.request_keys = keys;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<InstructionSample> translate_subset(const std::vector<InstructionSample>& samples,
                                                double fraction, std::uint64_t seed,
                                                llm::Client& client, const Options& options) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw_usage("fraction must be in (0, 1]");
  std::vector<InstructionSample> out = samples;
  if (samples.empty()) return out;
  const auto count = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(samples.size()) - 1e-9));
  SeededRng rng(seed);
  auto picks = rng.sample_indices(samples.size(), count);
  std::sort(picks.begin(), picks.end());
  for (std::size_t idx : picks) {
    InstructionSample copy = samples[idx];
    copy.sample_id += "/zh";
    copy.language = Language::kZh;
    copy.translated_from = samples[idx].sample_id;
    for (auto& turn : copy.turns) {
      llm::Request req;
      req.model = options.model;
      req.task = "translate";
      req.messages = {{"system",
                       "Translate the user's text into Simplified Chinese. Keep medical "
                       "terminology precise. Return only the translation."},
                      {"user", turn.text}};
      auto resp = client.call(req);
      copy.request_keys.push_back(resp.request_key);
      turn.text = trim(resp.text);
    }
    out.push_back(std::move(copy));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Orchestration
// ---------------------------------------------------------------------------

std::vector<InstructionSample> augment_case(const CaseRecord& input,
                                            const retrieval::Index& index,
                                            retrieval::Embedder& embedder, llm::Client& client,
                                            const PipelineOptions& options) {
  CaseRecord record = input;
  record.images = select_images(record.images, options.slice_cap);

  std::vector<std::string> caption_keys;
  const bool needs_captions =
      std::any_of(record.images.begin(), record.images.end(),
                  [](const ImageRef& im) { return !im.caption || trim(*im.caption).empty(); });
  if (record.human_annotated && record.image_findings && !trim(*record.image_findings).empty() &&
      needs_captions) {
    auto caps = generate_subimage_captions(record, client, options.generation);
    for (std::size_t i = 0; i < record.images.size(); ++i) record.images[i].caption = caps.captions[i];
    caption_keys = caps.request_keys;
  }

  const Provenance provenance =
      record.human_annotated ? Provenance::kHumanAnnotated : Provenance::kSynthetic;
  const std::string modality =
      record.modality_label ? std::string(to_string(*record.modality_label)) : "medical";

  std::vector<InstructionSample> out;
  for (const auto& im : record.images) {
    std::optional<std::string> annotation;
    if (im.caption && !trim(*im.caption).empty()) {
      annotation = *im.caption;
    } else if (record.human_annotated && record.image_findings) {
      annotation = *record.image_findings;
    }

    retrieval::Query q;
    q.image_uri = im.uri;
    if (annotation) q.text = *annotation;
    q.case_id = record.id;
    retrieval::embed_query(q, embedder);
    const auto hits = retrieval::retrieve_context(
        index, q, {options.k, options.require_guideline});

    std::vector<ContextDoc> context;
    std::vector<std::string> doc_ids;
    for (const auto& h : hits) {
      const auto* doc = index.find(h.doc_id);
      context.push_back({h.doc_id, doc ? doc->text : std::string()});
      doc_ids.push_back(h.doc_id);
    }

    ReportInput rin;
    rin.image_uris = {im.uri};
    rin.annotation = record.human_annotated ? annotation : std::nullopt;
    rin.rois = im.rois;
    rin.modality = modality;
    const Generated report = generate_report(rin, context, client, options.generation);

    const std::string prefix = record.id + "/" + im.image_id;
    auto base = [&](std::string suffix, TaskType type) {
      InstructionSample s;
      s.sample_id = prefix + "/" + suffix;
      s.images = {im.uri};
      s.task_type = type;
      s.provenance = provenance;
      s.language = record.language;
      s.source_case = record.id;
      s.retrieval_docs = doc_ids;
      return s;
    };
    if (im.caption && !trim(*im.caption).empty()) {
      auto s = base("caption", TaskType::kCaption);
      s.turns = {{Role::kUser, "Write a detailed caption for this image."},
                 {Role::kAssistant, *im.caption}};
      s.request_keys = caption_keys;
      out.push_back(std::move(s));
    }
    {
      auto s = base("report", TaskType::kReport);
      s.turns = {{Role::kUser, "Generate a detailed clinical report for this image."},
                 {Role::kAssistant, report.text}};
      s.request_keys = report.request_keys;
      out.push_back(std::move(s));
    }
    SampleOrigin origin{record.id, prefix, provenance, doc_ids};
    for (auto& s : generate_qapairs(report.text, {im.uri}, client, origin, options.generation)) {
      s.language = record.language;
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<InstructionSample> augment_corpus(const std::vector<CaseRecord>& records,
                                              const retrieval::Index& index,
                                              retrieval::Embedder& embedder,
                                              llm::Client& client,
                                              const PipelineOptions& options) {
  std::vector<std::vector<InstructionSample>> slots(records.size());
  parallel_for(records.size(), options.workers, [&](std::size_t i) {
    slots[i] = augment_case(records[i], index, embedder, client, options);
  });
  std::vector<InstructionSample> out;
  for (auto& s : slots) {
    for (auto& x : s) out.push_back(std::move(x));
  }
  return out;
}

}  // namespace medaug::augment
