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

// Prompt templates and the generation steps that turn cases into
// instruction samples: reports, sub-image captions, QA pairs, translation.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "medaug/corpus.hpp"
#include "medaug/io.hpp"
#include "medaug/llm.hpp"

namespace medaug {

namespace retrieval {
class Index;
class Embedder;
}  // namespace retrieval

namespace augment {

enum class Role { kUser, kAssistant };
enum class TaskType { kClosedQa, kOpenQa, kCaption, kReport, kTranslation };
enum class Provenance { kHumanAnnotated, kSynthetic };

std::string_view to_string(Role r);
std::string_view to_string(TaskType t);
std::string_view to_string(Provenance p);
TaskType parse_task_type(std::string_view s);
Provenance parse_provenance(std::string_view s);

struct Turn {
  Role role = Role::kUser;
  std::string text;
};

struct InstructionSample {
  std::string sample_id;
  std::vector<std::string> images;
  std::vector<Turn> turns;
  TaskType task_type = TaskType::kOpenQa;
  Provenance provenance = Provenance::kSynthetic;
  Language language = Language::kEn;
  // Provenance chain.
  std::string source_case;
  std::vector<std::string> retrieval_docs;
  std::vector<std::string> request_keys;
  std::optional<std::string> translated_from;
};

json to_json(const InstructionSample& s);
InstructionSample sample_from_json(const json& j);

/// Turn alternation (user first) and closed-QA option checks.
std::optional<std::string> validate(const InstructionSample& s);

/// True when the text lists at least two lettered options, e.g. "A." "(B)".
bool has_enumerated_options(std::string_view text);

// ---------------------------------------------------------------------------
// Reply format
// ---------------------------------------------------------------------------

struct QaPair {
  std::string question;
  std::string answer;
};

struct ParsedReply {
  std::optional<std::string> report;
  std::vector<QaPair> pairs;
  std::string raw;
};

/// Splits on case-insensitive "Report:", "Question:", "Answer:" markers
/// (markdown emphasis around a marker is tolerated).
/// Errors: "missing report", "dangling question", "answer without question".
ParsedReply parse_report_qa(std::string_view raw, bool report_requested);

// ---------------------------------------------------------------------------
// Prompts
// ---------------------------------------------------------------------------

/// Layout every generation prompt asks for.
extern const std::string kFormatBlock;

struct PromptBundle {
  std::string system;
  std::vector<std::string> guideline_context;
  std::string instruction;
  std::string format_block = kFormatBlock;
  std::vector<std::string> attachments;
  /// Case material (findings, captions, ROI callouts) after the format block.
  std::string body;
};

llm::Request render(const PromptBundle& bundle, std::string task, std::string model);

struct ContextDoc {
  std::string doc_id;
  std::string text;
};

/// Injects every doc verbatim until the whitespace-token budget runs out;
/// the doc that crosses the budget is cut at it.
std::vector<std::string> fit_context(const std::vector<ContextDoc>& docs,
                                     std::size_t token_budget);

/// "region (x0,y0)-(x1,y1): label", one line per ROI.
std::string render_roi_callouts(const std::vector<Roi>& rois);

struct Options {
  std::string model = "gpt-4o";
  std::size_t context_token_budget = 1500;
  int qa_min = 3;
  int qa_max = 10;
  int qa_words_per_extra = 80;
};

/// clamp(qa_min + floor(words / qa_words_per_extra), qa_min, qa_max).
int qa_count(std::size_t words, const Options& options = {});

// ---------------------------------------------------------------------------
// Generation steps
// ---------------------------------------------------------------------------

struct ReportInput {
  std::vector<std::string> image_uris;
  /// Existing human caption/findings; the report augments it.
  std::optional<std::string> annotation;
  std::vector<Roi> rois;
  std::string modality = "medical";
};

struct Generated {
  std::string text;
  std::vector<std::string> request_keys;
};

/// Unannotated inputs must come with retrieved context.
Generated generate_report(const ReportInput& input, const std::vector<ContextDoc>& context,
                          llm::Client& client, const Options& options = {});

struct SubimageCaptions {
  /// Aligned with case.images; existing captions are passed through.
  std::vector<std::string> captions;
  std::size_t generated = 0;
  std::vector<std::string> request_keys;
};

SubimageCaptions generate_subimage_captions(const CaseRecord& record, llm::Client& client,
                                            const Options& options = {});

/// Who a batch of samples belongs to.
struct SampleOrigin {
  std::string case_id;
  std::string id_prefix;
  Provenance provenance = Provenance::kSynthetic;
  std::vector<std::string> retrieval_docs;
};

std::vector<InstructionSample> generate_qapairs(std::string_view text,
                                                const std::vector<std::string>& images,
                                                llm::Client& client, const SampleOrigin& origin,
                                                const Options& options = {});

/// Returns the originals followed by ceil(fraction*N) translated copies,
/// chosen by a seeded uniform draw and emitted in original order.
std::vector<InstructionSample> translate_subset(const std::vector<InstructionSample>& samples,
                                                double fraction, std::uint64_t seed,
                                                llm::Client& client,
                                                const Options& options = {});

/// Sends one prompt, re-prompts once if the reply does not parse.
ParsedReply request_parsed(const llm::Request& request, bool report_requested,
                           llm::Client& client, std::vector<std::string>& keys);

// ---------------------------------------------------------------------------
// Case orchestration
// ---------------------------------------------------------------------------

struct PipelineOptions {
  Options generation;
  std::size_t k = 4;
  bool require_guideline = true;
  int slice_cap = 20;
  int workers = 1;
};

/// Slice-samples volumes, fills missing sub-image captions, then per image:
/// retrieve context, generate a report, emit caption/report/QA samples.
std::vector<InstructionSample> augment_case(const CaseRecord& record,
                                            const retrieval::Index& index,
                                            retrieval::Embedder& embedder, llm::Client& client,
                                            const PipelineOptions& options = {});

/// Runs augment_case over a bounded worker pool; output is in input order.
std::vector<InstructionSample> augment_corpus(const std::vector<CaseRecord>& records,
                                              const retrieval::Index& index,
                                              retrieval::Embedder& embedder,
                                              llm::Client& client,
                                              const PipelineOptions& options = {});

}  // namespace augment
}  // namespace medaug
