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

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "medaug/corpus.hpp"
#include "medaug/io.hpp"
#include "medaug/llm.hpp"

namespace medaug::analyze {

// ---------------------------------------------------------------------------
// Modality classification and distribution
// ---------------------------------------------------------------------------

struct ModalityMapping {
  ModalityLabel label = ModalityLabel::kOther;
  /// Set when the reply could not be mapped and fell back to Other.
  std::optional<std::string> audit_note;
};

/// Exact enum name, then exact synonym, then the longest synonym phrase
/// found at word boundaries. Anything else maps to Other with a note.
ModalityMapping map_modality_reply(std::string_view reply);

struct ModalityClassification {
  ModalityLabel label = ModalityLabel::kOther;
  std::optional<std::string> audit_note;
  std::string raw_reply;
  std::string request_key;
};

ModalityClassification classify_modality(const std::optional<std::string>& image_uri,
                                         const std::optional<std::string>& caption,
                                         llm::Client& client,
                                         const std::string& model = "gpt-4o");

struct DistributionReport {
  std::size_t total = 0;
  std::uint64_t seed = 0;
  std::array<std::size_t, std::size(kAllModalities)> counts{};
  /// Percentages in hundredths of a percent, rounded half-up (3115 = 31.15%).
  std::array<std::int64_t, std::size(kAllModalities)> hundredths{};

  std::size_t count(ModalityLabel m) const { return counts[static_cast<int>(m)]; }
  double percent(ModalityLabel m) const {
    return static_cast<double>(hundredths[static_cast<int>(m)]) / 100.0;
  }
};

DistributionReport distribution_report(const std::vector<ModalityLabel>& labels,
                                       std::uint64_t seed = 0);

json to_json(const DistributionReport& report);
/// Fixed-width text table, one modality per row.
std::string format_table(const DistributionReport& report);

// ---------------------------------------------------------------------------
// Human review audit
// ---------------------------------------------------------------------------

struct LabeledItem {
  std::string item_id;
  ModalityLabel label = ModalityLabel::kOther;
};

struct ReviewRow {
  std::string item_id;
  ModalityLabel model_label = ModalityLabel::kOther;
  std::optional<ModalityLabel> expert_label;
};

/// Seeded uniform sample without replacement, in selection order.
std::vector<ReviewRow> audit_sample(const std::vector<LabeledItem>& model_labels,
                                    std::size_t n = 100, std::uint64_t seed = 0);

/// Fraction of rows whose model label equals the expert label.
double audit_accuracy(const std::vector<ReviewRow>& sheet,
                      const std::vector<ModalityLabel>& expert_labels);
/// Same, reading the expert column of a filled-in sheet.
double audit_accuracy(const std::vector<ReviewRow>& filled_sheet);

json to_json(const ReviewRow& row);
ReviewRow review_row_from_json(const json& j);

// ---------------------------------------------------------------------------
// Question classes and agreement
// ---------------------------------------------------------------------------

enum class QuestionClass { kKnowledgeBased, kInferenceBased };

std::string_view to_string(QuestionClass c);
QuestionClass parse_question_class(std::string_view s);

/// "knowledge..." or "inference..."/"reasoning..." replies; nullopt when the
/// reply names neither or both.
std::optional<QuestionClass> map_question_reply(std::string_view reply);

struct QuestionClassification {
  QuestionClass value = QuestionClass::kKnowledgeBased;
  std::vector<std::string> raw_replies;
  std::vector<std::string> request_keys;
};

QuestionClassification classify_question(const std::string& question,
                                          const std::string& answer, llm::Client& client,
                                          const std::string& model = "gpt-4o");

/// Percentage of knowledge-based items.
double knowledge_share(const std::vector<QuestionClass>& classes);

template <typename T>
double agreement(const std::vector<T>& a, const std::vector<T>& b);

/// Per-item majority over any number of experts; ties go to inference_based.
std::vector<QuestionClass> majority_vote(
    const std::vector<std::vector<QuestionClass>>& expert_labels);

}  // namespace medaug::analyze
