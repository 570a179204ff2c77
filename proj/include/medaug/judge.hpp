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

// Three-aspect judge: style normalisation of the model answer, rubric
// extraction from the gold answer, then per-aspect 0..5 scoring that only
// ever sees the normalised answer and one rubric list.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "medaug/io.hpp"
#include "medaug/llm.hpp"

namespace medaug::judge {

enum class Aspect { kKeyPoints, kInference, kEvidence };

std::string_view to_string(Aspect a);

struct JudgeRubric {
  std::vector<std::string> key_points;
  std::vector<std::string> reasoning_steps;
  std::vector<std::string> evidence;
  std::string question_sha256;
  std::string gold_sha256;

  const std::vector<std::string>& part(Aspect a) const;
};

json to_json(const JudgeRubric& rubric);

struct NormalizedAnswer {
  std::string text;
  std::string original;
  std::string original_sha256;
  std::string request_key;
};

struct JudgeOptions {
  std::string model = "gpt-4o";
  double temperature = 0.0;
  int workers = 1;
};

NormalizedAnswer normalize_style(const std::string& answer, llm::Client& client,
                                 const JudgeOptions& options = {});

/// Splits "1. a 2. b" or "{1. a.2. b}" into items. Markers must count up
/// from 1; a marker is a number not preceded by a digit and followed by '.'
/// or ')' and then a non-digit. Empty result means unparseable.
std::vector<std::string> parse_numbered_list(std::string_view text);

JudgeRubric extract_rubric(const std::string& question, const std::string& gold,
                           llm::Client& client, const JudgeOptions& options = {});

/// Throws a usage error when the prompt would contain the gold text.
llm::Request build_score_request(const std::string& normalized_answer,
                                 const std::vector<std::string>& rubric_part, Aspect aspect,
                                 const std::string& gold, const JudgeOptions& options = {});

/// A bare decimal (optional trailing '.'); nullopt otherwise.
std::optional<double> parse_score(std::string_view reply);

double score_aspect(const std::string& normalized_answer,
                    const std::vector<std::string>& rubric_part, Aspect aspect,
                    const std::string& gold, llm::Client& client,
                    const JudgeOptions& options = {});

struct AspectScores {
  double key_points = 0.0;
  double inference = 0.0;
  double evidence = 0.0;
  double overall = 0.0;
};

/// Arithmetic mean of the three aspects; each must be in [0, 5].
double overall(double key_points, double inference, double evidence);
AspectScores make_scores(double key_points, double inference, double evidence);

struct JudgeItem {
  std::string id;
  std::string question;
  std::string gold;
  std::string model_answer;
};

JudgeItem judge_item_from_json(const json& j);

struct ItemResult {
  std::string id;
  bool ok = false;
  AspectScores scores;
  std::optional<std::string> error;
  std::size_t key_point_count = 0;
  std::size_t reasoning_step_count = 0;
  std::size_t evidence_count = 0;
  std::string original_sha256;
  std::string normalized_sha256;
};

json to_json(const ItemResult& r);

struct JudgeReport {
  std::vector<ItemResult> items;
  /// Per-aspect means over scored items; overall is the mean of those.
  AspectScores aggregate;
  std::size_t scored = 0;
  std::size_t excluded = 0;
};

json aggregate_json(const JudgeReport& report);

/// Item failures are recorded and excluded from the aggregate. Throws a data
/// error when the dataset is empty and a provider error when every item fails.
JudgeReport judge_run(const std::vector<JudgeItem>& items, llm::Client& client,
                      const JudgeOptions& options = {});

}  // namespace medaug::judge
