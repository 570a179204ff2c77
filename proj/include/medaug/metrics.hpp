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

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "medaug/io.hpp"

namespace medaug::metrics {

using ConceptSet = std::set<std::string>;

/// Surface form to concept id dictionary. Surfaces are matched on
/// lowercased, whitespace-collapsed tokens.
class ConceptLexicon {
 public:
  void add(std::string_view surface, std::string_view concept_id);
  /// Line-delimited {"surface", "concept_id"} records.
  static ConceptLexicon from_jsonl(const std::string& path);
  static ConceptLexicon from_rows(const std::vector<json>& rows);

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  /// SHA-256 over the sorted entries.
  std::string version() const;

  ConceptSet extract(std::string_view text) const;

 private:
  // Token sequence -> concept id. Tokens split on whitespace and punctuation
  // except '-' and '\''.
  std::map<std::vector<std::string>, std::string> entries_;
  std::size_t max_tokens_ = 0;
};

std::vector<std::string> concept_tokens(std::string_view text);

/// Longest match first, scanning left to right; throws on an empty lexicon.
ConceptSet extract_concepts(std::string_view text, const ConceptLexicon& lexicon);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// P = |ref & gen| / |gen|, R = |ref & gen| / |ref|, F1 harmonic mean.
/// Both empty: 1/1/1. One side empty: the affected ratio is 0.
Prf umls_prf(const ConceptSet& c_ref, const ConceptSet& c_gen);

struct UmlsReport {
  std::size_t n = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<Prf> per_item;
};

UmlsReport umls_report(const std::vector<std::string>& references,
                       const std::vector<std::string>& generations,
                       const ConceptLexicon& lexicon);

json to_json(const UmlsReport& r);

/// Option letter from free-form model output, or nullopt. Cue phrases
/// ("answer is B", "Answer: (C)", "option D") win over the first bare
/// uppercase letter token. Letters range over the first `option_count`.
std::optional<char> extract_letter(std::string_view output, int option_count = 5);

struct AccuracyReport {
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  /// Indices whose output yielded no letter.
  std::vector<std::size_t> unmatched;
  std::vector<std::optional<char>> extracted;
};

/// Letters are extracted from `outputs`; golds must be single letters.
AccuracyReport accuracy(const std::vector<std::string>& outputs,
                        const std::vector<std::string>& golds, int option_count = 5);

json to_json(const AccuracyReport& r);

}  // namespace medaug::metrics
