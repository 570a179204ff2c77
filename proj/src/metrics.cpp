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

#include "medaug/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <regex>

#include "medaug/common.hpp"

namespace medaug::metrics {

namespace {

bool token_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) || c == '-' || c == '\'';
}

std::string upper_id(std::string_view id) { return to_upper_ascii(trim(id)); }

}  // namespace

std::vector<std::string> concept_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (token_char(c)) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

void ConceptLexicon::add(std::string_view surface, std::string_view concept_id) {
  auto tokens = concept_tokens(surface);
  const std::string id = upper_id(concept_id);
  if (tokens.empty()) throw_data(fmt::format("lexicon surface '{}' has no tokens", surface));
  if (id.empty()) throw_data(fmt::format("lexicon surface '{}' has no concept id", surface));
  auto [it, inserted] = entries_.emplace(tokens, id);
  if (!inserted && it->second != id) {
    throw_data(fmt::format("lexicon surface '{}' maps to both {} and {}", surface, it->second,
                           id));
  }
  max_tokens_ = std::max(max_tokens_, tokens.size());
}

ConceptLexicon ConceptLexicon::from_rows(const std::vector<json>& rows) {
  ConceptLexicon lex;
  for (const auto& row : rows) {
    try {
      lex.add(row.at("surface").get<std::string>(), row.at("concept_id").get<std::string>());
    } catch (const json::exception& e) {
      throw_data(std::string("malformed lexicon row: ") + e.what());
    }
  }
  return lex;
}

ConceptLexicon ConceptLexicon::from_jsonl(const std::string& path) {
  return from_rows(read_jsonl(path));
}

std::string ConceptLexicon::version() const {
  std::string blob;
  for (const auto& [tokens, id] : entries_) {
    for (const auto& t : tokens) blob += t + ' ';
    blob += '\t' + id + '\n';
  }
  return sha256_hex(blob);
}

ConceptSet ConceptLexicon::extract(std::string_view text) const {
  const auto tokens = concept_tokens(text);
  ConceptSet out;
  std::vector<std::string> window;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const std::size_t longest = std::min(max_tokens_, tokens.size() - i);
    std::size_t matched = 0;
    for (std::size_t len = longest; len >= 1; --len) {
      window.assign(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                    tokens.begin() + static_cast<std::ptrdiff_t>(i + len));
      auto it = entries_.find(window);
      if (it != entries_.end()) {
        out.insert(it->second);
        matched = len;
        break;
      }
    }
    i += matched > 0 ? matched : 1;
  }
  return out;
}

ConceptSet extract_concepts(std::string_view text, const ConceptLexicon& lexicon) {
  if (lexicon.empty()) throw_usage("empty lexicon");
  return lexicon.extract(text);
}

Prf umls_prf(const ConceptSet& c_ref, const ConceptSet& c_gen) {
  if (c_ref.empty() && c_gen.empty()) return {1.0, 1.0, 1.0};
  std::size_t shared = 0;
  for (const auto& c : c_gen) shared += c_ref.count(c);
  Prf r;
  r.precision = c_gen.empty() ? 0.0 : static_cast<double>(shared) / c_gen.size();
  r.recall = c_ref.empty() ? 0.0 : static_cast<double>(shared) / c_ref.size();
  const double sum = r.precision + r.recall;
  r.f1 = sum == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / sum;
  return r;
}

UmlsReport umls_report(const std::vector<std::string>& references,
                       const std::vector<std::string>& generations,
                       const ConceptLexicon& lexicon) {
  if (references.size() != generations.size()) {
    throw_data(fmt::format("length mismatch: {} references vs {} generations", references.size(),
                           generations.size()));
  }
  if (references.empty()) throw_data("no items to score");
  UmlsReport rep;
  rep.n = references.size();
  for (std::size_t i = 0; i < rep.n; ++i) {
    const auto prf = umls_prf(extract_concepts(references[i], lexicon),
                              extract_concepts(generations[i], lexicon));
    rep.per_item.push_back(prf);
    rep.precision += prf.precision;
    rep.recall += prf.recall;
    rep.f1 += prf.f1;
  }
  const auto n = static_cast<double>(rep.n);
  rep.precision /= n;
  rep.recall /= n;
  rep.f1 /= n;
  return rep;
}

json to_json(const UmlsReport& r) {
  return {{"metric", "umls"},
          {"N", r.n},
          {"P", r.precision},
          {"R", r.recall},
          {"F1", r.f1},
          {"F1_definition", "mean of per-item F1"}};
}

namespace {

struct LetterPatterns {
  std::regex answer_cue;
  std::regex parenthesized;
  std::regex option_cue;
  std::regex bare;
};

LetterPatterns make_patterns(int option_count) {
  const char last = static_cast<char>('A' + option_count - 1);
  const char last_lower = static_cast<char>('a' + option_count - 1);
  const std::string up = fmt::format("A-{}", last);
  const std::string lo = fmt::format("a-{}", last_lower);
  return {
      std::regex(fmt::format(
          R"([Aa][Nn][Ss][Ww][Ee][Rr](?:\s+(?:is|would be|will be|should be))?\s*[:\-=]?\s*)"
          R"((?:[Oo]ption\s*|[Cc]hoice\s*)?(?:[\(\[]([{0}{1}])[\)\]]|([{0}])(?![A-Za-z0-9])|)"
          R"(([{1}])(?=[.):,]|\s*$)))",
          up, lo)),
      std::regex(fmt::format(R"(\(([{0}])\))", up)),
      std::regex(fmt::format(R"((?:[Oo]ption|[Cc]hoice)\s+([{0}{1}])(?![A-Za-z0-9]))", up, lo)),
      std::regex(fmt::format(R"((?:^|[^A-Za-z0-9'])([{0}])(?![A-Za-z0-9']))", up)),
  };
}

std::optional<char> first_group(const std::smatch& m) {
  for (std::size_t g = 1; g < m.size(); ++g) {
    if (m[g].matched && m[g].length() == 1) {
      return static_cast<char>(std::toupper(static_cast<unsigned char>(m[g].str()[0])));
    }
  }
  return std::nullopt;
}

// An uppercase "A" followed by a lowercase word reads as the article.
bool looks_like_article(const std::string& s, std::size_t pos) {
  if (s[pos] != 'A') return false;
  std::size_t p = pos + 1;
  if (p >= s.size() || s[p] != ' ') return false;
  while (p < s.size() && s[p] == ' ') ++p;
  if (p >= s.size() || !std::islower(static_cast<unsigned char>(s[p]))) return false;
  std::size_t e = p;
  while (e < s.size() && std::isalpha(static_cast<unsigned char>(s[e]))) ++e;
  const std::string word = s.substr(p, e - p);
  return word != "is" && word != "was" && word != "would" && word != "seems" &&
         word != "appears" && word != "best" && word != "correct";
}

}  // namespace

std::optional<char> extract_letter(std::string_view output, int option_count) {
  if (option_count < 2 || option_count > 26) throw_usage("option count must be in [2, 26]");
  const auto p = make_patterns(option_count);
  const std::string s(output);
  std::smatch m;

  // Last explicit "answer" cue wins (models often restate a final answer).
  std::optional<char> cued;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), p.answer_cue);
       it != std::sregex_iterator(); ++it) {
    if (auto c = first_group(*it)) cued = c;
  }
  if (cued) return cued;
  if (std::regex_search(s, m, p.parenthesized)) return first_group(m);
  if (std::regex_search(s, m, p.option_cue)) return first_group(m);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), p.bare); it != std::sregex_iterator();
       ++it) {
    const auto pos = static_cast<std::size_t>((*it).position(1));
    if (!looks_like_article(s, pos)) return s[pos];
  }
  return std::nullopt;
}

AccuracyReport accuracy(const std::vector<std::string>& outputs,
                        const std::vector<std::string>& golds, int option_count) {
  if (outputs.size() != golds.size()) {
    throw_data(fmt::format("length mismatch: {} predictions vs {} golds", outputs.size(),
                           golds.size()));
  }
  if (outputs.empty()) throw_data("no items to score");
  AccuracyReport rep;
  rep.n = outputs.size();
  for (std::size_t i = 0; i < rep.n; ++i) {
    const std::string g = to_upper_ascii(trim(golds[i]));
    if (g.size() != 1 || g[0] < 'A' || g[0] >= 'A' + option_count) {
      throw_data(fmt::format("gold {} is not an option letter: '{}'", i, golds[i]));
    }
    const auto letter = extract_letter(outputs[i], option_count);
    rep.extracted.push_back(letter);
    if (!letter) {
      rep.unmatched.push_back(i);
    } else if (*letter == g[0]) {
      ++rep.correct;
    }
  }
  rep.accuracy = static_cast<double>(rep.correct) / static_cast<double>(rep.n);
  return rep;
}

json to_json(const AccuracyReport& r) {
  return {{"metric", "accuracy"},
          {"N", r.n},
          {"correct", r.correct},
          {"accuracy", r.accuracy},
          {"accuracy_3dp", fmt::format("{:.3f}", round_half_up(r.accuracy, 3))},
          {"unmatched", r.unmatched}};
}

}  // namespace medaug::metrics
