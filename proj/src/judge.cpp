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

#include "medaug/judge.hpp"

#include <fmt/format.h>

#include <cctype>
#include <cstdlib>
#include <regex>

#include "medaug/common.hpp"

namespace medaug::judge {

namespace {

constexpr std::string_view kEvaluatorPreamble =
    "Act as a USMLE evaluator, your role involves assessing and comparing a medical student's "
    "explanation to the provided target answer. Begin the assessment by carefully reviewing the "
    "provided target answer. Then, based on following specific criteria, determine the score "
    "for the student's answer.\n";

constexpr std::string_view kKeyPointCriteria =
    "Please judge whether medical student's answer include these key points(or some other "
    "relevant points. But the amount of points must be complete). For example, ground truth "
    "have 10 key points, if student answer include one key he will get 0.5 point(if the answer "
    "include 5 points so should be 2.5).\n";

constexpr std::string_view kInferenceCriteria =
    "Please judge whether medical student's answer's diagnostic reasoning is correct based on "
    "ground truth. For example, ground truth have 10 steps, if student answer include one "
    "correct step he will get 0.5 point(if student have other correct diagnostic reasoning "
    "path it should also be correct. But the amount of evidence must be complete. It means "
    "that each step is about 0.5 point if there are 10 steps).\n";

constexpr std::string_view kEvidenceCriteria =
    "Please judge whether medical student's answer provide detail evidence such as ground "
    "truth. For example, ground truth have 10 evidence, if student answer include one evidence "
    "he will get 0.5 point(if student give other correct detail evidence, it is also correct. "
    "But the amount of evidence must be complete.)\n";

constexpr std::string_view kKeyPointTail =
    "Please only return a float number(from 0 to 5). You should check each point one by "
    "one(shouldn't judge based on language style such as fluence and so on. Only judge based "
    "on whether the student's answer include correct or relevant and complete key points). "
    "Don't generate any other information.";

constexpr std::string_view kInferenceTail =
    "Please only return a float number(from 0 to 5). You should check each step one by "
    "one(shouldn't judge based on language style such as fluence and so on. Only judge based "
    "on whether student's diagnostic reason is correct or relevant). Don't generate any other "
    "information.";

constexpr std::string_view kEvidenceTail =
    "Please only return a float number(from 0 to 5). You should check each evidence one by "
    "one(shouldn't judge based on language style such as fluence and so on. Only judge based "
    "on whether student propose correct and complete diagnostic evidence). Don't generate any "
    "other information.";

constexpr std::string_view kNormalizeSystem =
    "Rewrite the user's text as plain, neutral clinical prose. Keep every claim, finding and "
    "conclusion; add nothing and remove nothing. Return only the rewritten text.";

struct ExtractSpec {
  const char* task;
  const char* instruction;
};

constexpr ExtractSpec kExtract[] = {
    {"rubric_key_points",
     "Based on the question and answer, summarize ten key points that you consider to be the "
     "most crucial from the standard answer."},
    {"rubric_reasoning",
     "Based on the question and answer, please provide a detailed summary of the diagnostic "
     "reasoning from the standard answer."},
    {"rubric_evidence",
     "Based on the question and answer, please provide a detailed evidence list which is "
     "proposed by correct answer."},
};

std::string numbered(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    out += fmt::format("{}. {}\n", i + 1, items[i]);
  }
  return out;
}

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

// Position just past marker `n` at or after `from`, with the marker's start
// in `start`; npos when absent.
std::size_t find_marker(std::string_view text, std::size_t n, std::size_t from,
                        std::size_t& start) {
  const std::string digits = std::to_string(n);
  for (std::size_t pos = text.find(digits, from); pos != std::string_view::npos;
       pos = text.find(digits, pos + 1)) {
    if (pos > 0 && is_digit(text[pos - 1])) continue;
    const std::size_t p = pos + digits.size();
    if (p >= text.size() || (text[p] != '.' && text[p] != ')')) continue;
    if (p + 1 < text.size() && is_digit(text[p + 1])) continue;
    start = pos;
    return p + 1;
  }
  return std::string_view::npos;
}

std::string strip_item(std::string_view s) {
  std::string t = trim(s);
  while (!t.empty() && (t.back() == '}' || t.back() == ',' || t.back() == ';')) {
    t.pop_back();
    t = trim(t);
  }
  return collapse_whitespace(t);
}

}  // namespace

std::string_view to_string(Aspect a) {
  switch (a) {
    case Aspect::kKeyPoints:
      return "key_points";
    case Aspect::kInference:
      return "inference";
    case Aspect::kEvidence:
      return "evidence";
  }
  return "?";
}

const std::vector<std::string>& JudgeRubric::part(Aspect a) const {
  switch (a) {
    case Aspect::kKeyPoints:
      return key_points;
    case Aspect::kInference:
      return reasoning_steps;
    case Aspect::kEvidence:
      return evidence;
  }
  return key_points;
}

json to_json(const JudgeRubric& r) {
  return {{"key_points", r.key_points},
          {"reasoning_steps", r.reasoning_steps},
          {"evidence", r.evidence},
          {"question_sha256", r.question_sha256},
          {"gold_sha256", r.gold_sha256}};
}

NormalizedAnswer normalize_style(const std::string& answer, llm::Client& client,
                                 const JudgeOptions& options) {
  if (trim(answer).empty()) throw_usage("answer must be nonempty");
  llm::Request req;
  req.model = options.model;
  req.task = "normalize_style";
  req.temperature = options.temperature;
  req.messages = {{"system", std::string(kNormalizeSystem)}, {"user", answer}};
  const auto resp = client.call(req);
  if (trim(resp.text).empty()) throw_provider("empty style-normalised answer");
  return {resp.text, answer, sha256_hex(answer), resp.request_key};
}

std::vector<std::string> parse_numbered_list(std::string_view text) {
  std::size_t start = 0;
  std::size_t body = find_marker(text, 1, 0, start);
  if (body == std::string_view::npos) return {};
  std::vector<std::string> items;
  for (std::size_t n = 2;; ++n) {
    std::size_t next_start = 0;
    const std::size_t next_body = find_marker(text, n, body, next_start);
    const std::size_t end = next_body == std::string_view::npos ? text.size() : next_start;
    std::string item = strip_item(text.substr(body, end - body));
    if (item.empty()) return {};
    items.push_back(std::move(item));
    if (next_body == std::string_view::npos) break;
    body = next_body;
  }
  return items;
}

JudgeRubric extract_rubric(const std::string& question, const std::string& gold,
                           llm::Client& client, const JudgeOptions& options) {
  if (trim(question).empty() || trim(gold).empty()) {
    throw_usage("question and gold answer must be nonempty");
  }
  JudgeRubric rubric;
  rubric.question_sha256 = sha256_hex(question);
  rubric.gold_sha256 = sha256_hex(gold);
  std::vector<std::string>* targets[] = {&rubric.key_points, &rubric.reasoning_steps,
                                         &rubric.evidence};
  for (int part = 0; part < 3; ++part) {
    llm::Request req;
    req.model = options.model;
    req.task = kExtract[part].task;
    req.temperature = options.temperature;
    req.messages = {{"user", fmt::format("{} Return the response in the following format: "
                                         "{{1.2.3....}}\nHere is the question:{}\nHere is the "
                                         "answer:{}\nPlease do not provide any additional "
                                         "information.",
                                         kExtract[part].instruction, question, gold)}};
    std::string last;
    for (int attempt = 0; attempt < 2; ++attempt) {
      if (attempt == 1) {
        req.messages.push_back({"assistant", last});
        req.messages.push_back(
            {"user", "Return only a numbered list in the format {1.2.3....}."});
      }
      last = client.call(req).text;
      auto items = parse_numbered_list(last);
      if (!items.empty()) {
        *targets[part] = std::move(items);
        break;
      }
    }
    if (targets[part]->empty()) {
      throw_provider(fmt::format("unparseable numbered list for {} after retry",
                                 kExtract[part].task));
    }
  }
  return rubric;
}

llm::Request build_score_request(const std::string& normalized_answer,
                                 const std::vector<std::string>& rubric_part, Aspect aspect,
                                 const std::string& gold, const JudgeOptions& options) {
  if (rubric_part.empty()) throw_usage("empty rubric part");
  std::string_view criteria;
  std::string_view heading;
  std::string_view tail;
  switch (aspect) {
    case Aspect::kKeyPoints:
      criteria = kKeyPointCriteria;
      heading = "Key Points:";
      tail = kKeyPointTail;
      break;
    case Aspect::kInference:
      criteria = kInferenceCriteria;
      heading = "Ground Truth:";
      tail = kInferenceTail;
      break;
    case Aspect::kEvidence:
      criteria = kEvidenceCriteria;
      heading = "Detail Evidence:";
      tail = kEvidenceTail;
      break;
  }
  std::string prompt = fmt::format("{}{}Medical student's answer:\n{}\n{}\n{}{}", kEvaluatorPreamble,
                                   criteria, normalized_answer, heading, numbered(rubric_part),
                                   tail);
  const std::string g = trim(gold);
  if (!g.empty() && prompt.find(g) != std::string::npos) {
    throw_usage("isolation violated: scoring prompt contains the gold answer");
  }
  llm::Request req;
  req.model = options.model;
  req.task = fmt::format("score_{}", to_string(aspect));
  req.temperature = options.temperature;
  req.messages = {{"user", std::move(prompt)}};
  return req;
}

std::optional<double> parse_score(std::string_view reply) {
  static const std::regex kNumber(R"(^\s*\{?\s*([0-9]+(?:\.[0-9]+)?|\.[0-9]+)\s*\}?\.?\s*$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(reply.begin(), reply.end(), m, kNumber)) return std::nullopt;
  return std::strtod(m[1].str().c_str(), nullptr);
}

double score_aspect(const std::string& normalized_answer,
                    const std::vector<std::string>& rubric_part, Aspect aspect,
                    const std::string& gold, llm::Client& client, const JudgeOptions& options) {
  auto req = build_score_request(normalized_answer, rubric_part, aspect, gold, options);
  std::string last;
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (attempt == 1) {
      req.messages.push_back({"assistant", last});
      req.messages.push_back({"user", "Return only one number from 0 to 5."});
    }
    last = client.call(req).text;
    const auto score = parse_score(last);
    if (score && *score >= 0.0 && *score <= 5.0) return *score;
  }
  if (parse_score(last)) throw_provider("score out of range after retry: " + trim(last));
  throw_provider("unparseable score after retry: " + trim(last));
}

double overall(double key_points, double inference, double evidence) {
  for (double s : {key_points, inference, evidence}) {
    if (!(s >= 0.0 && s <= 5.0)) throw_usage(fmt::format("aspect score {} outside [0, 5]", s));
  }
  return (key_points + inference + evidence) / 3.0;
}

AspectScores make_scores(double key_points, double inference, double evidence) {
  return {key_points, inference, evidence, overall(key_points, inference, evidence)};
}

JudgeItem judge_item_from_json(const json& j) {
  try {
    return {j.at("id").get<std::string>(), j.at("question").get<std::string>(),
            j.at("gold").get<std::string>(), j.at("model_answer").get<std::string>()};
  } catch (const json::exception& e) {
    throw_data(std::string("malformed judge item: ") + e.what());
  }
}

json to_json(const ItemResult& r) {
  json j = {{"id", r.id},
            {"ok", r.ok},
            {"original_sha256", r.original_sha256},
            {"normalized_sha256", r.normalized_sha256},
            {"rubric_sizes",
             {{"key_points", r.key_point_count},
              {"reasoning_steps", r.reasoning_step_count},
              {"evidence", r.evidence_count}}}};
  if (r.ok) {
    j["key_points"] = r.scores.key_points;
    j["inference"] = r.scores.inference;
    j["evidence"] = r.scores.evidence;
    j["overall"] = r.scores.overall;
    j["overall_2dp"] = fmt::format("{:.2f}", round_half_up(r.scores.overall, 2));
  } else {
    j["error"] = r.error.value_or("");
  }
  return j;
}

json aggregate_json(const JudgeReport& report) {
  const auto& a = report.aggregate;
  return {{"aggregate", true},
          {"scored", report.scored},
          {"excluded", report.excluded},
          {"key_points", a.key_points},
          {"inference", a.inference},
          {"evidence", a.evidence},
          {"overall", a.overall},
          {"overall_2dp", fmt::format("{:.2f}", round_half_up(a.overall, 2))}};
}

JudgeReport judge_run(const std::vector<JudgeItem>& items, llm::Client& client,
                      const JudgeOptions& options) {
  if (items.empty()) throw_data("empty judge dataset");
  JudgeReport report;
  report.items.resize(items.size());
  parallel_for(items.size(), options.workers, [&](std::size_t i) {
    const auto& item = items[i];
    ItemResult& r = report.items[i];
    r.id = item.id;
    r.original_sha256 = sha256_hex(item.model_answer);
    try {
      const auto norm = normalize_style(item.model_answer, client, options);
      r.normalized_sha256 = sha256_hex(norm.text);
      const auto rubric = extract_rubric(item.question, item.gold, client, options);
      r.key_point_count = rubric.key_points.size();
      r.reasoning_step_count = rubric.reasoning_steps.size();
      r.evidence_count = rubric.evidence.size();
      double s[3];
      const Aspect aspects[] = {Aspect::kKeyPoints, Aspect::kInference, Aspect::kEvidence};
      for (int a = 0; a < 3; ++a) {
        s[a] = score_aspect(norm.text, rubric.part(aspects[a]), aspects[a], item.gold, client,
                            options);
      }
      r.scores = make_scores(s[0], s[1], s[2]);
      r.ok = true;
    } catch (const Error& e) {
      r.ok = false;
      r.error = e.what();
    }
  });
  double sums[3] = {0, 0, 0};
  for (const auto& r : report.items) {
    if (!r.ok) {
      ++report.excluded;
      continue;
    }
    ++report.scored;
    sums[0] += r.scores.key_points;
    sums[1] += r.scores.inference;
    sums[2] += r.scores.evidence;
  }
  if (report.scored == 0) throw_provider("no judge item could be scored");
  const auto n = static_cast<double>(report.scored);
  report.aggregate = make_scores(sums[0] / n, sums[1] / n, sums[2] / n);
  return report;
}

}  // namespace medaug::judge
