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

// Offline rule-based responder. Replies are pure functions of the request,
// well-formed for every task the pipeline issues.

#include <fmt/format.h>

#include <regex>

#include "medaug/analyze.hpp"
#include "medaug/common.hpp"
#include "medaug/llm.hpp"

namespace medaug::llm {

namespace {

std::string first_user(const Request& r) {
  for (const auto& m : r.messages) {
    if (m.role == "user") return m.text;
  }
  return {};
}

std::string after(const std::string& text, std::string_view marker) {
  const auto pos = text.find(marker);
  return pos == std::string::npos ? std::string() : text.substr(pos + marker.size());
}

std::string between(const std::string& text, std::string_view start, std::string_view end) {
  std::string tail = after(text, start);
  const auto pos = tail.find(end);
  return pos == std::string::npos ? tail : tail.substr(0, pos);
}

std::string first_words(const std::string& text, std::size_t n) {
  const auto words = split_whitespace(text);
  std::string out;
  for (std::size_t i = 0; i < words.size() && i < n; ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

std::vector<std::string> sentences(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : collapse_whitespace(text)) {
    cur.push_back(c);
    if (c == '.' || c == '?' || c == '!') {
      if (auto t = trim(cur); !t.empty()) out.push_back(t);
      cur.clear();
    }
  }
  if (auto t = trim(cur); !t.empty()) out.push_back(t);
  return out;
}

// Case material for generation prompts: body, else retrieved context.
std::string grounding(const std::string& user) {
  std::string body = trim(after(user, "Here is the image and its description:\n"));
  if (!body.empty()) return body;
  return trim(between(user, "Relevant medical guidelines and clinical cases:\n", "\n\n"));
}

std::string stub_report(const Request& r) {
  const std::string src = grounding(first_user(r));
  return fmt::format("Report: {} findings: {}", r.task, src.empty() ? "none" : first_words(src, 60));
}

std::string stub_qa(const Request& r) {
  const std::string user = first_user(r);
  std::smatch m;
  int n = 3;
  if (std::regex_search(user, m, std::regex(R"(generate (\d+) valuable questions)"))) {
    n = std::stoi(m[1].str());
  }
  auto facts = sentences(after(user, "Here is the image and its description:\n"));
  if (facts.empty()) facts.push_back("No description was provided.");
  std::string out;
  for (int i = 0; i < n; ++i) {
    out += fmt::format("Question: What does statement {} of the description say?\n", i + 1);
    out += fmt::format("Answer: {}\n", facts[static_cast<std::size_t>(i) % facts.size()]);
  }
  return out;
}

std::string stub_rubric(const Request& r) {
  const std::string answer = between(first_user(r), "Here is the answer:", "\nPlease do not");
  auto items = sentences(answer);
  if (items.empty()) items.push_back(trim(answer));
  if (items.size() > 10) items.resize(10);
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += fmt::format("{}. {}", i + 1, items[i]);
  return out;
}

std::string stub_score(const Request& r) {
  const auto digest = sha256(r.key());
  return fmt::format("{:.1f}", 0.5 * (digest[0] % 11));
}

std::string stub_question_class(const Request& r) {
  const std::string q = to_lower_ascii(between(first_user(r), "Question: ", "\nAnswer: "));
  for (const char* cue : {"why", "most likely", "diagnos", "explain", "next step", "cause"}) {
    if (q.find(cue) != std::string::npos) return "inference";
  }
  return "knowledge";
}

std::string stub_modality(const Request& r) {
  const std::string caption = after(first_user(r), "Caption: ");
  if (caption.empty()) return "Other";
  return std::string(to_string(analyze::map_modality_reply(caption).label));
}

ProviderReply respond(const Request& r) {
  const std::string& t = r.task;
  if (t == "report" || t == "subimage_caption" || t.rfind("segment_", 0) == 0) {
    return ProviderReply::ok(stub_report(r));
  }
  if (t == "qa") return ProviderReply::ok(stub_qa(r));
  if (t.rfind("rubric_", 0) == 0) return ProviderReply::ok(stub_rubric(r));
  if (t.rfind("score_", 0) == 0) return ProviderReply::ok(stub_score(r));
  if (t == "question_class") return ProviderReply::ok(stub_question_class(r));
  if (t == "modality") return ProviderReply::ok(stub_modality(r));
  if (t == "translate") return ProviderReply::ok("[zh] " + first_user(r));
  // normalize_style and anything unrecognised: echo the answer text.
  return ProviderReply::ok(first_user(r));
}

}  // namespace

std::shared_ptr<Provider> make_stub_provider() {
  return std::make_shared<FunctionProvider>(respond, "stub");
}

}  // namespace medaug::llm
