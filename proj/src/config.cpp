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

#include "medaug/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <set>
#include <thread>

#include "medaug/common.hpp"

namespace medaug {

int RunConfig::effective_workers() const {
  if (workers > 0) return workers;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

#define MEDAUG_CONFIG_FIELDS(X)                                                                 \
  X(cases_path)                                                                                 \
  X(guidelines_path)                                                                            \
  X(caption_pairs_path)                                                                         \
  X(provider)                                                                                   \
  X(mock_script)                                                                                \
  X(model)                                                                                      \
  X(temperature)                                                                                \
  X(max_attempts)                                                                               \
  X(requests_per_second)                                                                        \
  X(cache_dir)                                                                                  \
  X(embedder)                                                                                   \
  X(embedder_url)                                                                               \
  X(embedding_dim)                                                                              \
  X(k)                                                                                          \
  X(require_guideline)                                                                          \
  X(slice_cap)                                                                                  \
  X(min_words)                                                                                  \
  X(qa_min)                                                                                     \
  X(qa_max)                                                                                     \
  X(qa_words_per_extra)                                                                         \
  X(context_token_budget)                                                                       \
  X(translate_fraction)                                                                         \
  X(judge_model)                                                                                \
  X(judge_temperature)                                                                          \
  X(seed)                                                                                       \
  X(workers)                                                                                    \
  X(output_dir)

json to_json(const RunConfig& c) {
  json j = json::object();
#define X(name) j[#name] = c.name;
  MEDAUG_CONFIG_FIELDS(X)
#undef X
  return j;
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw_usage("config must be a JSON object");
  RunConfig c;
  std::vector<std::string> problems;
  std::set<std::string> known;
#define X(name)                                                                    \
  known.insert(#name);                                                             \
  if (j.contains(#name)) {                                                         \
    try {                                                                          \
      j.at(#name).get_to(c.name);                                                  \
    } catch (const json::exception&) {                                             \
      problems.push_back(fmt::format("{}: wrong type ({})", #name, j[#name].dump())); \
    }                                                                              \
  }
  MEDAUG_CONFIG_FIELDS(X)
#undef X
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) problems.push_back("unknown key: " + key);
  }
  for (auto& p : validate(c)) problems.push_back(std::move(p));
  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw_usage(msg);
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  const std::string text = read_file_bytes(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw_usage(fmt::format("config {} is not valid JSON: {}", path, e.what()));
  }
  return config_from_json(j);
}

std::vector<std::string> validate(const RunConfig& c) {
  std::vector<std::string> p;
  if (c.provider != "mock" && c.provider != "stub" && c.provider != "http") {
    p.push_back("provider must be mock, stub or http");
  }
  if (c.embedder != "stub" && c.embedder != "http") p.push_back("embedder must be stub or http");
  if (c.model.empty()) p.push_back("model must be nonempty");
  if (c.judge_model.empty()) p.push_back("judge_model must be nonempty");
  if (!(c.temperature >= 0.0 && c.temperature <= 2.0)) p.push_back("temperature must be in [0, 2]");
  if (!(c.judge_temperature >= 0.0 && c.judge_temperature <= 2.0)) {
    p.push_back("judge_temperature must be in [0, 2]");
  }
  if (c.max_attempts < 1) p.push_back("max_attempts must be >= 1");
  if (c.requests_per_second < 1) p.push_back("requests_per_second must be >= 1");
  if (c.embedding_dim < 1) p.push_back("embedding_dim must be >= 1");
  if (c.k < 1) p.push_back("k must be >= 1");
  if (c.slice_cap < 1) p.push_back("slice_cap must be >= 1");
  if (c.min_words < 1) p.push_back("min_words must be >= 1");
  if (c.qa_min < 1) p.push_back("qa_min must be >= 1");
  if (c.qa_max < c.qa_min) p.push_back("qa_max must be >= qa_min");
  if (c.qa_words_per_extra < 1) p.push_back("qa_words_per_extra must be >= 1");
  if (c.context_token_budget < 1) p.push_back("context_token_budget must be >= 1");
  if (!(c.translate_fraction >= 0.0 && c.translate_fraction <= 1.0)) {
    p.push_back("translate_fraction must be in [0, 1]");
  }
  if (c.workers < 0) p.push_back("workers must be >= 0");
  return p;
}

std::string config_hash(const RunConfig& c) { return sha256_hex(to_json(c).dump()); }

}  // namespace medaug
