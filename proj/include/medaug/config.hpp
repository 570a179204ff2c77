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

#include <cstdint>
#include <string>
#include <vector>

#include "medaug/io.hpp"

namespace medaug {

struct RunConfig {
  // Inputs.
  std::string cases_path;
  std::string guidelines_path;
  std::string caption_pairs_path;

  // Provider.
  std::string provider = "mock";  // mock | stub | http
  std::string mock_script;
  std::string model = "gpt-4o";
  double temperature = 0.0;
  int max_attempts = 5;
  int requests_per_second = 8;
  std::string cache_dir;

  // Embedding.
  std::string embedder = "stub";  // stub | http
  std::string embedder_url = "http://127.0.0.1:8080";
  std::size_t embedding_dim = 512;

  // Retrieval.
  std::size_t k = 4;
  bool require_guideline = true;

  // Selection.
  int slice_cap = 20;
  std::size_t min_words = 20;

  // Generation.
  int qa_min = 3;
  int qa_max = 10;
  int qa_words_per_extra = 80;
  std::size_t context_token_budget = 1500;
  double translate_fraction = 0.0;

  // Judge.
  std::string judge_model = "gpt-4o";
  double judge_temperature = 0.0;

  std::uint64_t seed = 0;
  /// 0 means one worker per available core.
  int workers = 0;
  std::string output_dir = "out";

  int effective_workers() const;
};

json to_json(const RunConfig& c);
/// Unknown keys and type mismatches are reported through validate-style
/// errors: throws a usage error listing every problem.
RunConfig config_from_json(const json& j);
RunConfig load_config(const std::string& path);

/// Every violated constraint, empty when valid.
std::vector<std::string> validate(const RunConfig& c);

/// SHA-256 of the canonical JSON form.
std::string config_hash(const RunConfig& c);

}  // namespace medaug
