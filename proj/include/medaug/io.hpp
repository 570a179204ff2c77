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

#include <nlohmann/json.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace medaug {

using json = nlohmann::json;

/// One non-blank line of a line-delimited file. `line` is 1-based.
struct RawLine {
  std::size_t line = 0;
  std::string text;
};

std::vector<RawLine> read_nonblank_lines(const std::string& path);

/// Parses every non-blank line as JSON. Malformed lines throw a data error
/// naming the line number.
std::vector<json> read_jsonl(const std::string& path);

void write_jsonl(const std::string& path, const std::vector<json>& rows);
void write_text(const std::string& path, const std::string& content);

/// Serialises one record per line. Keys are sorted (nlohmann's default map),
/// so output is byte-stable for equal values.
std::string to_jsonl(const std::vector<json>& rows);

template <typename T>
T optional_field(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<T>();
}

}  // namespace medaug
