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

#include "medaug/io.hpp"

#include <filesystem>
#include <fstream>

#include "medaug/common.hpp"

namespace medaug {

std::vector<RawLine> read_nonblank_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_data("unreadable file: " + path);
  std::vector<RawLine> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    out.push_back({n, line});
  }
  return out;
}

std::vector<json> read_jsonl(const std::string& path) {
  std::vector<json> rows;
  for (const auto& raw : read_nonblank_lines(path)) {
    try {
      rows.push_back(json::parse(raw.text));
    } catch (const json::parse_error& e) {
      throw_data(path + ":" + std::to_string(raw.line) +
                 ": malformed JSON: " + e.what());
    }
  }
  return rows;
}

std::string to_jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const auto& row : rows) {
    out += row.dump();
    out.push_back('\n');
  }
  return out;
}

void write_text(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_data("cannot write file: " + path);
  out << content;
}

void write_jsonl(const std::string& path, const std::vector<json>& rows) {
  write_text(path, to_jsonl(rows));
}

}  // namespace medaug
