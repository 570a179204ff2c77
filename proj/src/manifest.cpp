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

#include "medaug/manifest.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "medaug/common.hpp"

namespace medaug::manifest {

using augment::InstructionSample;
using augment::Provenance;
using augment::Role;
using augment::TaskType;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::kPretrain:
      return "pretrain";
    case Stage::kInstruction:
      return "instruction";
    case Stage::kAnnealing:
      return "annealing";
  }
  return "?";
}

Stage parse_stage(std::string_view s) {
  if (s == "pretrain") return Stage::kPretrain;
  if (s == "instruction") return Stage::kInstruction;
  if (s == "annealing") return Stage::kAnnealing;
  throw_usage("unknown stage: " + std::string(s));
}

namespace {

const std::string* caption_text(const InstructionSample& s) {
  for (auto it = s.turns.rbegin(); it != s.turns.rend(); ++it) {
    if (it->role == Role::kAssistant) return &it->text;
  }
  return nullptr;
}

bool admitted(const InstructionSample& s, Stage stage, const ManifestLimits& limits) {
  switch (stage) {
    case Stage::kPretrain: {
      if (s.task_type != TaskType::kCaption) return false;
      const auto* text = caption_text(s);
      return text && word_count(*text) >= limits.min_caption_words;
    }
    case Stage::kInstruction:
      return s.provenance == Provenance::kSynthetic;
    case Stage::kAnnealing:
      return s.provenance == Provenance::kHumanAnnotated;
  }
  return false;
}

}  // namespace

TrainingManifest build_manifest(const std::vector<InstructionSample>& store, Stage stage,
                                std::uint64_t seed, const ManifestLimits& limits) {
  if (store.empty()) throw_data("empty sample store");
  TrainingManifest m;
  m.stage = stage;
  m.seed = seed;
  for (const auto& s : store) {
    if (admitted(s, stage, limits)) {
      m.entries.push_back({s.sample_id, s.provenance, s.language, s.source_case});
    }
  }
  std::sort(m.entries.begin(), m.entries.end(),
            [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
  for (std::size_t i = 1; i < m.entries.size(); ++i) {
    if (m.entries[i].sample_id == m.entries[i - 1].sample_id) {
      throw_data("duplicate sample_id in store: " + m.entries[i].sample_id);
    }
  }
  SeededRng rng(seed);
  rng.shuffle(m.entries);
  if (limits.max_samples && m.entries.size() > *limits.max_samples) {
    m.entries.resize(*limits.max_samples);
  }
  if (m.entries.empty()) throw_data("stage filter yields zero samples");
  return m;
}

std::vector<InstructionSample> caption_pair_samples(const std::vector<CaseRecord>& records) {
  std::vector<InstructionSample> out;
  for (const auto& r : records) {
    for (const auto& img : r.images) {
      if (!img.caption || trim(*img.caption).empty()) continue;
      InstructionSample s;
      s.sample_id = fmt::format("{}/{}/pair", r.id, img.image_id);
      s.images = {img.uri};
      s.turns = {{Role::kUser, "Describe the image."}, {Role::kAssistant, *img.caption}};
      s.task_type = TaskType::kCaption;
      s.provenance = r.human_annotated ? Provenance::kHumanAnnotated : Provenance::kSynthetic;
      s.language = r.language;
      s.source_case = r.id;
      out.push_back(std::move(s));
    }
  }
  return out;
}

TrainingManifest exclude_benchmark_leakage(const TrainingManifest& manifest,
                                           const std::set<std::string>& benchmark_ids) {
  TrainingManifest out = manifest;
  out.entries.clear();
  for (const auto& e : manifest.entries) {
    if (benchmark_ids.count(e.source_case)) {
      ++out.benchmark_removals;
    } else {
      out.entries.push_back(e);
    }
  }
  if (out.entries.empty()) throw_data("stage filter yields zero samples");
  return out;
}

json header_json(const TrainingManifest& m) {
  std::map<std::string, std::size_t> by_provenance;
  std::map<std::string, std::size_t> by_language;
  for (const auto& e : m.entries) {
    ++by_provenance[std::string(augment::to_string(e.provenance))];
    ++by_language[std::string(to_string(e.language))];
  }
  return {{"format_version", kManifestFormatVersion},
          {"stage", to_string(m.stage)},
          {"seed", m.seed},
          {"counts",
           {{"total", m.entries.size()},
            {"provenance", by_provenance},
            {"language", by_language},
            {"benchmark_removals", m.benchmark_removals}}}};
}

json to_json(const ManifestEntry& e) {
  return {{"sample_id", e.sample_id},
          {"provenance", augment::to_string(e.provenance)},
          {"language", to_string(e.language)},
          {"source_case", e.source_case}};
}

std::string to_text(const TrainingManifest& m) {
  std::string out = header_json(m).dump() + "\n";
  for (const auto& e : m.entries) out += to_json(e).dump() + "\n";
  return out;
}

TrainingManifest from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  TrainingManifest m;
  bool header = false;
  std::size_t lineno = 0;
  try {
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      const auto j = json::parse(line);
      if (!header) {
        if (j.at("format_version").get<int>() != kManifestFormatVersion) {
          throw_data("unsupported manifest format_version");
        }
        m.stage = parse_stage(j.at("stage").get<std::string>());
        m.seed = j.at("seed").get<std::uint64_t>();
        m.benchmark_removals = j.at("counts").value("benchmark_removals", std::size_t{0});
        header = true;
        continue;
      }
      m.entries.push_back({j.at("sample_id").get<std::string>(),
                           augment::parse_provenance(j.at("provenance").get<std::string>()),
                           parse_language(j.at("language").get<std::string>()),
                           j.value("source_case", std::string())});
    }
  } catch (const json::exception& e) {
    throw_data(fmt::format("malformed manifest line {}: {}", lineno, e.what()));
  }
  if (!header) throw_data("manifest has no header");
  return m;
}

}  // namespace medaug::manifest
