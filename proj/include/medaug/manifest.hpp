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
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "medaug/augment.hpp"
#include "medaug/corpus.hpp"
#include "medaug/io.hpp"

namespace medaug::manifest {

inline constexpr int kManifestFormatVersion = 1;

enum class Stage { kPretrain, kInstruction, kAnnealing };

std::string_view to_string(Stage s);
Stage parse_stage(std::string_view s);

struct ManifestEntry {
  std::string sample_id;
  augment::Provenance provenance = augment::Provenance::kSynthetic;
  Language language = Language::kEn;
  std::string source_case;
};

struct ManifestLimits {
  std::optional<std::size_t> max_samples;
  /// Pretrain only: captions shorter than this are dropped.
  std::size_t min_caption_words = 20;
};

struct TrainingManifest {
  Stage stage = Stage::kPretrain;
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> entries;
  std::size_t benchmark_removals = 0;
};

/// Pretrain keeps caption samples whose caption reaches min_caption_words;
/// instruction keeps synthetic samples; annealing keeps human_annotated ones.
/// Input order does not matter: the filtered set is sorted by id, then
/// shuffled with `seed`, then capped.
TrainingManifest build_manifest(const std::vector<augment::InstructionSample>& store, Stage stage,
                                std::uint64_t seed, const ManifestLimits& limits = {});

/// One caption sample per captioned image, for building pretrain stores from
/// raw image-caption pairs.
std::vector<augment::InstructionSample> caption_pair_samples(
    const std::vector<CaseRecord>& records);

/// Drops entries whose source case is listed. Throws "stage filter yields
/// zero samples" when nothing remains.
TrainingManifest exclude_benchmark_leakage(const TrainingManifest& manifest,
                                           const std::set<std::string>& benchmark_ids);

json header_json(const TrainingManifest& m);
json to_json(const ManifestEntry& e);
/// Header line followed by one line per entry.
std::string to_text(const TrainingManifest& m);
TrainingManifest from_text(std::string_view text);

}  // namespace medaug::manifest
