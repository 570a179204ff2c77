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

#include <gtest/gtest.h>

#include <set>

#include "medaug/manifest.hpp"
#include "support/support.hpp"

namespace medaug::manifest {
namespace {

using augment::InstructionSample;
using augment::Provenance;
using augment::Role;
using augment::TaskType;

InstructionSample sample(std::string id, TaskType type, Provenance prov, std::size_t words,
                         std::string source_case = "case") {
  InstructionSample s;
  s.sample_id = std::move(id);
  s.task_type = type;
  s.provenance = prov;
  s.source_case = std::move(source_case);
  std::string text;
  for (std::size_t i = 0; i < words; ++i) text += "w ";
  s.turns = {{Role::kUser, "u"}, {Role::kAssistant, text}};
  return s;
}

std::vector<InstructionSample> store() {
  return {
      sample("a/cap", TaskType::kCaption, Provenance::kHumanAnnotated, 25, "a"),
      sample("a/report", TaskType::kReport, Provenance::kHumanAnnotated, 40, "a"),
      sample("b/cap", TaskType::kCaption, Provenance::kSynthetic, 10, "b"),
      sample("b/qa1", TaskType::kOpenQa, Provenance::kSynthetic, 5, "b"),
      sample("c/cap", TaskType::kCaption, Provenance::kSynthetic, 20, "c"),
      sample("c/qa1", TaskType::kClosedQa, Provenance::kSynthetic, 1, "c"),
  };
}

std::set<std::string> ids(const TrainingManifest& m) {
  std::set<std::string> out;
  for (const auto& e : m.entries) out.insert(e.sample_id);
  return out;
}

TEST(Manifest, StageFilters) {
  EXPECT_EQ(ids(build_manifest(store(), Stage::kPretrain, 1)),
            (std::set<std::string>{"a/cap", "c/cap"}));
  EXPECT_EQ(ids(build_manifest(store(), Stage::kInstruction, 1)),
            (std::set<std::string>{"b/cap", "b/qa1", "c/cap", "c/qa1"}));
  auto annealing = build_manifest(store(), Stage::kAnnealing, 1);
  EXPECT_EQ(ids(annealing), (std::set<std::string>{"a/cap", "a/report"}));
  for (const auto& e : annealing.entries) EXPECT_EQ(e.provenance, Provenance::kHumanAnnotated);
}

TEST(Manifest, OrderDependsOnSeedNotInput) {
  std::vector<InstructionSample> big;
  for (int i = 0; i < 50; ++i) {
    big.push_back(sample("s" + std::to_string(i), TaskType::kOpenQa, Provenance::kSynthetic, 3));
  }
  auto a = build_manifest(big, Stage::kInstruction, 7);
  auto reversed = big;
  std::reverse(reversed.begin(), reversed.end());
  auto b = build_manifest(reversed, Stage::kInstruction, 7);
  EXPECT_EQ(to_text(a), to_text(b));
  auto c = build_manifest(big, Stage::kInstruction, 8);
  EXPECT_NE(to_text(a), to_text(c));
  ManifestLimits lim;
  lim.max_samples = 10;
  auto capped = build_manifest(big, Stage::kInstruction, 7, lim);
  ASSERT_EQ(capped.entries.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(capped.entries[i].sample_id, a.entries[i].sample_id);
  }
}

TEST(Manifest, Errors) {
  EXPECT_THROW(build_manifest({}, Stage::kPretrain, 0), Error);
  auto s = store();
  s.push_back(s[0]);
  EXPECT_THROW(build_manifest(s, Stage::kAnnealing, 0), Error);
  std::vector<InstructionSample> only_synth = {store()[3]};
  try {
    build_manifest(only_synth, Stage::kAnnealing, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()), "stage filter yields zero samples");
  }
  EXPECT_THROW(parse_stage("finetune"), Error);
}

TEST(Manifest, BenchmarkExclusion) {
  auto m = build_manifest(store(), Stage::kInstruction, 3);
  auto cleaned = exclude_benchmark_leakage(m, {"b"});
  EXPECT_EQ(ids(cleaned), (std::set<std::string>{"c/cap", "c/qa1"}));
  EXPECT_EQ(cleaned.benchmark_removals, 2u);
  EXPECT_EQ(header_json(cleaned)["counts"]["benchmark_removals"], 2);
  EXPECT_THROW(exclude_benchmark_leakage(m, {"b", "c"}), Error);
}

TEST(Manifest, TextRoundTrip) {
  auto m = exclude_benchmark_leakage(build_manifest(store(), Stage::kInstruction, 3), {"b"});
  const auto text = to_text(m);
  auto back = from_text(text);
  EXPECT_EQ(to_text(back), text);
  auto header = json::parse(text.substr(0, text.find('\n')));
  EXPECT_EQ(header["format_version"], 1);
  EXPECT_EQ(header["stage"], "instruction");
  EXPECT_EQ(header["counts"]["provenance"]["synthetic"], 2);
  EXPECT_THROW(from_text(""), Error);
  EXPECT_THROW(from_text("{\"format_version\":2,\"stage\":\"pretrain\",\"seed\":0}"), Error);
  EXPECT_THROW(from_text("not json"), Error);
}

TEST(Manifest, CaptionPairSamples) {
  CaseRecord r;
  r.id = "p1";
  r.source = Source::kPmc;
  ImageRef im;
  im.image_id = "p1";
  im.uri = "p1.png";
  im.caption = "a caption";
  r.images = {im};
  auto out = caption_pair_samples({r});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].sample_id, "p1/p1/pair");
  EXPECT_EQ(out[0].task_type, TaskType::kCaption);
  EXPECT_EQ(out[0].provenance, Provenance::kSynthetic);
  EXPECT_FALSE(augment::validate(out[0]).has_value());
}

}  // namespace
}  // namespace medaug::manifest
