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

#include "medaug/config.hpp"
#include "support/support.hpp"

namespace medaug {
namespace {

TEST(Config, DefaultsAreValidAndRoundTrip) {
  RunConfig c;
  EXPECT_TRUE(validate(c).empty());
  auto back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_EQ(c.k, 4u);
  EXPECT_EQ(c.slice_cap, 20);
  EXPECT_EQ(c.min_words, 20u);
}

TEST(Config, PartialOverrides) {
  auto c = config_from_json({{"k", 6}, {"seed", 11}, {"provider", "stub"}});
  EXPECT_EQ(c.k, 6u);
  EXPECT_EQ(c.seed, 11u);
  EXPECT_EQ(c.model, "gpt-4o");
  RunConfig d;
  EXPECT_NE(config_hash(c), config_hash(d));
}

TEST(Config, ReportsEveryProblem) {
  try {
    config_from_json({{"k", "four"}, {"bogus", 1}, {"qa_min", 5}, {"qa_max", 2},
                      {"temperature", 3.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUsage);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("k: wrong type"), std::string::npos);
    EXPECT_NE(msg.find("unknown key: bogus"), std::string::npos);
    EXPECT_NE(msg.find("qa_max must be >= qa_min"), std::string::npos);
    EXPECT_NE(msg.find("temperature must be in [0, 2]"), std::string::npos);
  }
  EXPECT_THROW(config_from_json(json::array()), Error);
}

TEST(Config, LoadFromFile) {
  testing::TempDir dir;
  write_text(dir.file("c.json"), R"({"workers": 2, "translate_fraction": 0.5})");
  auto c = load_config(dir.file("c.json"));
  EXPECT_EQ(c.effective_workers(), 2);
  write_text(dir.file("bad.json"), "{");
  EXPECT_THROW(load_config(dir.file("bad.json")), Error);
  EXPECT_THROW(load_config(dir.file("missing.json")), Error);
  RunConfig all_cores;
  EXPECT_GE(all_cores.effective_workers(), 1);
}

TEST(Config, ValidateEachRule) {
  RunConfig c;
  c.provider = "openai";
  c.embedder = "clip";
  c.max_attempts = 0;
  c.requests_per_second = 0;
  c.embedding_dim = 0;
  c.k = 0;
  c.slice_cap = 0;
  c.translate_fraction = 1.5;
  c.workers = -1;
  EXPECT_EQ(validate(c).size(), 9u);
}

}  // namespace
}  // namespace medaug
