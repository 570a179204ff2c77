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

#include <atomic>
#include <set>
#include <vector>

#include "medaug/common.hpp"

namespace medaug {
namespace {

TEST(Strings, TrimAndCase) {
  EXPECT_EQ(trim("  a b \n"), "a b");
  EXPECT_EQ(trim(""), "");
  EXPECT_EQ(to_lower_ascii("CT Scan"), "ct scan");
  EXPECT_EQ(to_upper_ascii("mri"), "MRI");
  EXPECT_EQ(collapse_whitespace(" a \t b\n\nc "), "a b c");
}

TEST(Strings, WordCount) {
  EXPECT_EQ(word_count(""), 0u);
  EXPECT_EQ(word_count("one  two\tthree\n"), 3u);
  EXPECT_EQ(split_whitespace(" x y ").size(), 2u);
  EXPECT_TRUE(contains_ci("Axial CT image", "ct"));
  EXPECT_FALSE(contains_ci("Axial", "coronal"));
}

TEST(RoundHalfUp, TwoDecimals) {
  EXPECT_DOUBLE_EQ(round_half_up(1.125, 2), 1.13);
  EXPECT_DOUBLE_EQ(round_half_up(3.5 / 3.0, 2), 1.17);
  EXPECT_DOUBLE_EQ(round_half_up(-0.125, 2), -0.13);
  EXPECT_DOUBLE_EQ(round_half_up(0.0, 1), 0.0);
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256("abc").size(), 32u);
}

TEST(Errors, KindsMapToExitCodes) {
  try {
    throw_provider("x");
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kProvider);
    EXPECT_EQ(e.exit_code(), 3);
  }
  EXPECT_THROW(read_file_bytes("/nonexistent/medaug"), Error);
}

TEST(SeededRng, DeterministicAndInRange) {
  SeededRng a(7), b(7);
  for (int i = 0; i < 100; ++i) {
    auto x = a.below(13);
    EXPECT_EQ(x, b.below(13));
    EXPECT_LT(x, 13u);
  }
}

TEST(SeededRng, SampleIndicesDistinct) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SeededRng rng(seed);
    const std::size_t n = 1 + seed * 3;
    const std::size_t k = n / 2;
    auto idx = rng.sample_indices(n, k);
    ASSERT_EQ(idx.size(), k);
    std::set<std::size_t> uniq(idx.begin(), idx.end());
    EXPECT_EQ(uniq.size(), k);
    for (auto i : idx) EXPECT_LT(i, n);
  }
}

TEST(SeededRng, ShuffleIsPermutation) {
  std::vector<int> v(40);
  for (int i = 0; i < 40; ++i) v[i] = i;
  SeededRng rng(3);
  rng.shuffle(v);
  std::set<int> s(v.begin(), v.end());
  EXPECT_EQ(s.size(), 40u);
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  for (int workers : {1, 2, 4}) {
    std::vector<std::atomic<int>> hits(97);
    parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
}

TEST(ParallelFor, RethrowsLowestFailingIndex) {
  try {
    parallel_for(20, 3, [](std::size_t i) {
      if (i == 5 || i == 11) throw_data("bad " + std::to_string(i));
    });
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "bad 5");
  }
}

}  // namespace
}  // namespace medaug
