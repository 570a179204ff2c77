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

#include <algorithm>
#include <filesystem>
#include <thread>

#include "medaug/llm.hpp"
#include "support/support.hpp"

namespace medaug::llm {
namespace {

using medaug::testing::TempDir;

Request make_request(const std::string& text, const std::string& task = "qa") {
  Request r;
  r.task = task;
  r.messages = {{"system", "sys"}, {"user", text}};
  return r;
}

std::unique_ptr<Client> client_with(std::shared_ptr<Provider> p,
                                    std::shared_ptr<VirtualClock> clock,
                                    ClientOptions opts = {}) {
  opts.requests_per_second = 1000;
  return std::make_unique<Client>(std::move(p), opts, clock);
}

TEST(RequestKey, StableAndSensitive) {
  auto a = make_request("hello");
  auto b = make_request("hello");
  EXPECT_EQ(a.key(), b.key());
  EXPECT_EQ(a.key().size(), 64u);
  b.temperature = 0.2;
  EXPECT_NE(a.key(), b.key());
  b = a;
  b.task = "report";
  EXPECT_NE(a.key(), b.key());
  b = a;
  b.attachments.push_back({"x.png", "d1"});
  auto c = a;
  c.attachments.push_back({"elsewhere/x.png", "d1"});
  EXPECT_EQ(b.key(), c.key());
}

TEST(RequestKey, AttachmentDigestIsContentHash) {
  TempDir dir;
  write_text(dir.file("a.png"), "bytes");
  EXPECT_EQ(attach_image(dir.file("a.png")).digest, sha256_hex("bytes"));
  EXPECT_EQ(attach_image("missing.png").digest, sha256_hex("uri:missing.png"));
}

TEST(Client, RetriesOn429WithExponentialBackoff) {
  auto clock = std::make_shared<VirtualClock>();
  auto mock = MockProvider::ordered({ProviderReply::failure(429), ProviderReply::failure(503),
                                     ProviderReply::failure(0), ProviderReply::ok("done")});
  auto client = client_with(mock, clock);
  auto r = client->call(make_request("q"));
  EXPECT_EQ(r.text, "done");
  EXPECT_EQ(r.attempts, 4);
  EXPECT_EQ(clock->sleeps(), (std::vector<double>{1.0, 2.0, 4.0}));
  ASSERT_EQ(client->audit().size(), 1u);
  EXPECT_EQ(client->audit()[0].attempts, 4);
}

TEST(Client, ExhaustedRetriesIsProviderError) {
  auto clock = std::make_shared<VirtualClock>();
  auto mock = MockProvider::keyed({{make_request("q").key(), {ProviderReply::failure(500)}}});
  ClientOptions opts;
  opts.max_attempts = 3;
  auto client = client_with(mock, clock, opts);
  try {
    client->call(make_request("q"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kProvider);
    EXPECT_NE(std::string(e.what()).find("exhausted retries after 3"), std::string::npos);
  }
  EXPECT_EQ(mock->calls(), 3u);
  EXPECT_EQ(client->audit().back().outcome, "error: exhausted retries");
}

TEST(Client, AuthFailureIsNotRetried) {
  auto clock = std::make_shared<VirtualClock>();
  auto mock = MockProvider::ordered({ProviderReply::failure(401, "bad key")});
  auto client = client_with(mock, clock);
  EXPECT_THROW(client->call(make_request("q")), Error);
  EXPECT_EQ(mock->calls(), 1u);
  EXPECT_EQ(client->audit()[0].outcome, "error: authentication failure");
}

TEST(Client, MalformedReplyIsFatal) {
  auto clock = std::make_shared<VirtualClock>();
  auto client = client_with(MockProvider::ordered({ProviderReply::failure(400)}), clock);
  EXPECT_THROW(client->call(make_request("q")), Error);
}

TEST(Client, CacheHitSkipsUpstream) {
  auto clock = std::make_shared<VirtualClock>();
  auto mock = MockProvider::ordered({ProviderReply::ok("first")});
  auto client = client_with(mock, clock);
  auto a = client->call(make_request("q"));
  auto b = client->call(make_request("q"));
  EXPECT_EQ(b.text, "first");
  EXPECT_TRUE(b.cached);
  EXPECT_EQ(client->upstream_dispatches(), 1u);
  EXPECT_EQ(a.request_key, b.request_key);
}

TEST(Client, DiskCacheSurvivesClients) {
  TempDir dir;
  ClientOptions opts;
  opts.cache_dir = dir.file("cache");
  auto clock = std::make_shared<VirtualClock>();
  {
    auto client = client_with(MockProvider::ordered({ProviderReply::ok("stored")}), clock, opts);
    client->call(make_request("q"));
  }
  auto mock = MockProvider::ordered({});
  auto client = client_with(mock, clock, opts);
  EXPECT_EQ(client->call(make_request("q")).text, "stored");
  EXPECT_EQ(mock->calls(), 0u);

  auto rows = script_from_cache_dir(dir.file("cache"));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0]["key"], make_request("q").key());
  EXPECT_EQ(rows[0]["text"], "stored");
}

TEST(Client, ConstructionErrors) {
  EXPECT_THROW(Client(nullptr), Error);
  ClientOptions opts;
  opts.max_attempts = 0;
  EXPECT_THROW(Client(std::make_shared<EchoProvider>(), opts), Error);
  opts.max_attempts = 1;
  opts.requests_per_second = 0;
  EXPECT_THROW(Client(std::make_shared<EchoProvider>(), opts), Error);
}

TEST(RateLimiter, NoWindowExceedsLimit) {
  for (int per_second : {1, 3, 8}) {
    auto clock = std::make_shared<VirtualClock>();
    RateLimiter lim(per_second, clock);
    std::vector<double> slots;
    SeededRng rng(static_cast<std::uint64_t>(per_second));
    for (int i = 0; i < 200; ++i) {
      if (rng.below(4) == 0) clock->sleep_for(static_cast<double>(rng.below(1500)) / 1000.0);
      slots.push_back(lim.acquire());
    }
    ASSERT_TRUE(std::is_sorted(slots.begin(), slots.end()));
    for (std::size_t i = 0; i < slots.size(); ++i) {
      std::size_t in_window = 0;
      for (std::size_t j = i; j < slots.size() && slots[j] < slots[i] + 1.0; ++j) ++in_window;
      ASSERT_LE(in_window, static_cast<std::size_t>(per_second)) << per_second;
    }
  }
}

TEST(RateLimiter, ConcurrentAcquireHonoursLimit) {
  auto clock = std::make_shared<VirtualClock>();
  RateLimiter lim(5, clock);
  std::vector<double> slots(40);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 10; ++i) slots[t * 10 + i] = lim.acquire();
    });
  }
  for (auto& th : threads) th.join();
  std::sort(slots.begin(), slots.end());
  for (std::size_t i = 0; i + 5 < slots.size(); ++i) EXPECT_GE(slots[i + 5] - slots[i], 1.0);
}

TEST(MockProvider, KeyedRepeatsLastReply) {
  auto req = make_request("q");
  auto mock = MockProvider::keyed(
      {{req.key(), {ProviderReply::ok("one"), ProviderReply::ok("two")}}});
  EXPECT_EQ(mock->send(req).text, "one");
  EXPECT_EQ(mock->send(req).text, "two");
  EXPECT_EQ(mock->send(req).text, "two");
  EXPECT_THROW(mock->send(make_request("other")), Error);
  EXPECT_FALSE(mock->is_ordered());
}

TEST(MockProvider, OrderedExhausts) {
  auto mock = MockProvider::ordered({ProviderReply::ok("a")});
  EXPECT_EQ(mock->send(make_request("x")).text, "a");
  EXPECT_THROW(mock->send(make_request("y")), Error);
  EXPECT_EQ(mock->received().size(), 2u);
}

TEST(MockProvider, FromFile) {
  TempDir dir;
  write_text(dir.file("ordered.jsonl"), "{\"text\":\"a\"}\n{\"status\":429}\n");
  auto ordered = MockProvider::from_file(dir.file("ordered.jsonl"));
  EXPECT_TRUE(ordered->is_ordered());
  EXPECT_EQ(ordered->send(make_request("x")).text, "a");
  EXPECT_EQ(ordered->send(make_request("x")).status, 429);

  const auto key = make_request("x").key();
  write_text(dir.file("keyed.jsonl"), "{\"key\":\"" + key + "\",\"text\":\"k\"}\n");
  auto keyed = MockProvider::from_file(dir.file("keyed.jsonl"));
  EXPECT_EQ(keyed->send(make_request("x")).text, "k");

  write_text(dir.file("bad.jsonl"), "{\"key\":\"a\",\"text\":\"k\"}\n{\"text\":\"b\"}\n");
  EXPECT_THROW(MockProvider::from_file(dir.file("bad.jsonl")), Error);
}

TEST(EchoProvider, ReturnsLastUserMessage) {
  EchoProvider echo;
  auto r = make_request("first");
  r.messages.push_back({"assistant", "mid"});
  r.messages.push_back({"user", "last"});
  EXPECT_EQ(echo.send(r).text, "last");
}

TEST(StubProvider, DeterministicPerTask) {
  auto stub = make_stub_provider();
  EXPECT_EQ(stub->tag(), "stub");
  Request r;
  r.task = "translate";
  r.messages = {{"user", "hello"}};
  EXPECT_EQ(stub->send(r).text, stub->send(r).text);
  r.task = "score_key_points";
  auto s = std::stod(stub->send(r).text);
  EXPECT_GE(s, 0.0);
  EXPECT_LE(s, 5.0);
}

}  // namespace
}  // namespace medaug::llm
