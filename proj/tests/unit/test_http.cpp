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

// In-process HTTP servers standing in for the embedding service and a
// chat-completions endpoint.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "medaug/llm.hpp"
#include "medaug/retrieval.hpp"
#include "support/support.hpp"

namespace medaug {
namespace {

class LocalServer {
 public:
  LocalServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

/// Serves the embedding contract with the stub derivation.
void install_embed_routes(httplib::Server& s, std::size_t dim, std::atomic<int>* posts) {
  s.Get("/health", [dim](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"status", "ok"}, {"dim", dim}, {"model", "stub"}}.dump(),
                    "application/json");
  });
  s.Post("/embed", [dim, posts](const httplib::Request& req, httplib::Response& res) {
    ++*posts;
    const json body = json::parse(req.body);
    std::string payload;
    if (body.contains("text")) {
      payload = retrieval::stub_text_payload(body["text"].get<std::string>());
    } else {
      payload = "b64:" + body["image_b64"].get<std::string>();
    }
    auto v = retrieval::stub_embedding(payload, dim);
    res.set_content(json{{"vector", v}, {"dim", dim}, {"normalized", true}}.dump(),
                    "application/json");
  });
}

TEST(HttpEmbedder, HealthAndEmbedMatchStub) {
  LocalServer srv;
  std::atomic<int> posts{0};
  install_embed_routes(srv.server(), 64, &posts);
  retrieval::HttpEmbedder emb(srv.url());
  EXPECT_EQ(emb.dim(), 64u);
  EXPECT_EQ(emb.tag(), "http:stub");
  retrieval::StubEmbedder stub(64);
  auto a = emb.embed_text("pleural effusion");
  auto b = stub.embed_text("pleural effusion");
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
  EXPECT_EQ(emb.embed_text("pleural effusion"), a);
  EXPECT_EQ(posts.load(), 2);
}

TEST(HttpEmbedder, ErrorsAreProviderErrors) {
  LocalServer srv;
  srv.server().Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok","dim":8})", "application/json");
  });
  srv.server().Post("/embed", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"vector":[1,0],"dim":2})", "application/json");
  });
  retrieval::HttpEmbedder emb(srv.url());
  try {
    emb.embed_text("x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kProvider);
  }
}

TEST(HttpEmbedder, UnreachableOrNotReady) {
  EXPECT_THROW(retrieval::HttpEmbedder("http://127.0.0.1:1"), Error);
  LocalServer srv;
  srv.server().Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"loading","dim":8})", "application/json");
  });
  EXPECT_THROW(retrieval::HttpEmbedder{srv.url()}, Error);
}

TEST(HttpEmbedder, UnnormalizedRepliesAreNormalized) {
  LocalServer srv;
  srv.server().Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok","dim":2})", "application/json");
  });
  srv.server().Post("/embed", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"vector":[3,4],"dim":2,"normalized":false})", "application/json");
  });
  retrieval::HttpEmbedder emb(srv.url());
  auto v = emb.embed_text("x");
  EXPECT_NEAR(v[0], 0.6, 1e-12);
  EXPECT_NEAR(v[1], 0.8, 1e-12);
}

TEST(HttpProvider, ChatCompletionsRoundTrip) {
  LocalServer srv;
  std::string seen_auth;
  json seen_body;
  srv.server().Post("/v1/chat/completions",
                    [&](const httplib::Request& req, httplib::Response& res) {
                      seen_auth = req.get_header_value("Authorization");
                      seen_body = json::parse(req.body);
                      res.set_content(
                          R"({"choices":[{"message":{"content":"pong"}}],)"
                          R"("usage":{"prompt_tokens":7,"completion_tokens":1}})",
                          "application/json");
                    });
  llm::HttpProviderConfig cfg;
  cfg.base_url = srv.url();
  cfg.api_key = "secret";
  auto client = testing::fast_client(llm::make_http_provider(cfg));
  llm::Request r;
  r.task = "qa";
  r.messages = {{"system", "s"}, {"user", "ping"}};
  auto resp = client->call(r);
  EXPECT_EQ(resp.text, "pong");
  EXPECT_EQ(resp.prompt_tokens.value(), 7);
  EXPECT_EQ(resp.provider, "http");
  EXPECT_EQ(seen_auth, "Bearer secret");
  EXPECT_EQ(seen_body["model"], "gpt-4o");
  EXPECT_EQ(seen_body["messages"][1]["content"], "ping");
}

TEST(HttpProvider, ImagesTravelAsDataUrls) {
  testing::TempDir dir;
  write_text(dir.file("a.png"), "PNGBYTES");
  LocalServer srv;
  json seen;
  srv.server().Post("/v1/chat/completions",
                    [&](const httplib::Request& req, httplib::Response& res) {
                      seen = json::parse(req.body);
                      res.set_content(R"({"choices":[{"message":{"content":"ok"}}]})",
                                      "application/json");
                    });
  llm::HttpProviderConfig cfg;
  cfg.base_url = srv.url();
  auto provider = llm::make_http_provider(cfg);
  llm::Request r;
  r.messages = {{"user", "describe"}};
  r.attachments.push_back(llm::attach_image(dir.file("a.png")));
  EXPECT_EQ(provider->send(r).text, "ok");
  const auto& content = seen["messages"][0]["content"];
  ASSERT_EQ(content.size(), 2u);
  EXPECT_EQ(content[1]["image_url"]["url"],
            "data:image/png;base64," + retrieval::base64_encode("PNGBYTES"));
}

TEST(HttpProvider, StatusCodesDriveRetryPolicy) {
  LocalServer srv;
  std::atomic<int> hits{0};
  std::atomic<bool> forbidden{false};
  srv.server().Post("/v1/chat/completions",
                    [&](const httplib::Request&, httplib::Response& res) {
                      if (forbidden) {
                        res.status = 403;
                        return;
                      }
                      if (++hits < 3) {
                        res.status = 429;
                        return;
                      }
                      res.set_content(R"({"choices":[{"message":{"content":"late"}}]})",
                                      "application/json");
                    });
  llm::HttpProviderConfig cfg;
  cfg.base_url = srv.url();
  llm::ClientOptions opts;
  opts.requests_per_second = 1000;
  auto clock = std::make_shared<llm::VirtualClock>();
  llm::Client client(llm::make_http_provider(cfg), opts, clock);
  llm::Request r;
  r.messages = {{"user", "x"}};
  EXPECT_EQ(client.call(r).text, "late");
  EXPECT_EQ(hits.load(), 3);
  EXPECT_EQ(clock->sleeps(), (std::vector<double>{1.0, 2.0}));

  forbidden = true;
  r.messages = {{"user", "y"}};
  EXPECT_THROW(client.call(r), Error);
}

TEST(HttpProvider, RequiresEndpoint) {
  EXPECT_THROW(llm::make_http_provider({}), Error);
}

TEST(Base64, KnownVectors) {
  EXPECT_EQ(retrieval::base64_encode(""), "");
  EXPECT_EQ(retrieval::base64_encode("f"), "Zg==");
  EXPECT_EQ(retrieval::base64_encode("foobar"), "Zm9vYmFy");
}

}  // namespace
}  // namespace medaug
