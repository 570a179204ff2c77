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

// Provider abstraction for every chat/vision model call: content-hash
// cache, retry with exponential backoff, a sliding-window rate limiter and
// scriptable mock providers for deterministic runs.

#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "medaug/io.hpp"

namespace medaug::llm {

struct Message {
  std::string role;  // "system" | "user" | "assistant"
  std::string text;
};

/// Image handle attached to a request. `digest` is the SHA-256 of the image
/// bytes, which is what enters the request key (never the path).
struct Attachment {
  std::string uri;
  std::string digest;
};

/// Reads the file behind `uri` and hashes its bytes. If the file cannot be
/// read the digest falls back to a hash of "uri:" + uri.
Attachment attach_image(const std::string& uri);

struct Request {
  std::string model = "gpt-4o";
  /// Prompt family, e.g. "report" or "score_key_points". Part of the key.
  std::string task;
  std::vector<Message> messages;
  std::vector<Attachment> attachments;
  double temperature = 0.0;
  int max_output = 1024;

  /// Canonical JSON of everything that determines the reply.
  json canonical() const;
  /// SHA-256 hex of canonical().dump().
  std::string key() const;
  /// Concatenated text of all messages; handy for content assertions.
  std::string joined_text() const;
};

struct Response {
  std::string text;
  std::string provider;
  bool cached = false;
  double latency_s = 0.0;
  std::optional<int> prompt_tokens;
  std::optional<int> completion_tokens;
  int attempts = 0;
  std::string request_key;
};

/// Raw outcome of one upstream dispatch. status follows HTTP conventions:
/// 200 ok, 429/5xx/0 retryable, 401/403 authentication, anything else fatal.
struct ProviderReply {
  int status = 200;
  std::string text;
  std::optional<int> prompt_tokens;
  std::optional<int> completion_tokens;
  std::string error;

  static ProviderReply ok(std::string text) {
    ProviderReply r;
    r.text = std::move(text);
    return r;
  }
  static ProviderReply failure(int status, std::string error = {}) {
    ProviderReply r;
    r.status = status;
    r.error = std::move(error);
    return r;
  }
};

class Provider {
 public:
  virtual ~Provider() = default;
  virtual ProviderReply send(const Request& request) = 0;
  virtual std::string tag() const = 0;
};

// ---------------------------------------------------------------------------
// Clocks
// ---------------------------------------------------------------------------

/// Seconds since an arbitrary epoch.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() = 0;
  virtual void sleep_until(double t) = 0;
  void sleep_for(double seconds) { sleep_until(now() + seconds); }
};

class SystemClock final : public Clock {
 public:
  double now() override;
  void sleep_until(double t) override;
};

/// Test clock: sleeping advances time instantly.
class VirtualClock final : public Clock {
 public:
  double now() override;
  void sleep_until(double t) override;
  std::vector<double> sleeps() const;

 private:
  mutable std::mutex mu_;
  double now_ = 0.0;
  std::vector<double> sleeps_;
};

/// At most `per_second` acquisitions inside any half-open one-second window.
class RateLimiter {
 public:
  RateLimiter(int per_second, std::shared_ptr<Clock> clock);

  /// Reserves the next slot and blocks until it is due. Returns slot time.
  double acquire();

 private:
  int per_second_;
  std::shared_ptr<Clock> clock_;
  std::mutex mu_;
  std::deque<double> recent_;
};

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

struct AuditEntry {
  std::string request_key;
  std::string task;
  int attempts = 0;
  bool cached = false;
  std::string outcome;  // "ok" | "error: ..."
  std::string response_sha256;
};

json to_json(const AuditEntry& entry);

struct ClientOptions {
  int max_attempts = 5;
  double backoff_base_s = 1.0;
  double backoff_factor = 2.0;
  int requests_per_second = 8;
  /// Content-addressed response store; in-memory only when unset.
  std::optional<std::string> cache_dir;
};

/// Thread-safe. The limiter and the cache are the only shared state.
class Client {
 public:
  explicit Client(std::shared_ptr<Provider> provider, ClientOptions options = {},
                  std::shared_ptr<Clock> clock = nullptr);

  Response call(const Request& request);

  std::vector<AuditEntry> audit() const;
  std::size_t upstream_dispatches() const;
  const ClientOptions& options() const { return options_; }

 private:
  std::optional<Response> cache_lookup(const std::string& key);
  void cache_store(const std::string& key, const Response& response);
  void record(AuditEntry entry);

  std::shared_ptr<Provider> provider_;
  ClientOptions options_;
  std::shared_ptr<Clock> clock_;
  RateLimiter limiter_;

  mutable std::mutex mu_;
  std::unordered_map<std::string, Response> memory_cache_;
  std::vector<AuditEntry> audit_;
  std::size_t dispatches_ = 0;
};

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

/// Scripted provider. Keyed mode answers by request key; each key holds a
/// queue of replies and its last reply repeats once the rest are consumed.
/// Ordered mode answers FIFO. Unscripted requests are errors.
class MockProvider final : public Provider {
 public:
  static std::shared_ptr<MockProvider> keyed(
      std::map<std::string, std::vector<ProviderReply>> script);
  static std::shared_ptr<MockProvider> ordered(std::vector<ProviderReply> script);

  /// Line-delimited script. Lines carrying "key" make a keyed script;
  /// otherwise lines are served in order. Each line holds "text" or
  /// "status" (plus optional "error").
  static std::shared_ptr<MockProvider> from_file(const std::string& path);

  ProviderReply send(const Request& request) override;
  std::string tag() const override { return "mock"; }

  bool is_ordered() const { return ordered_; }
  std::size_t calls() const;
  std::vector<Request> received() const;

 private:
  MockProvider() = default;

  bool ordered_ = false;
  mutable std::mutex mu_;
  std::map<std::string, std::deque<ProviderReply>> keyed_;
  std::deque<ProviderReply> queue_;
  std::vector<Request> received_;
};

/// Replies with the text of the last user message.
class EchoProvider final : public Provider {
 public:
  ProviderReply send(const Request& request) override;
  std::string tag() const override { return "echo"; }
};

class FunctionProvider final : public Provider {
 public:
  using Fn = std::function<ProviderReply(const Request&)>;
  explicit FunctionProvider(Fn fn, std::string tag = "function")
      : fn_(std::move(fn)), tag_(std::move(tag)) {}
  ProviderReply send(const Request& request) override { return fn_(request); }
  std::string tag() const override { return tag_; }

 private:
  Fn fn_;
  std::string tag_;
};

/// Deterministic offline responder that understands every prompt family
/// this toolkit emits. Used for desk runs and to record keyed mock scripts.
std::shared_ptr<Provider> make_stub_provider();

/// OpenAI-compatible chat-completions endpoint.
struct HttpProviderConfig {
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string api_key;
  double timeout_s = 120.0;
};

/// Reads MEDAUG_LLM_ENDPOINT, MEDAUG_LLM_PATH and MEDAUG_LLM_API_KEY.
HttpProviderConfig http_config_from_env();

std::shared_ptr<Provider> make_http_provider(HttpProviderConfig config);

/// Keyed mock script rows ({"key", "text"}) from every response cached in
/// `cache_dir`, sorted by key.
std::vector<json> script_from_cache_dir(const std::string& cache_dir);

}  // namespace medaug::llm
