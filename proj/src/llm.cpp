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

#include "medaug/llm.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "medaug/common.hpp"

namespace medaug::llm {

namespace fs = std::filesystem;

Attachment attach_image(const std::string& uri) {
  std::ifstream in(uri, std::ios::binary);
  if (in) {
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    return {uri, sha256_hex(bytes)};
  }
  return {uri, sha256_hex("uri:" + uri)};
}

json Request::canonical() const {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"text", m.text}});
  json atts = json::array();
  for (const auto& a : attachments) atts.push_back(a.digest);
  // Temperature is formatted rather than stored as a double so the key does
  // not depend on float printing.
  return {{"model", model},
          {"task", task},
          {"messages", msgs},
          {"attachments", atts},
          {"temperature", fmt::format("{:.4f}", temperature)},
          {"max_output", max_output}};
}

std::string Request::key() const { return sha256_hex(canonical().dump()); }

std::string Request::joined_text() const {
  std::string out;
  for (const auto& m : messages) {
    out += m.text;
    out.push_back('\n');
  }
  return out;
}

// ---------------------------------------------------------------------------
// Clocks and limiter
// ---------------------------------------------------------------------------

double SystemClock::now() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

void SystemClock::sleep_until(double t) {
  const double d = t - now();
  if (d > 0) std::this_thread::sleep_for(std::chrono::duration<double>(d));
}

double VirtualClock::now() {
  std::lock_guard lock(mu_);
  return now_;
}

void VirtualClock::sleep_until(double t) {
  std::lock_guard lock(mu_);
  if (t > now_) {
    sleeps_.push_back(t - now_);
    now_ = t;
  }
}

std::vector<double> VirtualClock::sleeps() const {
  std::lock_guard lock(mu_);
  return sleeps_;
}

RateLimiter::RateLimiter(int per_second, std::shared_ptr<Clock> clock)
    : per_second_(per_second), clock_(std::move(clock)) {
  if (per_second_ < 1) throw_usage("rate limit must be >= 1 request/s");
}

double RateLimiter::acquire() {
  double slot;
  {
    std::lock_guard lock(mu_);
    slot = clock_->now();
    if (!recent_.empty()) slot = std::max(slot, recent_.back());
    if (static_cast<int>(recent_.size()) == per_second_) {
      slot = std::max(slot, recent_.front() + 1.0);
      recent_.pop_front();
    }
    recent_.push_back(slot);
  }
  clock_->sleep_until(slot);
  return slot;
}

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

json to_json(const AuditEntry& e) {
  return {{"request_key", e.request_key}, {"task", e.task},
          {"attempts", e.attempts},       {"cached", e.cached},
          {"outcome", e.outcome},         {"response_sha256", e.response_sha256}};
}

Client::Client(std::shared_ptr<Provider> provider, ClientOptions options,
               std::shared_ptr<Clock> clock)
    : provider_(std::move(provider)),
      options_(std::move(options)),
      clock_(clock ? std::move(clock) : std::make_shared<SystemClock>()),
      limiter_(options_.requests_per_second, clock_) {
  if (!provider_) throw_usage("no LLM provider configured");
  if (options_.max_attempts < 1) throw_usage("max_attempts must be >= 1");
  if (options_.cache_dir) fs::create_directories(*options_.cache_dir);
}

std::optional<Response> Client::cache_lookup(const std::string& key) {
  {
    std::lock_guard lock(mu_);
    auto it = memory_cache_.find(key);
    if (it != memory_cache_.end()) return it->second;
  }
  if (!options_.cache_dir) return std::nullopt;
  const fs::path file = fs::path(*options_.cache_dir) / (key + ".json");
  if (!fs::exists(file)) return std::nullopt;
  const json j = json::parse(read_file_bytes(file.string()));
  Response r;
  r.text = j.at("text").get<std::string>();
  r.provider = j.value("provider", "");
  if (j.contains("prompt_tokens") && !j["prompt_tokens"].is_null())
    r.prompt_tokens = j["prompt_tokens"].get<int>();
  if (j.contains("completion_tokens") && !j["completion_tokens"].is_null())
    r.completion_tokens = j["completion_tokens"].get<int>();
  r.request_key = key;
  std::lock_guard lock(mu_);
  memory_cache_.emplace(key, r);
  return r;
}

void Client::cache_store(const std::string& key, const Response& response) {
  {
    std::lock_guard lock(mu_);
    memory_cache_[key] = response;
  }
  if (!options_.cache_dir) return;
  json j = {{"request_key", key},
            {"text", response.text},
            {"provider", response.provider},
            {"prompt_tokens", nullptr},
            {"completion_tokens", nullptr}};
  if (response.prompt_tokens) j["prompt_tokens"] = *response.prompt_tokens;
  if (response.completion_tokens)
    j["completion_tokens"] = *response.completion_tokens;
  const fs::path file = fs::path(*options_.cache_dir) / (key + ".json");
  const fs::path tmp = file.string() + ".tmp";
  write_text(tmp.string(), j.dump(2) + "\n");
  fs::rename(tmp, file);
}

void Client::record(AuditEntry entry) {
  std::lock_guard lock(mu_);
  audit_.push_back(std::move(entry));
}

Response Client::call(const Request& request) {
  const std::string key = request.key();
  if (auto hit = cache_lookup(key)) {
    hit->cached = true;
    hit->attempts = 0;
    hit->latency_s = 0.0;
    record({key, request.task, 0, true, "ok", sha256_hex(hit->text)});
    return *hit;
  }

  std::string last_error;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    limiter_.acquire();
    const double start = clock_->now();
    ProviderReply reply;
    {
      std::lock_guard lock(mu_);
      ++dispatches_;
    }
    try {
      reply = provider_->send(request);
    } catch (const Error& e) {
      record({key, request.task, attempt, false,
              std::string("error: ") + e.what(), ""});
      throw;
    }

    if (reply.status == 200) {
      Response r;
      r.text = std::move(reply.text);
      r.provider = provider_->tag();
      r.latency_s = clock_->now() - start;
      r.prompt_tokens = reply.prompt_tokens;
      r.completion_tokens = reply.completion_tokens;
      r.attempts = attempt;
      r.request_key = key;
      cache_store(key, r);
      record({key, request.task, attempt, false, "ok", sha256_hex(r.text)});
      return r;
    }

    last_error = fmt::format("status {}{}{}", reply.status,
                             reply.error.empty() ? "" : ": ", reply.error);
    const bool retryable = reply.status == 429 || reply.status == 0 ||
                           (reply.status >= 500 && reply.status < 600);
    if (reply.status == 401 || reply.status == 403) {
      record({key, request.task, attempt, false, "error: authentication failure", ""});
      throw_provider("authentication failure (" + last_error + ")");
    }
    if (!retryable) {
      record({key, request.task, attempt, false, "error: " + last_error, ""});
      throw_provider("malformed provider reply (" + last_error + ")");
    }
    if (attempt < options_.max_attempts) {
      clock_->sleep_for(options_.backoff_base_s *
                        std::pow(options_.backoff_factor, attempt - 1));
    }
  }
  record({key, request.task, options_.max_attempts, false,
          "error: exhausted retries", ""});
  throw_provider(fmt::format("exhausted retries after {} attempts ({})",
                             options_.max_attempts, last_error));
}

std::vector<AuditEntry> Client::audit() const {
  std::lock_guard lock(mu_);
  return audit_;
}

std::size_t Client::upstream_dispatches() const {
  std::lock_guard lock(mu_);
  return dispatches_;
}

// ---------------------------------------------------------------------------
// Mock / echo providers
// ---------------------------------------------------------------------------

std::shared_ptr<MockProvider> MockProvider::keyed(
    std::map<std::string, std::vector<ProviderReply>> script) {
  if (script.empty()) throw_usage("keyed mock script is empty");
  std::shared_ptr<MockProvider> p(new MockProvider());
  for (auto& [key, replies] : script) {
    if (replies.empty()) throw_usage("keyed mock entry without replies: " + key);
    p->keyed_[key] = std::deque<ProviderReply>(replies.begin(), replies.end());
  }
  return p;
}

std::shared_ptr<MockProvider> MockProvider::ordered(
    std::vector<ProviderReply> script) {
  std::shared_ptr<MockProvider> p(new MockProvider());
  p->ordered_ = true;
  p->queue_ = std::deque<ProviderReply>(script.begin(), script.end());
  return p;
}

namespace {

ProviderReply reply_from_json(const json& j) {
  if (j.contains("status") && j["status"].get<int>() != 200) {
    return ProviderReply::failure(j["status"].get<int>(), j.value("error", ""));
  }
  if (!j.contains("text")) throw_usage("mock script line without text or status");
  return ProviderReply::ok(j["text"].get<std::string>());
}

}  // namespace

std::shared_ptr<MockProvider> MockProvider::from_file(const std::string& path) {
  const auto rows = read_jsonl(path);
  bool any_key = false;
  for (const auto& r : rows) any_key = any_key || r.contains("key");
  if (any_key) {
    std::map<std::string, std::vector<ProviderReply>> script;
    for (const auto& r : rows) {
      if (!r.contains("key")) throw_usage(path + ": keyed script line without key");
      script[r["key"].get<std::string>()].push_back(reply_from_json(r));
    }
    return keyed(std::move(script));
  }
  std::vector<ProviderReply> replies;
  for (const auto& r : rows) replies.push_back(reply_from_json(r));
  return ordered(std::move(replies));
}

ProviderReply MockProvider::send(const Request& request) {
  std::lock_guard lock(mu_);
  received_.push_back(request);
  if (ordered_) {
    if (queue_.empty()) throw_provider("script exhausted");
    ProviderReply r = queue_.front();
    queue_.pop_front();
    return r;
  }
  const std::string key = request.key();
  auto it = keyed_.find(key);
  if (it == keyed_.end()) {
    throw_provider("unscripted request " + key + " (task " + request.task + ")");
  }
  ProviderReply r = it->second.front();
  if (it->second.size() > 1) it->second.pop_front();
  return r;
}

std::size_t MockProvider::calls() const {
  std::lock_guard lock(mu_);
  return received_.size();
}

std::vector<Request> MockProvider::received() const {
  std::lock_guard lock(mu_);
  return received_;
}

ProviderReply EchoProvider::send(const Request& request) {
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == "user") return ProviderReply::ok(it->text);
  }
  return ProviderReply::failure(400, "no user message");
}

std::vector<json> script_from_cache_dir(const std::string& cache_dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(cache_dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<json> rows;
  for (const auto& f : files) {
    const json j = json::parse(read_file_bytes(f.string()));
    rows.push_back({{"key", j.at("request_key")}, {"text", j.at("text")}});
  }
  return rows;
}

}  // namespace medaug::llm
