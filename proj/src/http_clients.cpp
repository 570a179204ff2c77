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

// HTTP transports: the embedding-service client and the chat-completions
// provider. Both live here so only one translation unit pulls in httplib.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <openssl/evp.h>

#include <cstdlib>

#include "medaug/common.hpp"
#include "medaug/llm.hpp"
#include "medaug/retrieval.hpp"

namespace medaug {

namespace retrieval {

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

HttpEmbedder::HttpEmbedder(std::string base_url, std::string model)
    : base_url_(std::move(base_url)), model_(std::move(model)) {
  httplib::Client cli(base_url_);
  cli.set_connection_timeout(10);
  auto res = cli.Get("/health");
  if (!res) throw_provider("embedding service unreachable at " + base_url_);
  if (res->status != 200) {
    throw_provider("embedding service /health returned " + std::to_string(res->status));
  }
  try {
    const json j = json::parse(res->body);
    if (j.value("status", "") != "ok") {
      throw_provider("embedding service not ready: " + j.value("status", "?"));
    }
    dim_ = j.at("dim").get<std::size_t>();
    if (j.contains("model")) model_ = j["model"].get<std::string>();
  } catch (const json::exception& e) {
    throw_provider(std::string("malformed /health reply: ") + e.what());
  }
}

Vector HttpEmbedder::post(const json& body) {
  httplib::Client cli(base_url_);
  cli.set_read_timeout(60);
  auto res = cli.Post("/embed", body.dump(), "application/json");
  if (!res) throw_provider("embedding service unreachable at " + base_url_);
  if (res->status != 200) {
    throw_provider("embedding service returned " + std::to_string(res->status) + ": " +
                   res->body);
  }
  try {
    const json j = json::parse(res->body);
    Vector v = j.at("vector").get<Vector>();
    if (v.size() != j.at("dim").get<std::size_t>() || v.size() != dim_) {
      throw_provider("embedding service returned inconsistent dimension");
    }
    if (!j.value("normalized", false)) normalize(v);
    return v;
  } catch (const json::exception& e) {
    throw_provider(std::string("malformed /embed reply: ") + e.what());
  }
}

Vector HttpEmbedder::embed_text(std::string_view text) {
  return post({{"text", std::string(text)}, {"model", model_}});
}

Vector HttpEmbedder::embed_image_bytes(std::string_view bytes) {
  return post({{"image_b64", base64_encode(bytes)}, {"model", model_}});
}

}  // namespace retrieval

namespace llm {

HttpProviderConfig http_config_from_env() {
  HttpProviderConfig c;
  if (const char* e = std::getenv("MEDAUG_LLM_ENDPOINT")) c.base_url = e;
  if (const char* p = std::getenv("MEDAUG_LLM_PATH")) c.path = p;
  if (const char* k = std::getenv("MEDAUG_LLM_API_KEY")) c.api_key = k;
  return c;
}

namespace {

class HttpProvider final : public Provider {
 public:
  explicit HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw_usage("MEDAUG_LLM_ENDPOINT is not set");
  }

  ProviderReply send(const Request& request) override {
    httplib::Client cli(config_.base_url);
    const auto secs = static_cast<time_t>(config_.timeout_s);
    cli.set_read_timeout(secs);
    cli.set_write_timeout(secs);
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + config_.api_key);
    }
    auto res = cli.Post(config_.path, headers, body(request).dump(), "application/json");
    if (!res) return ProviderReply::failure(0, httplib::to_string(res.error()));
    if (res->status != 200) return ProviderReply::failure(res->status, res->body);
    try {
      const json j = json::parse(res->body);
      ProviderReply r = ProviderReply::ok(
          j.at("choices").at(0).at("message").at("content").get<std::string>());
      if (j.contains("usage")) {
        const auto& u = j["usage"];
        if (u.contains("prompt_tokens")) r.prompt_tokens = u["prompt_tokens"].get<int>();
        if (u.contains("completion_tokens"))
          r.completion_tokens = u["completion_tokens"].get<int>();
      }
      return r;
    } catch (const json::exception& e) {
      return ProviderReply::failure(-1, std::string("unexpected body: ") + e.what());
    }
  }

  std::string tag() const override { return "http"; }

 private:
  static json body(const Request& request) {
    json messages = json::array();
    for (std::size_t i = 0; i < request.messages.size(); ++i) {
      const auto& m = request.messages[i];
      const bool last_user =
          m.role == "user" && i + 1 == request.messages.size() && !request.attachments.empty();
      if (!last_user) {
        messages.push_back({{"role", m.role}, {"content", m.text}});
        continue;
      }
      json content = json::array({{{"type", "text"}, {"text", m.text}}});
      for (const auto& a : request.attachments) {
        std::string bytes;
        try {
          bytes = read_file_bytes(a.uri);
        } catch (const Error&) {
          continue;
        }
        content.push_back(
            {{"type", "image_url"},
             {"image_url",
              {{"url", "data:image/png;base64," + retrieval::base64_encode(bytes)}}}});
      }
      messages.push_back({{"role", m.role}, {"content", content}});
    }
    return {{"model", request.model},
            {"messages", messages},
            {"temperature", request.temperature},
            {"max_tokens", request.max_output}};
  }

  HttpProviderConfig config_;
};

}  // namespace

std::shared_ptr<Provider> make_http_provider(HttpProviderConfig config) {
  return std::make_shared<HttpProvider>(std::move(config));
}

}  // namespace llm

}  // namespace medaug
