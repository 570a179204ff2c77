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

// Test-only helpers: fixture paths, scratch directories, scripted providers.

#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "medaug/common.hpp"
#include "medaug/io.hpp"
#include "medaug/llm.hpp"

namespace medaug::testing {

namespace fs = std::filesystem;

inline fs::path fixture_dir() { return fs::path(MEDAUG_FIXTURE_DIR); }
inline fs::path fixture(const std::string& rel) { return fixture_dir() / rel; }

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("medaug-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

class ScopedCwd {
 public:
  explicit ScopedCwd(const fs::path& dir) : previous_(fs::current_path()) {
    fs::current_path(dir);
  }
  ~ScopedCwd() { fs::current_path(previous_); }

 private:
  fs::path previous_;
};

/// Client over a provider with no pacing, so tests never sleep on wall time.
inline std::unique_ptr<llm::Client> fast_client(std::shared_ptr<llm::Provider> provider,
                                                llm::ClientOptions options = {}) {
  options.requests_per_second = 1000000;
  auto clock = std::make_shared<llm::VirtualClock>();
  return std::make_unique<llm::Client>(std::move(provider), options, clock);
}

inline std::shared_ptr<llm::MockProvider> ordered_texts(const std::vector<std::string>& texts) {
  std::vector<llm::ProviderReply> script;
  for (const auto& t : texts) script.push_back(llm::ProviderReply::ok(t));
  return llm::MockProvider::ordered(std::move(script));
}

}  // namespace medaug::testing
