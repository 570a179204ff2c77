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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace medaug {

inline constexpr std::string_view kVersion = "0.1.0";

/// Error categories. The numeric values double as process exit codes.
enum class ErrorKind : int {
  kUsage = 1,
  kData = 2,
  kProvider = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) {
  throw Error(ErrorKind::kUsage, msg);
}
[[noreturn]] inline void throw_data(const std::string& msg) {
  throw Error(ErrorKind::kData, msg);
}
[[noreturn]] inline void throw_provider(const std::string& msg) {
  throw Error(ErrorKind::kProvider, msg);
}

// ---------------------------------------------------------------------------
// Text helpers
// ---------------------------------------------------------------------------

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
std::string to_upper_ascii(std::string_view s);
/// Collapses every run of whitespace to one space and trims the ends.
std::string collapse_whitespace(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::size_t word_count(std::string_view s);
bool contains_ci(std::string_view haystack, std::string_view needle);

/// Rounds half away from zero at `digits` decimals. A 1e-9 guard absorbs
/// binary representation error of decimal inputs such as 1.005.
double round_half_up(double value, int digits);

// ---------------------------------------------------------------------------
// Hashing (SHA-256)
// ---------------------------------------------------------------------------

std::vector<std::uint8_t> sha256(std::string_view bytes);
std::string sha256_hex(std::string_view bytes);
std::string to_hex(const std::vector<std::uint8_t>& bytes);

std::string read_file_bytes(const std::string& path);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Every index runs
/// even if some fail; the lowest-index exception is rethrown afterwards.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Seeded randomness
// ---------------------------------------------------------------------------

/// Platform-stable RNG. std::mt19937_64 output is fully specified by the
/// standard; the distributions here are hand-rolled because the standard
/// library ones are implementation-defined.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// k distinct indices from [0, n), in selection order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace medaug
