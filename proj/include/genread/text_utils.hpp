#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace genread {

// 64-bit FNV-1a. Stable across platforms, used for content-addressed ids and
// for keying the mock providers.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

// Number of whitespace-separated tokens.
std::size_t word_count(std::string_view text);

std::vector<std::string> split_words(std::string_view text);

// Encoder-side token estimate: every run of alphanumerics (plus apostrophes)
// is one token and every other non-space character is one token.
std::size_t count_tokens(std::string_view text);

// Longest prefix of `text` holding at most `budget` tokens, with trailing
// whitespace removed.
std::string truncate_to_tokens(std::string_view text, std::size_t budget);

std::string trim(std::string_view text);

// Thin deterministic RNG. The engine output sequence is fixed by the
// standard; reductions are done here because std distributions are not
// portable between library implementations.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi);
  double normal();

  template <typename T>
  const T& pick(const std::vector<T>& items) {
    return items[static_cast<std::size_t>(between(0, static_cast<std::int64_t>(items.size()) - 1))];
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace genread
