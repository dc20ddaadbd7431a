#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace percept {

/// Seeded generator with self-contained integer/real draws. The draw
/// functions avoid std distributions so that a pinned seed produces the same
/// stream on every standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Multiply-shift mapping of the full 64-bit draw onto [0, n).
    return static_cast<std::uint64_t>(
        ((unsigned __int128)next() * n) >> 64);
  }

  /// Uniform real in [0, 1) with 53 random bits.
  double uniform01() { return (next() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return uniform01() < p; }

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

/// splitmix64 finalizer; used to fold strings and counters into seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t seed, std::string_view text) {
  std::uint64_t h = seed;
  for (unsigned char c : text) h = mix64(h ^ c);
  return h;
}

}  // namespace percept
