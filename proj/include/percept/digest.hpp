#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace percept {

/// 64-bit FNV-1a. Used for cache keys and log digests; not cryptographic.
class Fnv64 {
 public:
  Fnv64& feed(std::string_view text) {
    for (unsigned char c : text) step(c);
    step(0xff);  // field separator so concatenations cannot collide
    return *this;
  }

  Fnv64& feed(long long value) { return feed(std::to_string(value)); }
  Fnv64& feed(double value);

  std::uint64_t value() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
  void step(unsigned char c) {
    state_ ^= c;
    state_ *= 0x00000100000001b3ULL;
  }
};

inline Fnv64& Fnv64::feed(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return feed(std::string_view(buf));
}

inline std::string Fnv64::hex() const {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  std::uint64_t v = state_;
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace percept
