#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

namespace percept {

/// Exact rational arithmetic for perception-score bookkeeping. Score sums
/// stay exact and the division by appearance counts happens symbolically, so
/// metric values can be compared bitwise against independent recomputations.
class Rational {
 public:
  enum class Round { HalfEven, HalfAwayFromZero };

  constexpr Rational() = default;
  constexpr Rational(long long value) : num_(value), den_(1) {}
  Rational(long long num, long long den) : num_(num), den_(den) {
    if (den_ == 0) throw std::domain_error("Rational: zero denominator");
    normalize();
  }

  /// Parses "2", "-0.11", ".5" or "3/20" without going through floating point.
  static Rational parse(std::string_view text);

  long long num() const { return num_; }
  long long den() const { return den_; }
  bool is_zero() const { return num_ == 0; }
  bool is_negative() const { return num_ < 0; }

  Rational abs() const {
    Rational r = *this;
    if (r.num_ < 0) r.num_ = -r.num_;
    return r;
  }

  double to_double() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  std::string to_fraction_string() const;

  /// Renders with a fixed number of decimal places using exact integer
  /// rounding. Ties resolve per `mode`; negative zero renders unsigned.
  std::string to_decimal(int places, Round mode = Round::HalfEven) const;

  Rational operator-() const {
    Rational r = *this;
    r.num_ = -r.num_;
    return r;
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    __int128 num = (__int128)a.num_ * b.den_ + (__int128)b.num_ * a.den_;
    __int128 den = (__int128)a.den_ * b.den_;
    return make(num, den);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return a + (-b);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return make((__int128)a.num_ * b.num_, (__int128)a.den_ * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("Rational: division by zero");
    return make((__int128)a.num_ * b.den_, (__int128)a.den_ * b.num_);
  }

  Rational& operator+=(const Rational& b) { return *this = *this + b; }
  Rational& operator-=(const Rational& b) { return *this = *this - b; }
  Rational& operator*=(const Rational& b) { return *this = *this * b; }
  Rational& operator/=(const Rational& b) { return *this = *this / b; }

  friend bool operator==(const Rational&, const Rational&) = default;
  friend std::strong_ordering operator<=>(const Rational& a,
                                          const Rational& b) {
    __int128 lhs = (__int128)a.num_ * b.den_;
    __int128 rhs = (__int128)b.num_ * a.den_;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

 private:
  long long num_ = 0;
  long long den_ = 1;

  static long long narrow(__int128 v) {
    if (v > INT64_MAX || v < INT64_MIN)
      throw std::overflow_error("Rational: 64-bit overflow");
    return static_cast<long long>(v);
  }

  static Rational make(__int128 num, __int128 den) {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    __int128 a = num < 0 ? -num : num;
    __int128 g = gcd128(a, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
    Rational r;
    r.num_ = narrow(num);
    r.den_ = narrow(den);
    return r;
  }

  static __int128 gcd128(__int128 a, __int128 b) {
    while (b != 0) {
      __int128 t = a % b;
      a = b;
      b = t;
    }
    return a == 0 ? 1 : a;
  }

  void normalize() {
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    long long g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }
};

inline std::string Rational::to_fraction_string() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

inline std::string Rational::to_decimal(int places, Round mode) const {
  if (places < 0 || places > 15)
    throw std::invalid_argument("Rational: unsupported decimal places");
  __int128 scale = 1;
  for (int i = 0; i < places; ++i) scale *= 10;
  __int128 a = (__int128)(num_ < 0 ? -num_ : num_) * scale;
  __int128 q = a / den_;
  __int128 r = a % den_;
  __int128 twice = r * 2;
  if (twice > den_) {
    ++q;
  } else if (twice == den_) {
    if (mode == Round::HalfAwayFromZero)
      ++q;
    else if (q % 2 != 0)
      ++q;
  }
  std::string digits;
  if (q == 0) digits = "0";
  while (q > 0) {
    digits.insert(digits.begin(), static_cast<char>('0' + (int)(q % 10)));
    q /= 10;
  }
  while ((int)digits.size() < places + 1) digits.insert(digits.begin(), '0');
  std::string out;
  if (num_ < 0 && digits.find_first_not_of('0') != std::string::npos)
    out = "-";
  if (places == 0) return out + digits;
  out += digits.substr(0, digits.size() - places);
  out += '.';
  out += digits.substr(digits.size() - places);
  return out;
}

inline Rational Rational::parse(std::string_view text) {
  auto fail = [&] {
    throw std::invalid_argument("Rational: cannot parse '" +
                                std::string(text) + "'");
  };
  if (text.empty()) fail();
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto num_part = text.substr(0, slash);
    auto den_part = text.substr(slash + 1);
    if (num_part.empty() || den_part.empty()) fail();
    return Rational(std::stoll(std::string(num_part)),
                    std::stoll(std::string(den_part)));
  }
  bool negative = false;
  size_t i = 0;
  if (text[i] == '+' || text[i] == '-') {
    negative = text[i] == '-';
    ++i;
  }
  long long num = 0;
  long long den = 1;
  bool saw_digit = false;
  bool saw_dot = false;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (c == '.') {
      if (saw_dot) fail();
      saw_dot = true;
      continue;
    }
    if (c < '0' || c > '9') fail();
    saw_digit = true;
    if (num > (INT64_MAX - 9) / 10) throw std::overflow_error("Rational");
    num = num * 10 + (c - '0');
    if (saw_dot) {
      if (den > INT64_MAX / 10) throw std::overflow_error("Rational");
      den *= 10;
    }
  }
  if (!saw_digit) fail();
  return Rational(negative ? -num : num, den);
}

}  // namespace percept
