#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace convexcert {

struct RationalOverflow : std::overflow_error {
  RationalOverflow() : std::overflow_error("rational arithmetic overflow") {}
};

/// Exact rational with 64-bit numerator/denominator. Arithmetic is carried
/// out in 128 bits and throws RationalOverflow when the reduced result does
/// not fit.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t n) : num_(n), den_(1) {}  // NOLINT: implicit on purpose
  Rational(std::int64_t n, std::int64_t d);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  bool is_zero() const { return num_ == 0; }
  bool is_integer() const { return den_ == 1; }
  bool is_even_integer() const { return den_ == 1 && num_ % 2 == 0; }
  bool is_odd_integer() const { return den_ == 1 && num_ % 2 != 0; }
  int sign() const { return (num_ > 0) - (num_ < 0); }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  Rational operator-() const;
  Rational abs() const { return num_ < 0 ? -*this : *this; }
  Rational reciprocal() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

  /// Integer power; negative exponents invert.
  Rational pow(std::int64_t e) const;
  /// Exact rational power when the result is rational (e.g. (4/9)^(1/2)).
  std::optional<Rational> exact_pow(const Rational& e) const;

  /// "3", "-1/2".
  std::string str() const;
  /// Exact decimal text when the denominator is 2^a 5^b, otherwise nullopt.
  std::optional<std::string> decimal() const;

  /// Parses a decimal literal such as "12", "0.25" or "1e-3".
  static Rational from_decimal(std::string_view text);

  std::size_t hash() const {
    return std::hash<std::int64_t>{}(num_) * 31u + std::hash<std::int64_t>{}(den_);
  }

 private:
  static Rational from_wide(__int128 n, __int128 d);
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace convexcert
