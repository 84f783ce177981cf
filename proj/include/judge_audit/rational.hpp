#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace judge_audit {

// Exact fraction with a positive denominator, always kept in lowest terms.
// Used for human score averages, violation rates and miscoverage levels so
// that rounding and order statistics never depend on binary floating point.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  // Parses "4", "4.333", "-0.5" or "13/3".
  static Rational parse(std::string_view text);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string to_string() const;  // "num/den", or "num" when den == 1
  // Exact decimal ("0.05", "4.333") when the denominator is 2^a 5^b,
  // to_string() otherwise.
  std::string to_decimal() const;

  std::int64_t floor() const;
  std::int64_t ceil() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);

  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace judge_audit
