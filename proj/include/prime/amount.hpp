#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace prime {

using u256 = boost::multiprecision::uint256_t;
using u512 = boost::multiprecision::uint512_t;

// Raw on-chain token quantity. Arithmetic is checked: wraparound and
// underflow raise Error{Errc::overflow} instead of silently truncating.
class Amount {
 public:
  Amount() = default;
  Amount(std::uint64_t v) : v_(v) {}  // NOLINT(google-explicit-constructor)
  explicit Amount(const u256& v) : v_(v) {}

  // Strict decimal digits only ("1e18", "+5", " 7", "0x10" are rejected).
  static Amount from_decimal(std::string_view text);
  // Narrows a 512-bit intermediate; throws overflow when it does not fit.
  static Amount from_wide(const u512& v);
  // Truncates toward zero; negative or NaN inputs map to 0.
  static Amount from_double_floor(double v);
  static Amount max();

  std::string to_decimal() const;
  double to_double() const;
  long double to_long_double() const;
  const u256& raw() const noexcept { return v_; }
  u512 wide() const { return u512(v_); }
  bool is_zero() const noexcept { return v_.is_zero(); }

  Amount& operator+=(const Amount& rhs);
  Amount& operator-=(const Amount& rhs);

  friend Amount operator+(Amount lhs, const Amount& rhs) { return lhs += rhs; }
  friend Amount operator-(Amount lhs, const Amount& rhs) { return lhs -= rhs; }

  friend bool operator==(const Amount& a, const Amount& b) { return a.v_ == b.v_; }
  friend std::strong_ordering operator<=>(const Amount& a, const Amount& b) {
    const int c = a.v_.compare(b.v_);
    if (c < 0) return std::strong_ordering::less;
    if (c > 0) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

 private:
  u256 v_{0};
};

// floor(a * b / d) with a 512-bit intermediate.
Amount mul_div(const Amount& a, const Amount& b, const Amount& d);

std::ostream& operator<<(std::ostream& os, const Amount& a);

}  // namespace prime
