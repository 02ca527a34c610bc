#include "prime/amount.hpp"

#include <cmath>
#include <cstdint>
#include <ostream>

#include "prime/error.hpp"

namespace prime {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::capacity_exceeded: return "CapacityExceeded";
    case Errc::overflow: return "Overflow";
    case Errc::malformed_snapshot: return "MalformedSnapshot";
    case Errc::graph_too_large: return "GraphTooLarge";
    case Errc::no_route: return "NoRoute";
    case Errc::too_many_paths: return "TooManyPaths";
    case Errc::parse_error: return "ParseError";
    case Errc::version_unsupported: return "VersionUnsupported";
    case Errc::invalid_params: return "InvalidParams";
    case Errc::unknown_token: return "UnknownToken";
  }
  return "Unknown";
}

namespace {

const u512& u256_limit() {
  static const u512 limit = u512(1) << 256;
  return limit;
}

}  // namespace

Amount Amount::from_decimal(std::string_view text) {
  if (text.empty()) {
    throw Error(Errc::parse_error, "empty amount");
  }
  if (text.size() > 78) {  // 2^256 has 78 decimal digits
    throw Error(Errc::parse_error, "amount exceeds 256 bits: " + std::string(text));
  }
  u512 acc = 0;
  for (char c : text) {
    if (c < '0' || c > '9') {
      throw Error(Errc::parse_error,
                  "amount must be a decimal integer string, got '" + std::string(text) + "'");
    }
    acc = acc * 10 + static_cast<unsigned>(c - '0');
  }
  if (acc >= u256_limit()) {
    throw Error(Errc::parse_error, "amount exceeds 256 bits: " + std::string(text));
  }
  return Amount(static_cast<u256>(acc));
}

Amount Amount::from_wide(const u512& v) {
  if (v >= u256_limit()) {
    throw Error(Errc::overflow, "value does not fit in 256 bits");
  }
  return Amount(static_cast<u256>(v));
}

Amount Amount::from_double_floor(double v) {
  if (!(v >= 1.0)) return Amount{};
  if (v >= 1.157920892373162e77) {
    throw Error(Errc::overflow, "double exceeds 256-bit amount range");
  }
  // Exact for the integral part: decompose mantissa and exponent.
  int exp = 0;
  const double mant = std::frexp(std::floor(v), &exp);
  const auto bits = static_cast<std::uint64_t>(std::ldexp(mant, 53));
  u256 out = bits;
  if (exp >= 53) {
    out <<= (exp - 53);
  } else {
    out >>= (53 - exp);
  }
  return Amount(out);
}

Amount Amount::max() {
  return Amount(static_cast<u256>(u256_limit() - 1));
}

std::string Amount::to_decimal() const { return v_.str(); }

double Amount::to_double() const { return v_.convert_to<double>(); }

long double Amount::to_long_double() const { return v_.convert_to<long double>(); }

namespace {

constexpr std::size_t kLimbs = 4;
static_assert(sizeof(*u256().backend().limbs()) == 8, "limb arithmetic assumes 64-bit limbs");

void load_limbs(const u256& v, std::uint64_t (&out)[kLimbs]) {
  const auto& be = v.backend();
  for (std::size_t i = 0; i < kLimbs; ++i) out[i] = i < be.size() ? be.limbs()[i] : 0;
}

void store_limbs(u256& v, const std::uint64_t (&in)[kLimbs]) {
  auto& be = v.backend();
  be.resize(kLimbs, kLimbs);
  for (std::size_t i = 0; i < kLimbs; ++i) be.limbs()[i] = in[i];
  be.normalize();
}

}  // namespace

// Limb-wise with explicit carries; the generic operators dominate swap-heavy loops.
Amount& Amount::operator+=(const Amount& rhs) {
  std::uint64_t a[kLimbs];
  std::uint64_t b[kLimbs];
  load_limbs(v_, a);
  load_limbs(rhs.v_, b);
  unsigned long long carry = 0;
  for (std::size_t i = 0; i < kLimbs; ++i) {
    unsigned long long r;
    const bool c1 = __builtin_uaddll_overflow(a[i], b[i], &r);
    const bool c2 = __builtin_uaddll_overflow(r, carry, &r);
    a[i] = r;
    carry = (c1 || c2) ? 1 : 0;
  }
  if (carry != 0) throw Error(Errc::overflow, "amount addition overflows 256 bits");
  store_limbs(v_, a);
  return *this;
}

Amount& Amount::operator-=(const Amount& rhs) {
  std::uint64_t a[kLimbs];
  std::uint64_t b[kLimbs];
  load_limbs(v_, a);
  load_limbs(rhs.v_, b);
  unsigned long long borrow = 0;
  for (std::size_t i = 0; i < kLimbs; ++i) {
    unsigned long long r;
    const bool b1 = __builtin_usubll_overflow(a[i], b[i], &r);
    const bool b2 = __builtin_usubll_overflow(r, borrow, &r);
    a[i] = r;
    borrow = (b1 || b2) ? 1 : 0;
  }
  if (borrow != 0) throw Error(Errc::overflow, "amount subtraction underflows");
  store_limbs(v_, a);
  return *this;
}

Amount mul_div(const Amount& a, const Amount& b, const Amount& d) {
  if (d.is_zero()) {
    throw Error(Errc::overflow, "division by zero amount");
  }
  const u512 q = (a.wide() * b.wide()) / d.wide();
  return Amount::from_wide(q);
}

std::ostream& operator<<(std::ostream& os, const Amount& a) {
  return os << a.to_decimal();
}

}  // namespace prime
