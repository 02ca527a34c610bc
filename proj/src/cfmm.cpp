#include "prime/cfmm.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include "prime/error.hpp"

namespace prime {

namespace {

constexpr std::size_t kMaxSegments = 16;

static_assert(sizeof(*u256().backend().limbs()) == 8, "limb helpers assume 64-bit limbs");

unsigned bit_width(const u256& v) {
  const auto& be = v.backend();
  const std::uint64_t top = be.limbs()[be.size() - 1];
  if (top == 0) return 0u;  // only a zero value has a zero top limb
  return static_cast<unsigned>(64 * be.size() - __builtin_clzll(top));
}

__extension__ using u128 = unsigned __int128;

// Low 128 bits of `v`.
u128 low128(const u256& v) {
  const auto& be = v.backend();
  u128 r = be.limbs()[0];
  if (be.size() > 1) r |= static_cast<u128>(be.limbs()[1]) << 64;
  return r;
}

Amount from_u128(u128 v) {
  u256 r;
  auto& be = r.backend();
  be.resize(2, 2);
  be.limbs()[0] = static_cast<std::uint64_t>(v);
  be.limbs()[1] = static_cast<std::uint64_t>(v >> 64);
  be.normalize();
  return Amount(r);
}

// (hi:lo) / d and the remainder; requires hi < d.
std::uint64_t div_128_64(std::uint64_t hi, std::uint64_t lo, std::uint64_t d, std::uint64_t& rem) {
#if defined(__x86_64__)
  std::uint64_t q;
  __asm__("divq %4" : "=a"(q), "=d"(rem) : "a"(lo), "d"(hi), "rm"(d));
  return q;
#else
  const u128 n = (static_cast<u128>(hi) << 64) | lo;
  rem = static_cast<std::uint64_t>(n % d);
  return static_cast<std::uint64_t>(n / d);
#endif
}

// floor(a*b/d) for d > 0 when the quotient fits 128 bits. Long division of
// the 256-bit product in 64-bit limbs (Knuth, algorithm D).
u128 mul_div_u128(u128 a, u128 b, u128 d) {
  const auto lo = [](u128 v) { return static_cast<std::uint64_t>(v); };
  const auto hi = [](u128 v) { return static_cast<std::uint64_t>(v >> 64); };
  const u128 p00 = static_cast<u128>(lo(a)) * lo(b);
  const u128 p01 = static_cast<u128>(lo(a)) * hi(b);
  const u128 p10 = static_cast<u128>(hi(a)) * lo(b);
  const u128 p11 = static_cast<u128>(hi(a)) * hi(b);
  const u128 mid = static_cast<u128>(hi(p00)) + lo(p01) + lo(p10);
  const u128 top = static_cast<u128>(hi(mid)) + hi(p01) + hi(p10) + lo(p11);
  const std::uint64_t u[4] = {lo(p00), lo(mid), lo(top), hi(top) + hi(p11)};

  if (hi(d) == 0) {
    const std::uint64_t d0 = lo(d);
    std::uint64_t rem = 0;
    std::uint64_t q[4];
    for (int i = 3; i >= 0; --i) q[i] = div_128_64(rem, u[i], d0, rem);
    return (static_cast<u128>(q[1]) << 64) | q[0];
  }

  // Normalise so the divisor's top bit is set.
  const int s = __builtin_clzll(hi(d));
  const u128 dn = d << s;
  const std::uint64_t v1 = hi(dn);
  const std::uint64_t v0 = lo(dn);
  std::uint64_t un[5];
  un[4] = s == 0 ? 0 : u[3] >> (64 - s);
  for (int i = 3; i > 0; --i) un[i] = s == 0 ? u[i] : (u[i] << s) | (u[i - 1] >> (64 - s));
  un[0] = u[0] << s;

  // The quotient fits 128 bits, so its third digit is zero.
  std::uint64_t q[2] = {};
  for (int j = 1; j >= 0; --j) {
    std::uint64_t qhat;
    u128 rhat;
    if (un[j + 2] >= v1) {
      qhat = ~std::uint64_t{0};
      rhat = ((static_cast<u128>(un[j + 2]) << 64) | un[j + 1]) - static_cast<u128>(qhat) * v1;
    } else {
      std::uint64_t r;
      qhat = div_128_64(un[j + 2], un[j + 1], v1, r);
      rhat = r;
    }
    while (hi(rhat) == 0 &&
           static_cast<u128>(qhat) * v0 > ((rhat << 64) | un[j])) {
      --qhat;
      rhat += v1;
    }
    // un[j..j+2] -= qhat * (v1:v0)
    const u128 m0 = static_cast<u128>(qhat) * v0;
    const u128 m1 = static_cast<u128>(qhat) * v1 + hi(m0);
    u128 t = static_cast<u128>(un[j]) - lo(m0);
    un[j] = lo(t);
    std::uint64_t borrow = hi(t) != 0 ? 1 : 0;
    t = static_cast<u128>(un[j + 1]) - lo(m1) - borrow;
    un[j + 1] = lo(t);
    borrow = hi(t) != 0 ? 1 : 0;
    t = static_cast<u128>(un[j + 2]) - hi(m1) - borrow;
    un[j + 2] = lo(t);
    const bool negative = hi(t) != 0;
    q[j] = qhat;
    if (negative) {
      --q[j];
      u128 c = static_cast<u128>(un[j]) + v0;
      un[j] = lo(c);
      c = static_cast<u128>(un[j + 1]) + v1 + hi(c);
      un[j + 1] = lo(c);
      un[j + 2] += hi(c);
    }
  }
  return (static_cast<u128>(q[1]) << 64) | q[0];
}

// floor(x*g*r_out / (r_in*10000 + x*g)) with g = 10000 - fee. Picks the
// narrowest integer width that holds the numerator.
Amount cp_out(const Amount& x, const Amount& r_in, const Amount& r_out, std::uint32_t gamma) {
  if (x.is_zero()) return Amount{};
  const unsigned x_bits = bit_width(x.raw());
  const unsigned in_bits = bit_width(r_in.raw());
  const unsigned out_bits = bit_width(r_out.raw());
  if (x_bits <= 113 && in_bits <= 113 && out_bits <= 128) {
    // Denominator < 2^128 and the quotient is below r_out.
    const u128 a = low128(x.raw()) * gamma;
    const u128 den = low128(r_in.raw()) * kFeeDenominator + a;
    return from_u128(mul_div_u128(a, low128(r_out.raw()), den));
  }
  const unsigned num_bits = x_bits + 14 + out_bits;
  const unsigned den_bits = std::max(in_bits, x_bits) + 15;
  if (num_bits <= 255 && den_bits <= 255) {
    const u256 a = x.raw() * gamma;
    return Amount((a * r_out.raw()) / (r_in.raw() * kFeeDenominator + a));
  }
  if (num_bits > 511) {
    throw Error(Errc::overflow, "swap intermediate exceeds 512 bits");
  }
  const u512 a = x.wide() * gamma;
  const u512 out = (a * r_out.wide()) / (r_in.wide() * kFeeDenominator + a);
  return Amount::from_wide(out);
}

double cp_marginal(long double x, long double r_in, long double r_out, std::uint32_t gamma) {
  const long double g = static_cast<long double>(gamma) / kFeeDenominator;
  const long double d = r_in + g * x;
  return static_cast<double>((g * r_in / d) * (r_out / d));
}

long double cp_real(long double x, long double r_in, long double r_out, std::uint32_t gamma) {
  const long double a = x * gamma;
  return a * r_out / (r_in * kFeeDenominator + a);
}

void check_fee(std::uint32_t fee_bps) {
  if (fee_bps >= kFeeDenominator) {
    throw Error(Errc::malformed_snapshot, "fee_bps must be below 10000");
  }
}

}  // namespace

SwapFunction SwapFunction::constant_product(Amount reserve_in, Amount reserve_out,
                                            std::uint32_t fee_bps) {
  check_fee(fee_bps);
  if (reserve_in.is_zero() || reserve_out.is_zero()) {
    throw Error(Errc::malformed_snapshot, "constant-product reserves must be positive");
  }
  return SwapFunction(ConstantProduct{reserve_in, reserve_out, fee_bps});
}

SwapFunction SwapFunction::piecewise(std::vector<LiquiditySegment> segments,
                                     std::uint32_t fee_bps) {
  check_fee(fee_bps);
  if (segments.empty() || segments.size() > kMaxSegments) {
    throw Error(Errc::malformed_snapshot, "piecewise pool needs 1..16 segments");
  }
  using boost::multiprecision::cpp_int;
  const std::uint32_t gamma = kFeeDenominator - fee_bps;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (s.capacity_in.is_zero() || s.virtual_reserve_in.is_zero() ||
        s.virtual_reserve_out.is_zero()) {
      throw Error(Errc::malformed_snapshot, "piecewise segment values must be positive");
    }
    if (i == 0) continue;
    // next spot <= previous end marginal, cross-multiplied exactly:
    //   vout_k * (1e4*vin_p + g*cap_p)^2 <= 1e8 * vin_p * vout_p * vin_k
    const auto& p = segments[i - 1];
    const cpp_int end_den = cpp_int(p.virtual_reserve_in.raw()) * kFeeDenominator +
                            cpp_int(p.capacity_in.raw()) * gamma;
    const cpp_int lhs = cpp_int(s.virtual_reserve_out.raw()) * end_den * end_den;
    const cpp_int rhs = cpp_int(kFeeDenominator) * kFeeDenominator *
                        cpp_int(p.virtual_reserve_in.raw()) *
                        cpp_int(p.virtual_reserve_out.raw()) * cpp_int(s.virtual_reserve_in.raw());
    if (lhs > rhs) {
      throw Error(Errc::malformed_snapshot,
                  "piecewise segments must have non-increasing marginal price (segment " +
                      std::to_string(i) + " starts above where segment " + std::to_string(i - 1) +
                      " ends)");
    }
  }
  Amount capacity;
  for (const auto& seg : segments) capacity += seg.capacity_in;
  return SwapFunction(PiecewiseLiquidity{std::move(segments), fee_bps, capacity});
}

SwapKind SwapFunction::kind() const noexcept {
  return std::holds_alternative<ConstantProduct>(repr_) ? SwapKind::constant_product
                                                        : SwapKind::piecewise_liquidity;
}

std::uint32_t SwapFunction::fee_bps() const noexcept {
  return std::visit([](const auto& r) { return r.fee_bps; }, repr_);
}

Amount SwapFunction::capacity() const {
  if (const auto* pw = as_piecewise()) return pw->capacity;
  return Amount::max();
}

Amount swap_out(const SwapFunction& f, const Amount& x) {
  if (const auto* cp = f.as_constant_product()) {
    return cp_out(x, cp->reserve_in, cp->reserve_out, kFeeDenominator - cp->fee_bps);
  }
  const auto& pw = *f.as_piecewise();
  const std::uint32_t gamma = kFeeDenominator - pw.fee_bps;
  Amount remaining = x;
  Amount out;
  for (const auto& s : pw.segments) {
    if (remaining.is_zero()) break;
    const Amount take = remaining < s.capacity_in ? remaining : s.capacity_in;
    out += cp_out(take, s.virtual_reserve_in, s.virtual_reserve_out, gamma);
    remaining -= take;
  }
  if (!remaining.is_zero()) {
    throw Error(Errc::capacity_exceeded,
                "input " + x.to_decimal() + " exceeds piecewise capacity");
  }
  return out;
}

double marginal_price(const SwapFunction& f, const Amount& x) {
  if (const auto* cp = f.as_constant_product()) {
    return cp_marginal(x.to_long_double(), cp->reserve_in.to_long_double(),
                       cp->reserve_out.to_long_double(), kFeeDenominator - cp->fee_bps);
  }
  const auto& pw = *f.as_piecewise();
  const std::uint32_t gamma = kFeeDenominator - pw.fee_bps;
  Amount start;
  for (std::size_t i = 0; i < pw.segments.size(); ++i) {
    const auto& s = pw.segments[i];
    const Amount end = start + s.capacity_in;
    const bool last = i + 1 == pw.segments.size();
    if (x < end || (last && x == end)) {
      const Amount within = x - start;
      return cp_marginal(within.to_long_double(), s.virtual_reserve_in.to_long_double(),
                         s.virtual_reserve_out.to_long_double(), gamma);
    }
    start = end;
  }
  throw Error(Errc::capacity_exceeded, "input " + x.to_decimal() + " exceeds piecewise capacity");
}

double spot_price(const SwapFunction& f) { return marginal_price(f, Amount{}); }

Amount max_output(const SwapFunction& f) {
  if (const auto* cp = f.as_constant_product()) return cp->reserve_out;
  const auto& pw = *f.as_piecewise();
  const std::uint32_t gamma = kFeeDenominator - pw.fee_bps;
  Amount out;
  for (const auto& s : pw.segments) {
    out += cp_out(s.capacity_in, s.virtual_reserve_in, s.virtual_reserve_out, gamma);
  }
  return out;
}

long double swap_out_real(const SwapFunction& f, long double x) {
  if (const auto* cp = f.as_constant_product()) {
    return cp_real(x, cp->reserve_in.to_long_double(), cp->reserve_out.to_long_double(),
                   kFeeDenominator - cp->fee_bps);
  }
  const auto& pw = *f.as_piecewise();
  const std::uint32_t gamma = kFeeDenominator - pw.fee_bps;
  long double remaining = x;
  long double out = 0;
  for (const auto& s : pw.segments) {
    if (remaining <= 0) break;
    const long double cap = s.capacity_in.to_long_double();
    const long double take = remaining < cap ? remaining : cap;
    out += cp_real(take, s.virtual_reserve_in.to_long_double(),
                   s.virtual_reserve_out.to_long_double(), gamma);
    remaining -= take;
  }
  return out;
}

}  // namespace prime
