#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "prime/amount.hpp"

namespace prime {

inline constexpr std::uint32_t kFeeDenominator = 10000;

// x*y = k pool leg with the fee taken from the input before the invariant
// (Uniswap V2 convention).
struct ConstantProduct {
  Amount reserve_in;
  Amount reserve_out;
  std::uint32_t fee_bps = 0;
};

// One price range of a concentrated-liquidity position, modelled as a
// constant-product curve over virtual reserves that is valid for at most
// capacity_in units of input.
struct LiquiditySegment {
  Amount capacity_in;
  Amount virtual_reserve_in;
  Amount virtual_reserve_out;
};

// Segments are consumed greedily in order. Construction enforces that each
// segment starts at or below the marginal price where the previous one ends,
// so the stitched function stays concave.
struct PiecewiseLiquidity {
  std::vector<LiquiditySegment> segments;
  std::uint32_t fee_bps = 0;
  Amount capacity;  // sum of segment capacities
};

enum class SwapKind { constant_product, piecewise_liquidity };

class SwapFunction {
 public:
  // Throws Error{malformed_snapshot} when an invariant is violated.
  static SwapFunction constant_product(Amount reserve_in, Amount reserve_out,
                                       std::uint32_t fee_bps);
  static SwapFunction piecewise(std::vector<LiquiditySegment> segments,
                                std::uint32_t fee_bps);

  SwapKind kind() const noexcept;
  std::uint32_t fee_bps() const noexcept;
  const ConstantProduct* as_constant_product() const noexcept {
    return std::get_if<ConstantProduct>(&repr_);
  }
  const PiecewiseLiquidity* as_piecewise() const noexcept {
    return std::get_if<PiecewiseLiquidity>(&repr_);
  }

  // Largest accepted input; Amount::max() for constant product.
  Amount capacity() const;

 private:
  explicit SwapFunction(std::variant<ConstantProduct, PiecewiseLiquidity> r)
      : repr_(std::move(r)) {}

  std::variant<ConstantProduct, PiecewiseLiquidity> repr_;
};

// Exact integer output for input x. Throws capacity_exceeded past the
// piecewise domain and overflow if an intermediate leaves 512 bits.
Amount swap_out(const SwapFunction& f, const Amount& x);

// Analytic f'(x) in double precision.
double marginal_price(const SwapFunction& f, const Amount& x);

double spot_price(const SwapFunction& f);

// Supremum of the output: R_out for constant product, the sum of the
// segment outputs at full capacity for piecewise.
Amount max_output(const SwapFunction& f);

// Pre-floor value of the swap curve, for oracles and diagnostics.
long double swap_out_real(const SwapFunction& f, long double x);

}  // namespace prime
