#pragma once

#include <optional>
#include <span>
#include <vector>

#include "prime/swap_graph.hpp"

namespace prime {

// A hop-sized unit of routing: either one pool edge, or a shortcut whose
// edges run through non-hub intermediates and count as a single hop.
struct Leg {
  TokenIndex from = 0;
  TokenIndex to = 0;
  std::vector<Edge> edges;
  // Product of spot prices; bounds output / input from above.
  double spot = 0.0;

  bool is_shortcut() const noexcept { return edges.size() > 1; }
  PoolIndex first_pool() const { return edges.front().pool; }
};

Leg make_leg(const Edge& e);
Leg make_leg(std::vector<Edge> chain);

// Output of the chained edges; throws capacity_exceeded like swap_out.
Amount leg_out(const Leg& leg, const Amount& in);
// Same, but reports an exhausted piecewise domain as nullopt.
std::optional<Amount> try_leg_out(const Leg& leg, const Amount& in);
// d(out)/d(in) by the chain rule at the integer operating point.
double leg_marginal(const Leg& leg, const Amount& in);
double leg_spot(const Leg& leg);

// Lexicographic comparison of pool-id sequences, then target token.
bool leg_order(const Leg& a, const Leg& b);

// Search view over a swap graph plus optional shortcut legs.
class RoutingGraph {
 public:
  explicit RoutingGraph(const SwapGraph& base);

  void add_leg(Leg leg);
  std::span<const Leg> out_legs(TokenIndex u) const;

  const SwapGraph& base() const noexcept { return *base_; }
  std::size_t vertex_count() const noexcept;
  std::size_t leg_count() const noexcept { return leg_count_; }
  std::size_t shortcut_count() const noexcept { return shortcut_count_; }

 private:
  const SwapGraph* base_;
  std::vector<std::vector<Leg>> out_;
  std::vector<bool> extra_vertex_;
  std::size_t leg_count_ = 0;
  std::size_t shortcut_count_ = 0;
};

}  // namespace prime
