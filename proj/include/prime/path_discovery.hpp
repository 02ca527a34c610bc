#pragma once

#include <optional>
#include <vector>

#include "prime/routing_graph.hpp"

namespace prime {

// Simple, pool-distinct route from source to target, one leg per hop.
struct SinglePath {
  std::vector<Leg> legs;
  Amount probe_input;
  Amount probe_output;
  double average_rate = 0.0;         // probe_output / probe_input
  double marginal_rate_at_zero = 0.0;  // product of leg spot prices

  TokenIndex source() const { return legs.front().from; }
  TokenIndex target() const { return legs.back().to; }
  std::vector<TokenIndex> token_sequence() const;
  std::vector<PoolIndex> pools() const;
};

Amount simulate_path(const SinglePath& p, const Amount& x);

struct SearchStats {
  std::size_t queue_pushes = 0;
  std::size_t expansions = 0;
};

// Breadth-first best-output search with per-token dominance pruning. Legs
// touching a pool in `pool_mask` (indexed by PoolIndex) are skipped. Paths
// never revisit a token or reuse a pool. Among arrivals at the target, the
// largest output wins (first arrival on ties); it is returned only if its
// average rate exceeds tau.
std::optional<SinglePath> find_path(const RoutingGraph& g, TokenIndex source, TokenIndex target,
                                    const Amount& x, double tau, int max_hops,
                                    const std::vector<bool>* pool_mask = nullptr,
                                    SearchStats* stats = nullptr);

// Every simple pool-distinct path of at most max_hops edges, in DFS order
// over sorted adjacency. Throws graph_too_large above 16 tokens.
std::vector<SinglePath> enumerate_paths_oracle(const SwapGraph& g, TokenIndex source,
                                               TokenIndex target, int max_hops);

}  // namespace prime
