#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "prime/cfmm.hpp"

namespace prime {

using TokenIndex = std::uint32_t;
using PoolIndex = std::uint32_t;
using EdgeIndex = std::uint32_t;

struct Token {
  std::string id;
  std::string symbol;
  std::uint32_t decimals = 18;
};

// Per-direction segment list of a two-token concentrated-liquidity pool.
struct DirectedSegments {
  std::string token_in;
  std::string token_out;
  std::vector<LiquiditySegment> segments;
};

// Pool as it appears in a snapshot. Constant-product pools list one reserve
// per token; piecewise pools are two-token and describe each direction.
struct Pool {
  std::string id;
  SwapKind kind = SwapKind::constant_product;
  std::vector<std::string> tokens;
  std::vector<Amount> reserves;
  std::vector<DirectedSegments> directions;
  std::uint32_t fee_bps = 0;
};

struct Edge {
  PoolIndex pool = 0;
  TokenIndex from = 0;
  TokenIndex to = 0;
  SwapFunction fn;
};

// Token and pool tables shared by a graph and every subgraph derived from
// it, so indices stay stable across pruning and core-graph induction.
// Both tables are sorted by id: index order is id order.
struct Registry {
  std::vector<Token> tokens;
  std::vector<Pool> pools;
  std::unordered_map<std::string, TokenIndex> token_by_id;
  std::unordered_map<std::string, PoolIndex> pool_by_id;

  std::optional<TokenIndex> find_token(const std::string& id) const;
  std::optional<PoolIndex> find_pool(const std::string& id) const;
};

// Immutable directed multigraph over a shared registry. Vertices not
// present in this graph keep their index but have no edges.
class SwapGraph {
 public:
  // Throws Error{malformed_snapshot} on dangling ids, duplicates, zero
  // reserves or invalid pool shapes.
  static SwapGraph build(std::vector<Token> tokens, std::vector<Pool> pools);

  const Registry& registry() const noexcept { return *registry_; }
  std::shared_ptr<const Registry> shared_registry() const noexcept { return registry_; }

  std::size_t token_count() const noexcept { return present_count_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::size_t universe_size() const noexcept { return present_.size(); }
  bool contains(TokenIndex t) const noexcept { return t < present_.size() && present_[t]; }
  std::vector<TokenIndex> tokens() const;

  const Edge& edge(EdgeIndex e) const { return edges_[e]; }
  std::span<const Edge> edges() const noexcept { return edges_; }
  // Outgoing edges of u sorted by (pool id, target id).
  std::span<const EdgeIndex> out_edges(TokenIndex u) const;
  // All u->v edges ordered by pool id.
  std::vector<EdgeIndex> edges_between(TokenIndex u, TokenIndex v) const;
  std::optional<EdgeIndex> find_edge(PoolIndex pool, TokenIndex from, TokenIndex to) const;
  // Distinct pools touching t.
  std::vector<PoolIndex> incident_pools(TokenIndex t) const;
  std::size_t pool_count() const;

  const std::string& token_id(TokenIndex t) const { return registry_->tokens[t].id; }
  const std::string& pool_id(PoolIndex p) const { return registry_->pools[p].id; }
  TokenIndex require_token(const std::string& id) const;

  // Subgraph on `keep` (universe-sized mask) with every edge whose two
  // endpoints are kept.
  SwapGraph induced(const std::vector<bool>& keep) const;

 private:
  SwapGraph(std::shared_ptr<const Registry> reg, std::vector<bool> present,
            std::vector<Edge> edges);

  std::shared_ptr<const Registry> registry_;
  std::vector<bool> present_;
  std::size_t present_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::uint32_t> offsets_;
  std::vector<EdgeIndex> adjacency_;
};

// Equivalent to SwapGraph::build; named after the operation.
SwapGraph build_graph(std::vector<Token> tokens, std::vector<Pool> pools);

// Repeatedly removes unprotected tokens whose pools all connect to exactly
// one other token.
SwapGraph prune_leaf_tokens(const SwapGraph& g, const std::vector<TokenIndex>& protected_tokens);

}  // namespace prime
