#include "prime/swap_graph.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "prime/error.hpp"

namespace prime {

std::optional<TokenIndex> Registry::find_token(const std::string& id) const {
  const auto it = token_by_id.find(id);
  if (it == token_by_id.end()) return std::nullopt;
  return it->second;
}

std::optional<PoolIndex> Registry::find_pool(const std::string& id) const {
  const auto it = pool_by_id.find(id);
  if (it == pool_by_id.end()) return std::nullopt;
  return it->second;
}

namespace {

[[noreturn]] void malformed(const std::string& msg) {
  throw Error(Errc::malformed_snapshot, msg);
}

void expand_pool(const Registry& reg, PoolIndex pi, std::vector<Edge>& out) {
  const Pool& pool = reg.pools[pi];
  if (pool.tokens.size() < 2) malformed("pool " + pool.id + " needs at least two tokens");
  std::vector<TokenIndex> idx;
  for (const auto& tid : pool.tokens) {
    const auto t = reg.find_token(tid);
    if (!t) malformed("pool " + pool.id + " references unknown token " + tid);
    if (std::find(idx.begin(), idx.end(), *t) != idx.end()) {
      malformed("pool " + pool.id + " lists token " + tid + " twice");
    }
    idx.push_back(*t);
  }
  try {
    if (pool.kind == SwapKind::constant_product) {
      if (pool.reserves.size() != pool.tokens.size()) {
        malformed("pool " + pool.id + " must list one reserve per token");
      }
      for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t j = 0; j < idx.size(); ++j) {
          if (i == j) continue;
          out.push_back(Edge{pi, idx[i], idx[j],
                             SwapFunction::constant_product(pool.reserves[i], pool.reserves[j],
                                                            pool.fee_bps)});
        }
      }
      return;
    }
    if (idx.size() != 2) malformed("piecewise pool " + pool.id + " must have exactly two tokens");
    if (pool.directions.size() != 2) {
      malformed("piecewise pool " + pool.id + " must describe both directions");
    }
    bool seen[2] = {false, false};
    for (const auto& d : pool.directions) {
      const bool forward = d.token_in == pool.tokens[0] && d.token_out == pool.tokens[1];
      const bool backward = d.token_in == pool.tokens[1] && d.token_out == pool.tokens[0];
      if (!forward && !backward) {
        malformed("piecewise pool " + pool.id + " has a direction outside its token pair");
      }
      const int k = forward ? 0 : 1;
      if (seen[k]) malformed("piecewise pool " + pool.id + " repeats a direction");
      seen[k] = true;
      out.push_back(Edge{pi, idx[k], idx[1 - k], SwapFunction::piecewise(d.segments, pool.fee_bps)});
    }
  } catch (const Error& e) {
    if (e.code() == Errc::malformed_snapshot && std::string(e.what()).find(pool.id) == std::string::npos) {
      malformed("pool " + pool.id + ": " + e.what());
    }
    throw;
  }
}

}  // namespace

SwapGraph SwapGraph::build(std::vector<Token> tokens, std::vector<Pool> pools) {
  auto reg = std::make_shared<Registry>();
  std::sort(tokens.begin(), tokens.end(),
            [](const Token& a, const Token& b) { return a.id < b.id; });
  std::sort(pools.begin(), pools.end(), [](const Pool& a, const Pool& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].decimals > 30) malformed("token " + tokens[i].id + " has more than 30 decimals");
    if (!reg->token_by_id.emplace(tokens[i].id, static_cast<TokenIndex>(i)).second) {
      malformed("duplicate token id " + tokens[i].id);
    }
  }
  for (std::size_t i = 0; i < pools.size(); ++i) {
    if (!reg->pool_by_id.emplace(pools[i].id, static_cast<PoolIndex>(i)).second) {
      malformed("duplicate pool id " + pools[i].id);
    }
  }
  reg->tokens = std::move(tokens);
  reg->pools = std::move(pools);

  std::vector<Edge> edges;
  for (std::size_t i = 0; i < reg->pools.size(); ++i) {
    expand_pool(*reg, static_cast<PoolIndex>(i), edges);
  }
  std::vector<bool> present(reg->tokens.size(), true);
  return SwapGraph(std::move(reg), std::move(present), std::move(edges));
}

SwapGraph::SwapGraph(std::shared_ptr<const Registry> reg, std::vector<bool> present,
                     std::vector<Edge> edges)
    : registry_(std::move(reg)), present_(std::move(present)), edges_(std::move(edges)) {
  present_count_ = static_cast<std::size_t>(std::count(present_.begin(), present_.end(), true));
  std::stable_sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.from, a.pool, a.to) < std::tie(b.from, b.pool, b.to);
  });
  offsets_.assign(present_.size() + 1, 0);
  for (const auto& e : edges_) ++offsets_[e.from + 1];
  for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
  adjacency_.resize(edges_.size());
  for (std::size_t i = 0; i < edges_.size(); ++i) adjacency_[i] = static_cast<EdgeIndex>(i);
}

std::vector<TokenIndex> SwapGraph::tokens() const {
  std::vector<TokenIndex> out;
  out.reserve(present_count_);
  for (std::size_t i = 0; i < present_.size(); ++i) {
    if (present_[i]) out.push_back(static_cast<TokenIndex>(i));
  }
  return out;
}

std::span<const EdgeIndex> SwapGraph::out_edges(TokenIndex u) const {
  if (u >= present_.size()) return {};
  return std::span<const EdgeIndex>(adjacency_).subspan(offsets_[u], offsets_[u + 1] - offsets_[u]);
}

std::vector<EdgeIndex> SwapGraph::edges_between(TokenIndex u, TokenIndex v) const {
  std::vector<EdgeIndex> out;
  for (EdgeIndex e : out_edges(u)) {
    if (edges_[e].to == v) out.push_back(e);
  }
  return out;
}

std::optional<EdgeIndex> SwapGraph::find_edge(PoolIndex pool, TokenIndex from, TokenIndex to) const {
  for (EdgeIndex e : out_edges(from)) {
    if (edges_[e].pool == pool && edges_[e].to == to) return e;
  }
  return std::nullopt;
}

std::vector<PoolIndex> SwapGraph::incident_pools(TokenIndex t) const {
  std::vector<PoolIndex> out;
  for (EdgeIndex e : out_edges(t)) {
    if (out.empty() || out.back() != edges_[e].pool) out.push_back(edges_[e].pool);
  }
  return out;
}

std::size_t SwapGraph::pool_count() const {
  std::vector<PoolIndex> pools;
  pools.reserve(edges_.size());
  for (const auto& e : edges_) pools.push_back(e.pool);
  std::sort(pools.begin(), pools.end());
  return static_cast<std::size_t>(std::unique(pools.begin(), pools.end()) - pools.begin());
}

TokenIndex SwapGraph::require_token(const std::string& id) const {
  const auto t = registry_->find_token(id);
  if (!t || !contains(*t)) throw Error(Errc::unknown_token, "unknown token " + id);
  return *t;
}

SwapGraph SwapGraph::induced(const std::vector<bool>& keep) const {
  std::vector<bool> present(present_.size(), false);
  for (std::size_t i = 0; i < present_.size(); ++i) {
    present[i] = present_[i] && i < keep.size() && keep[i];
  }
  std::vector<Edge> edges;
  for (const auto& e : edges_) {
    if (present[e.from] && present[e.to]) edges.push_back(e);
  }
  return SwapGraph(registry_, std::move(present), std::move(edges));
}

SwapGraph build_graph(std::vector<Token> tokens, std::vector<Pool> pools) {
  return SwapGraph::build(std::move(tokens), std::move(pools));
}

SwapGraph prune_leaf_tokens(const SwapGraph& g, const std::vector<TokenIndex>& protected_tokens) {
  std::vector<bool> keep(g.universe_size(), false);
  for (TokenIndex t : g.tokens()) keep[t] = true;
  std::vector<bool> is_protected(g.universe_size(), false);
  for (TokenIndex t : protected_tokens) {
    if (t < is_protected.size()) is_protected[t] = true;
  }
  // Fixpoint over neighbour counts; a token with exactly one distinct
  // neighbour is a leaf.
  std::vector<std::uint32_t> first(g.universe_size());
  std::vector<std::uint8_t> count(g.universe_size());
  for (bool changed = true; changed;) {
    changed = false;
    std::fill(count.begin(), count.end(), 0);
    for (const auto& e : g.edges()) {
      if (!keep[e.from] || !keep[e.to]) continue;
      if (count[e.from] == 0) {
        first[e.from] = e.to;
        count[e.from] = 1;
      } else if (count[e.from] == 1 && first[e.from] != e.to) {
        count[e.from] = 2;
      }
    }
    for (std::size_t t = 0; t < keep.size(); ++t) {
      if (keep[t] && !is_protected[t] && count[t] == 1) {
        keep[t] = false;
        changed = true;
      }
    }
  }
  return g.induced(keep);
}

}  // namespace prime
