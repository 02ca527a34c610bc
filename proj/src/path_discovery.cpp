#include "prime/path_discovery.hpp"

#include <algorithm>

#include "prime/error.hpp"

namespace prime {

std::vector<TokenIndex> SinglePath::token_sequence() const {
  std::vector<TokenIndex> seq;
  seq.reserve(legs.size() + 1);
  seq.push_back(legs.front().from);
  for (const auto& l : legs) seq.push_back(l.to);
  return seq;
}

std::vector<PoolIndex> SinglePath::pools() const {
  std::vector<PoolIndex> out;
  for (const auto& l : legs) {
    for (const auto& e : l.edges) out.push_back(e.pool);
  }
  return out;
}

Amount simulate_path(const SinglePath& p, const Amount& x) {
  Amount a = x;
  for (const auto& l : p.legs) a = leg_out(l, a);
  return a;
}

namespace {

struct Node {
  TokenIndex token;
  Amount amount;
  std::int32_t parent;
  const Leg* via;
  int hops;
};

// True if appending `leg` to the chain ending at node `tip` would revisit a
// token or reuse a pool.
bool conflicts(const std::vector<Node>& nodes, std::int32_t tip, const Leg& leg) {
  for (std::int32_t i = tip; i >= 0; i = nodes[i].parent) {
    const Node& n = nodes[i];
    for (std::size_t k = 0; k < leg.edges.size(); ++k) {
      if (leg.edges[k].to == n.token) return true;
    }
    if (n.via == nullptr) continue;
    for (const auto& used : n.via->edges) {
      for (const auto& e : leg.edges) {
        if (e.pool == used.pool || e.to == used.to) return true;
      }
    }
  }
  // Shortcut legs must also be internally simple.
  for (std::size_t k = 0; k < leg.edges.size(); ++k) {
    for (std::size_t j = k + 1; j < leg.edges.size(); ++j) {
      if (leg.edges[k].pool == leg.edges[j].pool || leg.edges[k].to == leg.edges[j].to) return true;
    }
  }
  return false;
}

bool masked(const Leg& leg, const std::vector<bool>* mask) {
  if (mask == nullptr) return false;
  for (const auto& e : leg.edges) {
    if (e.pool < mask->size() && (*mask)[e.pool]) return true;
  }
  return false;
}

}  // namespace

std::optional<SinglePath> find_path(const RoutingGraph& g, TokenIndex source, TokenIndex target,
                                    const Amount& x, double tau, int max_hops,
                                    const std::vector<bool>* pool_mask, SearchStats* stats) {
  if (source == target) throw Error(Errc::invalid_params, "source and target must differ");
  if (x.is_zero()) throw Error(Errc::invalid_params, "input amount must be positive");
  if (max_hops < 1) throw Error(Errc::invalid_params, "max_hops must be at least 1");
  if (!(tau >= 0.0)) throw Error(Errc::invalid_params, "tau must be non-negative");

  // The node arena doubles as the FIFO queue: nodes are popped in push order.
  std::vector<Node> nodes;
  nodes.push_back(Node{source, x, -1, nullptr, 0});
  std::vector<Amount> best(g.base().universe_size());
  std::vector<double> best_approx(best.size(), 0.0);
  std::int32_t best_arrival = -1;
  SearchStats local;

  for (std::size_t head = 0; head < nodes.size(); ++head) {
    const Node cur = nodes[head];
    if (cur.token == target) {
      if (best_arrival < 0 || nodes[best_arrival].amount < cur.amount) {
        best_arrival = static_cast<std::int32_t>(head);
      }
      continue;
    }
    if (cur.hops >= max_hops) continue;
    ++local.expansions;
    const double in_approx = cur.amount.to_double();
    for (const Leg& leg : g.out_legs(cur.token)) {
      if (masked(leg, pool_mask)) continue;
      // Concavity caps the output at input * spot; skip legs that cannot
      // improve on the best arrival, with slack for rounding.
      if (in_approx * leg.spot * (1.0 + 1e-9) < best_approx[leg.to]) continue;
      if (conflicts(nodes, static_cast<std::int32_t>(head), leg)) continue;
      const auto next = try_leg_out(leg, cur.amount);
      if (!next || !(*next > best[leg.to])) continue;
      best[leg.to] = *next;
      best_approx[leg.to] = next->to_double();
      nodes.push_back(Node{leg.to, *next, static_cast<std::int32_t>(head), &leg, cur.hops + 1});
      ++local.queue_pushes;
    }
  }
  if (stats != nullptr) {
    stats->queue_pushes += local.queue_pushes + 1;  // include the seed
    stats->expansions += local.expansions;
  }
  if (best_arrival < 0) return std::nullopt;

  SinglePath path;
  for (std::int32_t i = best_arrival; nodes[i].parent >= 0; i = nodes[i].parent) {
    path.legs.push_back(*nodes[i].via);
  }
  std::reverse(path.legs.begin(), path.legs.end());
  path.probe_input = x;
  path.probe_output = nodes[best_arrival].amount;
  path.average_rate = path.probe_output.to_double() / x.to_double();
  path.marginal_rate_at_zero = 1.0;
  for (const auto& l : path.legs) path.marginal_rate_at_zero *= leg_spot(l);
  if (!(path.average_rate > tau)) return std::nullopt;
  return path;
}

namespace {

void enumerate_dfs(const SwapGraph& g, TokenIndex u, TokenIndex target, int max_hops,
                   std::vector<bool>& on_path, std::vector<PoolIndex>& pools,
                   std::vector<Leg>& legs, std::vector<SinglePath>& out) {
  if (u == target) {
    SinglePath p;
    p.legs = legs;
    p.marginal_rate_at_zero = 1.0;
    for (const auto& l : p.legs) p.marginal_rate_at_zero *= leg_spot(l);
    out.push_back(std::move(p));
    return;
  }
  if (static_cast<int>(legs.size()) >= max_hops) return;
  for (EdgeIndex ei : g.out_edges(u)) {
    const Edge& e = g.edge(ei);
    if (on_path[e.to]) continue;
    if (std::find(pools.begin(), pools.end(), e.pool) != pools.end()) continue;
    on_path[e.to] = true;
    pools.push_back(e.pool);
    legs.push_back(make_leg(e));
    enumerate_dfs(g, e.to, target, max_hops, on_path, pools, legs, out);
    legs.pop_back();
    pools.pop_back();
    on_path[e.to] = false;
  }
}

}  // namespace

std::vector<SinglePath> enumerate_paths_oracle(const SwapGraph& g, TokenIndex source,
                                               TokenIndex target, int max_hops) {
  if (g.token_count() > 16) {
    throw Error(Errc::graph_too_large, "path enumeration oracle is limited to 16 tokens");
  }
  std::vector<SinglePath> out;
  if (source == target || max_hops < 1) return out;
  std::vector<bool> on_path(g.universe_size(), false);
  on_path[source] = true;
  std::vector<PoolIndex> pools;
  std::vector<Leg> legs;
  enumerate_dfs(g, source, target, max_hops, on_path, pools, legs, out);
  return out;
}

}  // namespace prime
