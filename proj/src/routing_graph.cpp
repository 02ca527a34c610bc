#include "prime/routing_graph.hpp"

#include <algorithm>

#include "prime/error.hpp"

namespace prime {

Leg make_leg(const Edge& e) {
  Leg leg{e.from, e.to, {e}};
  leg.spot = spot_price(e.fn);
  return leg;
}

Leg make_leg(std::vector<Edge> chain) {
  if (chain.empty()) throw Error(Errc::invalid_params, "leg needs at least one edge");
  for (std::size_t i = 1; i < chain.size(); ++i) {
    if (chain[i - 1].to != chain[i].from) {
      throw Error(Errc::invalid_params, "leg edges must chain token_out -> token_in");
    }
  }
  const TokenIndex from = chain.front().from;
  const TokenIndex to = chain.back().to;
  Leg leg{from, to, std::move(chain)};
  leg.spot = 1.0;
  for (const auto& e : leg.edges) leg.spot *= spot_price(e.fn);
  return leg;
}

Amount leg_out(const Leg& leg, const Amount& in) {
  Amount a = in;
  for (const auto& e : leg.edges) a = swap_out(e.fn, a);
  return a;
}

std::optional<Amount> try_leg_out(const Leg& leg, const Amount& in) {
  Amount a = in;
  for (const auto& e : leg.edges) {
    if (e.fn.kind() == SwapKind::piecewise_liquidity && a > e.fn.capacity()) return std::nullopt;
    a = swap_out(e.fn, a);
  }
  return a;
}

double leg_marginal(const Leg& leg, const Amount& in) {
  Amount a = in;
  double d = 1.0;
  for (const auto& e : leg.edges) {
    d *= marginal_price(e.fn, a);
    a = swap_out(e.fn, a);
  }
  return d;
}

double leg_spot(const Leg& leg) { return leg.spot; }

bool leg_order(const Leg& a, const Leg& b) {
  const std::size_t n = std::min(a.edges.size(), b.edges.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a.edges[i].pool != b.edges[i].pool) return a.edges[i].pool < b.edges[i].pool;
    if (a.edges[i].to != b.edges[i].to) return a.edges[i].to < b.edges[i].to;
  }
  return a.edges.size() < b.edges.size();
}

RoutingGraph::RoutingGraph(const SwapGraph& base)
    : base_(&base), out_(base.universe_size()), extra_vertex_(base.universe_size(), false) {
  for (TokenIndex u : base.tokens()) {
    auto& legs = out_[u];
    const auto edges = base.out_edges(u);
    legs.reserve(edges.size());
    for (EdgeIndex e : edges) legs.push_back(make_leg(base.edge(e)));
    leg_count_ += legs.size();
  }
}

void RoutingGraph::add_leg(Leg leg) {
  if (leg.from >= out_.size() || leg.to >= out_.size()) {
    throw Error(Errc::invalid_params, "leg endpoint outside the token universe");
  }
  if (!base_->contains(leg.from)) extra_vertex_[leg.from] = true;
  if (!base_->contains(leg.to)) extra_vertex_[leg.to] = true;
  auto& legs = out_[leg.from];
  const auto pos = std::upper_bound(legs.begin(), legs.end(), leg, leg_order);
  if (leg.is_shortcut()) ++shortcut_count_;
  legs.insert(pos, std::move(leg));
  ++leg_count_;
}

std::span<const Leg> RoutingGraph::out_legs(TokenIndex u) const {
  if (u >= out_.size()) return {};
  return out_[u];
}

std::size_t RoutingGraph::vertex_count() const noexcept {
  return base_->token_count() +
         static_cast<std::size_t>(std::count(extra_vertex_.begin(), extra_vertex_.end(), true));
}

}  // namespace prime
