#include "prime/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>

#include "prime/error.hpp"
#include "prime/path_discovery.hpp"

namespace prime {

namespace {

RouteSolution single_path_solution(const SinglePath& p, const RouteQuery& q, std::string algorithm) {
  RouteSolution sol;
  sol.algorithm = std::move(algorithm);
  sol.source = q.source;
  sol.target = q.target;
  sol.amount_in = q.amount;
  sol.paths.push_back(MultiEdgePath::from_single(p));
  sol.allocation.path_weights = {1.0};
  sol.allocation.edge_weights.resize(1);
  for (std::size_t h = 0; h < p.legs.size(); ++h) sol.allocation.edge_weights[0].push_back({1.0});
  sol.tau = p.average_rate;
  sol.plan = build_execution_plan(sol.paths, sol.allocation, q.amount, &sol.total_output);
  return sol;
}

}  // namespace

RouteSolution best_single_path(const SwapGraph& g, const RouteQuery& q) {
  q.validate();
  if (!g.contains(q.source) || !g.contains(q.target)) {
    throw Error(Errc::unknown_token, "query tokens must belong to the graph");
  }
  const RoutingGraph rg(g);
  SearchStats stats;
  const auto p = find_path(rg, q.source, q.target, q.amount, 0.0, q.max_hops, nullptr, &stats);
  if (!p) {
    throw Error(Errc::no_route, "no route from " + g.token_id(q.source) + " to " +
                                    g.token_id(q.target));
  }
  RouteSolution sol = single_path_solution(*p, q, "osp");
  sol.stats.queue_pushes = stats.queue_pushes;
  sol.stats.stage1_iterations = 1;
  return sol;
}

namespace {

// Mutable reserves for every pool, seeded from the snapshot. Piecewise
// pools track each direction's remaining segments independently.
class FlowState {
 public:
  explicit FlowState(const SwapGraph& g) : g_(&g), pools_(g.registry().pools) {}

  std::optional<Amount> swap(const Edge& e, const Amount& in) {
    Pool& p = pools_[e.pool];
    const std::string& from = g_->token_id(e.from);
    if (p.kind == SwapKind::constant_product) {
      const std::size_t i = position(p, from);
      const std::size_t j = position(p, g_->token_id(e.to));
      const Amount out = swap_out(SwapFunction::constant_product(p.reserves[i], p.reserves[j],
                                                                 p.fee_bps),
                                  in);
      p.reserves[i] += in;
      p.reserves[j] -= out;
      if (p.reserves[j].is_zero()) return std::nullopt;
      return out;
    }
    auto& segs = direction(p, from).segments;
    Amount rest = in;
    Amount out;
    std::size_t k = 0;
    while (!rest.is_zero()) {
      if (k == segs.size()) return std::nullopt;
      LiquiditySegment& s = segs[k];
      const Amount take = std::min(rest, s.capacity_in);
      const Amount got = swap_out(SwapFunction::constant_product(s.virtual_reserve_in,
                                                                 s.virtual_reserve_out, p.fee_bps),
                                  take);
      out += got;
      rest -= take;
      s.capacity_in -= take;
      s.virtual_reserve_in += take;
      s.virtual_reserve_out -= got;
      if (s.capacity_in.is_zero() || s.virtual_reserve_out.is_zero()) ++k;
    }
    segs.erase(segs.begin(), segs.begin() + static_cast<std::ptrdiff_t>(k));
    return out;
  }

  // Zero-input marginal price of the edge at the current state.
  double spot(const Edge& e) const {
    const Pool& p = pools_[e.pool];
    const double fee = static_cast<double>(kFeeDenominator - p.fee_bps) / kFeeDenominator;
    const std::string& from = g_->token_id(e.from);
    if (p.kind == SwapKind::constant_product) {
      const std::size_t i = position(p, from);
      const std::size_t j = position(p, g_->token_id(e.to));
      return fee * p.reserves[j].to_double() / p.reserves[i].to_double();
    }
    const auto& segs = direction(p, from).segments;
    if (segs.empty()) return 0.0;
    return fee * segs.front().virtual_reserve_out.to_double() /
           segs.front().virtual_reserve_in.to_double();
  }

 private:
  static std::size_t position(const Pool& p, const std::string& token) {
    return static_cast<std::size_t>(std::find(p.tokens.begin(), p.tokens.end(), token) -
                                    p.tokens.begin());
  }
  static DirectedSegments& direction(Pool& p, const std::string& from) {
    for (auto& d : p.directions) {
      if (d.token_in == from) return d;
    }
    throw Error(Errc::malformed_snapshot, "piecewise pool " + p.id + " lacks a direction");
  }
  static const DirectedSegments& direction(const Pool& p, const std::string& from) {
    return direction(const_cast<Pool&>(p), from);
  }

  const SwapGraph* g_;
  std::vector<Pool> pools_;
};

using EdgePath = std::vector<Edge>;

struct FlowPlan {
  std::vector<EdgePath> paths;
  std::vector<double> fractions;
};

// Sequential execution of every path's share; nullopt when a pool runs dry.
std::optional<Amount> execute(const SwapGraph& g, const FlowPlan& plan, const Amount& x,
                              FlowState* end_state = nullptr, std::vector<PlanStep>* steps = nullptr) {
  FlowState state(g);
  const auto shares = split_amount(x, plan.fractions);
  Amount total;
  for (std::size_t i = 0; i < plan.paths.size(); ++i) {
    Amount a = shares[i];
    if (a.is_zero()) continue;
    for (std::size_t h = 0; h < plan.paths[i].size(); ++h) {
      const Edge& e = plan.paths[i][h];
      const auto out = state.swap(e, a);
      if (!out) return std::nullopt;
      if (steps != nullptr) steps->push_back(PlanStep{i, h, 0, 0, e.pool, e.from, e.to, a, *out});
      a = *out;
    }
    total += a;
  }
  if (end_state != nullptr) *end_state = std::move(state);
  return total;
}

// Best spot-rate product path at the given state: breadth-first with a
// per-token best rate, simple and pool-distinct.
std::optional<EdgePath> best_marginal_path(const SwapGraph& g, const FlowState& state,
                                           TokenIndex s, TokenIndex t, int max_hops) {
  struct Node {
    TokenIndex token;
    double rate;
    std::int32_t parent;
    const Edge* via;
    int hops;
  };
  std::vector<Node> nodes{{s, 1.0, -1, nullptr, 0}};
  std::vector<double> best(g.universe_size(), 0.0);
  std::int32_t arrival = -1;
  for (std::size_t head = 0; head < nodes.size(); ++head) {
    const Node cur = nodes[head];
    if (cur.token == t) {
      if (arrival < 0 || nodes[arrival].rate < cur.rate) arrival = static_cast<std::int32_t>(head);
      continue;
    }
    if (cur.hops >= max_hops) continue;
    for (EdgeIndex ei : g.out_edges(cur.token)) {
      const Edge& e = g.edge(ei);
      bool clash = false;
      for (std::int32_t i = static_cast<std::int32_t>(head); i >= 0 && !clash; i = nodes[i].parent) {
        clash = nodes[i].token == e.to || (nodes[i].via != nullptr && nodes[i].via->pool == e.pool);
      }
      if (clash) continue;
      const double rate = cur.rate * state.spot(e);
      if (!(rate > best[e.to])) continue;
      best[e.to] = rate;
      nodes.push_back(Node{e.to, rate, static_cast<std::int32_t>(head), &e, cur.hops + 1});
    }
  }
  if (arrival < 0) return std::nullopt;
  EdgePath path;
  for (std::int32_t i = arrival; nodes[i].parent >= 0; i = nodes[i].parent) path.push_back(*nodes[i].via);
  std::reverse(path.begin(), path.end());
  return path;
}

double path_rate(const FlowState& state, const EdgePath& p) {
  double r = 1.0;
  for (const auto& e : p) r *= state.spot(e);
  return r;
}

}  // namespace

RouteSolution prime_flow(const SwapGraph& g, const RouteQuery& q, const FlowParams& params) {
  const RouteSolution first = best_single_path(g, q);
  FlowPlan plan;
  {
    EdgePath p;
    for (const auto& hop : first.paths.front().hops) p.push_back(hop.legs.front().edges.front());
    plan.paths.push_back(std::move(p));
    plan.fractions = {1.0};
  }
  const Amount& x = q.amount;
  Amount current = first.total_output;
  int evaluations = 0;
  int augmentations = 0;

  auto value = [&](const FlowPlan& candidate) -> std::optional<Amount> {
    ++evaluations;
    return execute(g, candidate, x);
  };

  while (augmentations < params.max_augmentations) {
    FlowState state(g);
    if (!execute(g, plan, x, &state)) break;
    const auto cand = best_marginal_path(g, state, q.source, q.target, q.max_hops);
    if (!cand) break;

    // Marginal value of one more unit through the current flow.
    const Amount bump = std::max(Amount(1), Amount::from_double_floor(x.to_double() * 1e-6));
    const auto bumped = execute(g, plan, x + bump);
    if (!bumped) break;
    const double flow_marginal = (*bumped - current).to_double() / bump.to_double();
    if (!(path_rate(state, *cand) > flow_marginal * (1.0 + params.eps_rel))) break;

    FlowPlan next = plan;
    next.paths.push_back(*cand);
    next.fractions.push_back(0.0);
    auto at = [&](double lambda) {
      FlowPlan trial = next;
      for (std::size_t i = 0; i + 1 < trial.fractions.size(); ++i) trial.fractions[i] *= 1.0 - lambda;
      trial.fractions.back() = lambda;
      return trial;
    };
    auto score = [&](double lambda) {
      const auto v = value(at(lambda));
      return v ? v->to_long_double() : -1.0L;
    };
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < params.ternary_iterations && hi - lo > params.ternary_width; ++it) {
      const double m1 = lo + (hi - lo) / 3.0;
      const double m2 = hi - (hi - lo) / 3.0;
      if (score(m1) < score(m2)) {
        lo = m1;
      } else {
        hi = m2;
      }
    }
    const double lambda = 0.5 * (lo + hi);
    const FlowPlan trial = at(lambda);
    const auto v = value(trial);
    if (!v || !(*v > current)) break;
    plan = trial;
    current = *v;
    ++augmentations;
  }

  RouteSolution sol;
  sol.algorithm = "flow";
  sol.source = q.source;
  sol.target = q.target;
  sol.amount_in = x;
  std::set<PoolIndex> pools;
  std::size_t pool_uses = 0;
  for (const auto& p : plan.paths) {
    MultiEdgePath mp;
    for (const auto& e : p) {
      mp.hops.push_back(Hop{e.from, e.to, {make_leg(e)}, {1.0}});
      pools.insert(e.pool);
      ++pool_uses;
    }
    sol.paths.push_back(std::move(mp));
    sol.allocation.edge_weights.emplace_back(p.size(), std::vector<double>{1.0});
  }
  sol.allocation.path_weights = plan.fractions;
  sol.total_output = *execute(g, plan, x, nullptr, &sol.plan);
  sol.disjoint = pools.size() == pool_uses;
  sol.tau = 0.0;
  sol.stats.queue_pushes = first.stats.queue_pushes;
  sol.stats.stage1_iterations = augmentations + 1;
  sol.stats.total_iterations = evaluations;
  sol.stats.objective_evaluations = static_cast<std::size_t>(evaluations);
  return sol;
}

void GridSpec::validate() const {
  if (!(step > 0.0 && step <= 0.1)) throw Error(Errc::invalid_params, "grid step must be in (0, 0.1]");
  const double units = 1.0 / step;
  if (std::abs(units - std::round(units)) > 1e-9 * units) {
    throw Error(Errc::invalid_params, "grid step must divide 1 evenly");
  }
  if (max_paths < 1 || max_paths > 4) throw Error(Errc::invalid_params, "max_paths must be in [1, 4]");
}

namespace {

using Table = std::vector<std::optional<Amount>>;

// Max-plus combination of per-part tables over exactly n units, returning
// the lexicographically smallest maximiser.
std::optional<std::pair<Amount, std::vector<std::size_t>>> lattice_argmax(
    const std::vector<Table>& tables, std::size_t n) {
  const std::size_t parts = tables.size();
  // suffix[i][r]: best value of parts i.. using exactly r units.
  std::vector<Table> suffix(parts + 1, Table(n + 1));
  suffix[parts][0] = Amount{};
  for (std::size_t i = parts; i-- > 0;) {
    if (i + 1 == parts) {
      suffix[i] = tables[i];
      continue;
    }
    // The first part is only ever combined with the full budget.
    for (std::size_t r = i == 0 ? n : 0; r <= n; ++r) {
      std::optional<Amount> best;
      for (std::size_t k = 0; k <= r; ++k) {
        if (!tables[i][k] || !suffix[i + 1][r - k]) continue;
        const Amount v = *tables[i][k] + *suffix[i + 1][r - k];
        if (!best || *best < v) best = v;
      }
      suffix[i][r] = best;
    }
  }
  if (!suffix[0][n]) return std::nullopt;
  std::vector<std::size_t> units(parts);
  std::size_t left = n;
  for (std::size_t i = 0; i < parts; ++i) {
    for (std::size_t k = 0; k <= left; ++k) {
      if (!tables[i][k] || !suffix[i + 1][left - k]) continue;
      if (*tables[i][k] + *suffix[i + 1][left - k] == *suffix[i][left]) {
        units[i] = k;
        break;
      }
    }
    left -= units[i];
  }
  return std::make_pair(*suffix[0][n], std::move(units));
}

Amount lattice_share(const Amount& a, std::size_t k, std::size_t n) {
  return Amount::from_wide(a.wide() * k / n);
}

struct HopChoice {
  std::optional<Amount> out;
  std::vector<std::size_t> units;
};

HopChoice best_hop(const Hop& hop, const Amount& in, std::size_t n) {
  if (hop.legs.size() == 1) return {try_leg_out(hop.legs.front(), in), {n}};
  std::vector<Table> tables(hop.legs.size(), Table(n + 1));
  for (std::size_t e = 0; e < hop.legs.size(); ++e) {
    for (std::size_t j = 0; j <= n; ++j) tables[e][j] = try_leg_out(hop.legs[e], lattice_share(in, j, n));
  }
  auto best = lattice_argmax(tables, n);
  if (!best) return {};
  return {best->first, std::move(best->second)};
}

}  // namespace

GridResult grid_oracle(std::span<const MultiEdgePath> paths, const Amount& x, const GridSpec& spec) {
  spec.validate();
  if (paths.empty()) throw Error(Errc::invalid_params, "grid oracle needs at least one path");
  if (paths.size() > static_cast<std::size_t>(spec.max_paths)) {
    throw Error(Errc::too_many_paths, "grid oracle is limited to " + std::to_string(spec.max_paths) +
                                          " paths");
  }
  const auto n = static_cast<std::size_t>(std::llround(1.0 / spec.step));
  std::vector<Table> tables(paths.size(), Table(n + 1));
  // choices[p][k][hop]: leg units chosen for that hop when path p gets k units.
  std::vector<std::vector<std::vector<std::vector<std::size_t>>>> choices(
      paths.size(), std::vector<std::vector<std::vector<std::size_t>>>(n + 1));
  for (std::size_t p = 0; p < paths.size(); ++p) {
    for (std::size_t k = 0; k <= n; ++k) {
      std::optional<Amount> a = lattice_share(x, k, n);
      for (const auto& hop : paths[p].hops) {
        if (!a) break;
        auto c = best_hop(hop, *a, n);
        a = c.out;
        choices[p][k].push_back(std::move(c.units));
      }
      tables[p][k] = a;
    }
  }
  auto best = lattice_argmax(tables, n);
  if (!best) throw Error(Errc::capacity_exceeded, "no grid allocation is feasible");

  GridResult res;
  res.units = best->second;
  const double dn = static_cast<double>(n);
  for (std::size_t p = 0; p < paths.size(); ++p) {
    res.allocation.path_weights.push_back(static_cast<double>(res.units[p]) / dn);
    HopWeights hw;
    const auto& chosen = choices[p][res.units[p]];
    for (std::size_t h = 0; h < paths[p].hops.size(); ++h) {
      std::vector<double> w;
      if (h < chosen.size() && chosen[h].size() == paths[p].hops[h].legs.size()) {
        for (std::size_t u : chosen[h]) w.push_back(static_cast<double>(u) / dn);
      } else {
        w.assign(paths[p].hops[h].legs.size(), 0.0);
        w[0] = 1.0;
      }
      hw.push_back(std::move(w));
    }
    res.allocation.edge_weights.push_back(std::move(hw));
  }
  res.objective = objective(paths, res.allocation, x);
  return res;
}

}  // namespace prime
