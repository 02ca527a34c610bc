#include "prime/engine.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

#include "prime/error.hpp"
#include "prime/path_discovery.hpp"

namespace prime {

void RouteQuery::validate() const {
  if (source == target) throw Error(Errc::invalid_params, "source and target must differ");
  if (amount.is_zero()) throw Error(Errc::invalid_params, "amount must be positive");
  if (max_hops < 1) throw Error(Errc::invalid_params, "max_hops must be at least 1");
  if (hubs.pinned.empty() && hubs.k < 1) throw Error(Errc::invalid_params, "hub count must be >= 1");
  if (expand_per_hop < 0) throw Error(Errc::invalid_params, "expand_per_hop must be >= 0");
  if (!(stage1_tolerance_factor >= 1.0) || !(asgm.eps_rel * stage1_tolerance_factor < 1.0)) {
    throw Error(Errc::invalid_params, "stage1_tolerance_factor must be >= 1 and keep eps below 1");
  }
  asgm.validate();
}

Preprocessed preprocess(const SwapGraph& g, const HubConfig& hubs, const ShortcutConfig& sc,
                        bool build_index) {
  Preprocessed out;
  if (!hubs.pinned.empty()) {
    out.hubs = hubs_from_ids(g, hubs.pinned);
  } else {
    std::optional<TokenIndex> numeraire;
    if (hubs.numeraire) numeraire = g.require_token(*hubs.numeraire);
    out.hubs = select_hubs(g, hubs.k, hubs.metric, numeraire);
  }
  if (build_index) out.index = build_shortcut_index(g, out.hubs, sc);
  return out;
}

namespace {

void mark_pools(std::vector<bool>& mask, const std::vector<PoolIndex>& pools) {
  for (PoolIndex p : pools) {
    if (p >= mask.size()) mask.resize(p + 1, false);
    mask[p] = true;
  }
}

bool any_used(const std::vector<bool>& mask, const std::vector<PoolIndex>& pools) {
  for (PoolIndex p : pools) {
    if (p < mask.size() && mask[p]) return true;
  }
  return false;
}

void sort_hop(Hop& hop) {
  std::vector<std::size_t> order(hop.legs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return leg_order(hop.legs[a], hop.legs[b]);
  });
  Hop sorted{hop.from, hop.to, {}, {}};
  for (std::size_t i : order) {
    sorted.legs.push_back(std::move(hop.legs[i]));
    sorted.weights.push_back(hop.weights[i]);
  }
  hop = std::move(sorted);
}

bool same_leg(const Leg& a, const Leg& b) {
  if (a.edges.size() != b.edges.size()) return false;
  for (std::size_t i = 0; i < a.edges.size(); ++i) {
    if (a.edges[i].pool != b.edges[i].pool || a.edges[i].to != b.edges[i].to) return false;
  }
  return true;
}

// Allocation that routes everything along `single`, expressed over the
// merged path set.
std::optional<Allocation> pure_single(const std::vector<MultiEdgePath>& paths,
                                      const SinglePath& single) {
  const auto seq = single.token_sequence();
  for (std::size_t p = 0; p < paths.size(); ++p) {
    if (paths[p].token_sequence() != seq) continue;
    Allocation a;
    a.path_weights.assign(paths.size(), 0.0);
    a.path_weights[p] = 1.0;
    a.edge_weights.resize(paths.size());
    for (std::size_t q = 0; q < paths.size(); ++q) {
      for (const auto& hop : paths[q].hops) {
        std::vector<double> w(hop.legs.size(), 0.0);
        w[0] = 1.0;
        a.edge_weights[q].push_back(std::move(w));
      }
    }
    for (std::size_t h = 0; h < paths[p].hops.size(); ++h) {
      const auto& legs = paths[p].hops[h].legs;
      auto& w = a.edge_weights[p][h];
      std::fill(w.begin(), w.end(), 0.0);
      bool found = false;
      for (std::size_t k = 0; k < legs.size(); ++k) {
        if (same_leg(legs[k], single.legs[h])) {
          w[k] = 1.0;
          found = true;
        }
      }
      if (!found) return std::nullopt;
    }
    return a;
  }
  return std::nullopt;
}

}  // namespace

std::vector<MultiEdgePath> merge_and_expand(const std::vector<SinglePath>& paths,
                                            const std::vector<double>& path_weights,
                                            const SwapGraph& g, const ShortcutIndex* index,
                                            std::vector<bool>& used_pools, int expand_per_hop) {
  for (const auto& p : paths) mark_pools(used_pools, p.pools());

  std::vector<MultiEdgePath> merged;
  std::vector<std::vector<TokenIndex>> sequences;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto seq = paths[i].token_sequence();
    const double w = i < path_weights.size() ? path_weights[i] : 1.0;
    const auto it = std::find(sequences.begin(), sequences.end(), seq);
    if (it == sequences.end()) {
      sequences.push_back(seq);
      MultiEdgePath mp;
      for (const auto& leg : paths[i].legs) mp.hops.push_back(Hop{leg.from, leg.to, {leg}, {w}});
      merged.push_back(std::move(mp));
      continue;
    }
    auto& mp = merged[static_cast<std::size_t>(it - sequences.begin())];
    for (std::size_t h = 0; h < paths[i].legs.size(); ++h) {
      mp.hops[h].legs.push_back(paths[i].legs[h]);
      mp.hops[h].weights.push_back(w);
    }
  }

  for (auto& mp : merged) {
    for (auto& hop : mp.hops) {
      double sum = std::accumulate(hop.weights.begin(), hop.weights.end(), 0.0);
      for (auto& w : hop.weights) w = sum > 0.0 ? w / sum : 1.0 / static_cast<double>(hop.weights.size());

      double best_spot = 0.0;
      for (const auto& l : hop.legs) best_spot = std::max(best_spot, leg_spot(l));

      std::vector<std::pair<double, EdgeIndex>> candidates;
      for (EdgeIndex e : g.edges_between(hop.from, hop.to)) {
        const Edge& edge = g.edge(e);
        if (edge.pool < used_pools.size() && used_pools[edge.pool]) continue;
        candidates.emplace_back(spot_price(edge.fn), e);
      }
      std::stable_sort(candidates.begin(), candidates.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      const std::size_t take = std::min(candidates.size(), static_cast<std::size_t>(expand_per_hop));
      for (std::size_t k = 0; k < take; ++k) {
        const Edge& edge = g.edge(candidates[k].second);
        mark_pools(used_pools, {edge.pool});
        best_spot = std::max(best_spot, candidates[k].first);
        hop.legs.push_back(make_leg(edge));
        hop.weights.push_back(0.0);
      }

      if (index != nullptr) {
        for (const auto& sc : index->lookup(hop.from, hop.to)) {
          if (!(sc.spot_rate > best_spot)) break;  // ranked by spot rate
          const auto pools = sc.pools();
          if (any_used(used_pools, pools)) continue;
          mark_pools(used_pools, pools);
          hop.legs.push_back(sc.leg());
          hop.weights.push_back(0.0);
        }
      }
      sort_hop(hop);
    }
  }
  return merged;
}

std::vector<PlanStep> build_execution_plan(const std::vector<MultiEdgePath>& paths,
                                           const Allocation& alloc, const Amount& x,
                                           Amount* total_output) {
  std::vector<PlanStep> plan;
  Amount total;
  const auto shares = split_amount(x, alloc.path_weights);
  for (std::size_t p = 0; p < paths.size(); ++p) {
    Amount a = shares[p];
    if (a.is_zero()) continue;
    for (std::size_t h = 0; h < paths[p].hops.size(); ++h) {
      const Hop& hop = paths[p].hops[h];
      const auto leg_shares = split_amount(a, alloc.edge_weights[p][h]);
      Amount hop_out;
      for (std::size_t k = 0; k < hop.legs.size(); ++k) {
        Amount in = leg_shares[k];
        if (in.is_zero()) continue;
        const auto& edges = hop.legs[k].edges;
        for (std::size_t s = 0; s < edges.size(); ++s) {
          const Amount out = swap_out(edges[s].fn, in);
          plan.push_back(PlanStep{p, h, k, s, edges[s].pool, edges[s].from, edges[s].to, in, out});
          in = out;
        }
        hop_out += in;
      }
      a = hop_out;
    }
    total += a;
  }
  if (total_output != nullptr) *total_output = total;
  return plan;
}

RouteSolution prime(const SwapGraph& g, const RouteQuery& q, const Preprocessed* cached) {
  q.validate();
  if (!g.contains(q.source) || !g.contains(q.target)) {
    throw Error(Errc::unknown_token, "query tokens must belong to the graph");
  }
  Preprocessed local;
  const Preprocessed* pre = cached;
  if (pre == nullptr) {
    local = preprocess(g, q.hubs, q.shortcuts, q.use_shortcuts);
    pre = &local;
  }
  using clock = std::chrono::steady_clock;
  const auto ms_since = [](clock::time_point t) {
    return std::chrono::duration<double, std::milli>(clock::now() - t).count();
  };
  auto t0 = clock::now();
  const ShortcutIndex* index = q.use_shortcuts ? &pre->index : nullptr;
  const SwapGraph core = induce_core_graph(g, pre->hubs, q.source, q.target);
  const RoutingGraph overlay = build_overlay(core, index);

  RouteSolution sol;
  sol.algorithm = "prime";
  sol.source = q.source;
  sol.target = q.target;
  sol.amount_in = q.amount;
  RouteStats& st = sol.stats;
  st.core_tokens = core.token_count();
  st.core_edges = core.edge_count();
  st.shortcut_legs = overlay.shortcut_count();
  st.setup_ms = ms_since(t0);
  t0 = clock::now();

  // Stage 1: discover paths against the rising threshold.
  std::vector<bool> mask(g.registry().pools.size(), false);
  std::vector<SinglePath> singles;
  std::vector<double> weights;
  double tau = 0.0;
  AsgmParams stage1 = q.asgm;
  stage1.eps_rel *= q.stage1_tolerance_factor;
  for (;;) {
    SearchStats search;
    auto cand = find_path(overlay, q.source, q.target, q.amount, tau, q.max_hops, &mask, &search);
    st.queue_pushes += search.queue_pushes;
    if (!cand) break;
    if (!singles.empty() && cand->marginal_rate_at_zero <= tau) break;
    mark_pools(mask, cand->pools());
    singles.push_back(std::move(*cand));

    std::vector<MultiEdgePath> multis;
    for (const auto& s : singles) multis.push_back(MultiEdgePath::from_single(s));
    // Warm start: the new path enters at zero weight.
    std::vector<double> start = weights;
    start.push_back(0.0);
    const AsgmResult r = asgm(multis, q.amount, stage1, start);
    tau = r.tau;
    weights = r.allocation.path_weights;
    st.tau_history.push_back(r.tau);
    st.objective_history.push_back(r.objective);
    st.total_iterations += r.iterations;
    st.objective_evaluations += r.objective_evaluations;
    st.degraded = st.degraded || r.degraded;
    ++st.stage1_iterations;
  }
  if (singles.empty()) {
    throw Error(Errc::no_route, "no route from " + g.token_id(q.source) + " to " +
                                    g.token_id(q.target));
  }

  st.stage1_ms = ms_since(t0);
  t0 = clock::now();

  // Stage 2: merge, expand and optimise over the final path set.
  sol.paths = merge_and_expand(singles, weights, core, index, mask, q.expand_per_hop);
  std::vector<double> merged_weights;
  {
    std::vector<std::vector<TokenIndex>> sequences;
    for (std::size_t i = 0; i < singles.size(); ++i) {
      const auto seq = singles[i].token_sequence();
      const auto it = std::find(sequences.begin(), sequences.end(), seq);
      if (it == sequences.end()) {
        sequences.push_back(seq);
        merged_weights.push_back(weights[i]);
      } else {
        merged_weights[static_cast<std::size_t>(it - sequences.begin())] += weights[i];
      }
    }
  }
  const AsgmResult fin = asgm(sol.paths, q.amount, q.asgm, merged_weights);
  sol.allocation = fin.allocation;
  sol.tau = fin.tau;
  sol.trace = fin.trace;
  st.asgm_iterations = fin.iterations;
  st.total_iterations += fin.iterations;
  st.objective_evaluations += fin.objective_evaluations;
  st.degraded = st.degraded || fin.degraded;

  // The first Stage-1 path alone is always available; never return less.
  if (fin.objective < singles.front().probe_output) {
    if (auto pure = pure_single(sol.paths, singles.front())) {
      sol.allocation = std::move(*pure);
      st.single_path_fallback = true;
    }
  }
  sol.plan = build_execution_plan(sol.paths, sol.allocation, q.amount, &sol.total_output);
  st.stage2_ms = ms_since(t0);
  return sol;
}

AuditReport verify_solution(const RouteSolution& sol, const SwapGraph& g) {
  AuditReport report;
  auto& v = report.violations;
  const auto pool_name = [&](PoolIndex p) {
    return p < g.registry().pools.size() ? g.pool_id(p) : std::to_string(p);
  };

  std::set<PoolIndex> seen;
  std::set<PoolIndex> reported;
  for (const auto& s : sol.plan) {
    if (!seen.insert(s.pool).second && reported.insert(s.pool).second) {
      v.push_back("pool " + pool_name(s.pool) + " is used more than once");
    }
  }

  using LegKey = std::tuple<std::size_t, std::size_t, std::size_t>;
  std::map<LegKey, std::vector<const PlanStep*>> legs;
  for (const auto& s : sol.plan) legs[{s.path, s.hop, s.leg}].push_back(&s);

  // path -> hop -> (input, re-simulated output)
  std::map<std::size_t, std::map<std::size_t, std::pair<Amount, Amount>>> hops;
  for (auto& [key, steps] : legs) {
    std::sort(steps.begin(), steps.end(),
              [](const PlanStep* a, const PlanStep* b) { return a->step < b->step; });
    const auto [p, h, k] = key;
    const std::string where = "path " + std::to_string(p) + " hop " + std::to_string(h) +
                              " leg " + std::to_string(k);
    Amount carried;
    bool ok = true;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const PlanStep& s = *steps[i];
      if (i > 0 && s.amount_in != carried) {
        v.push_back(where + ": step " + std::to_string(s.step) + " input " +
                    s.amount_in.to_decimal() + " differs from the previous output " +
                    carried.to_decimal());
      }
      const auto ei = g.find_edge(s.pool, s.token_in, s.token_out);
      if (!ei) {
        v.push_back(where + ": pool " + pool_name(s.pool) + " has no such direction");
        ok = false;
        break;
      }
      try {
        carried = swap_out(g.edge(*ei).fn, s.amount_in);
      } catch (const Error& e) {
        v.push_back(where + ": " + e.what());
        ok = false;
        break;
      }
      if (carried != s.min_out) {
        v.push_back(where + ": pool " + pool_name(s.pool) + " returns " + carried.to_decimal() +
                    ", plan expects " + s.min_out.to_decimal());
      }
    }
    if (!ok) continue;
    auto& entry = hops[p][h];
    entry.first += steps.front()->amount_in;
    entry.second += carried;
  }

  Amount total_in;
  Amount total_out;
  for (const auto& [p, per_hop] : hops) {
    const std::size_t last = per_hop.rbegin()->first;
    for (std::size_t h = 0; h <= last; ++h) {
      const auto it = per_hop.find(h);
      const Amount in = it == per_hop.end() ? Amount{} : it->second.first;
      if (h == 0) {
        total_in += in;
      } else {
        const auto prev = per_hop.find(h - 1);
        const Amount produced = prev == per_hop.end() ? Amount{} : prev->second.second;
        if (produced != in) {
          v.push_back("path " + std::to_string(p) + " hop " + std::to_string(h) + " consumes " +
                      in.to_decimal() + " but the previous hop produced " +
                      produced.to_decimal());
        }
      }
    }
    total_out += per_hop.rbegin()->second.second;
  }
  for (const auto& [key, steps] : legs) {
    const auto [p, h, k] = key;
    const auto it = hops.find(p);
    if (it != hops.end() && h == it->second.rbegin()->first && steps.back()->token_out != sol.target) {
      v.push_back("path " + std::to_string(p) + " leg " + std::to_string(k) +
                  " does not deliver the target token");
    }
  }
  for (const auto& s : sol.plan) {
    if (s.hop == 0 && s.step == 0 && s.token_in != sol.source) {
      v.push_back("first hop of path " + std::to_string(s.path) + " does not spend the source token");
    }
  }
  if (total_in != sol.amount_in) {
    v.push_back("plan spends " + total_in.to_decimal() + " of " + sol.amount_in.to_decimal());
  }
  if (total_out != sol.total_output) {
    v.push_back("plan yields " + total_out.to_decimal() + ", solution reports " +
                sol.total_output.to_decimal());
  }
  return report;
}

}  // namespace prime
