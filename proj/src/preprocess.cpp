#include "prime/preprocess.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "prime/error.hpp"

namespace prime {

bool HubSet::contains(TokenIndex t) const {
  return std::binary_search(hubs.begin(), hubs.end(), t);
}

namespace {

// Numeraire units reachable by selling into `pool` from any side.
long double numeraire_held(const SwapGraph& g, PoolIndex pool, TokenIndex numeraire) {
  const Pool& p = g.registry().pools[pool];
  const std::string& nid = g.token_id(numeraire);
  if (p.kind == SwapKind::constant_product) {
    for (std::size_t i = 0; i < p.tokens.size(); ++i) {
      if (p.tokens[i] == nid) return p.reserves[i].to_long_double();
    }
    return 0.0L;
  }
  for (const auto& d : p.directions) {
    if (d.token_out != nid) continue;
    long double sum = 0.0L;
    for (const auto& s : d.segments) sum += s.virtual_reserve_out.to_long_double();
    return sum;
  }
  return 0.0L;
}

HubSet top_k(const std::vector<TokenIndex>& tokens, const std::vector<long double>& score, int k,
             HubMetric metric) {
  std::vector<TokenIndex> order = tokens;
  std::stable_sort(order.begin(), order.end(),
                   [&](TokenIndex a, TokenIndex b) { return score[a] > score[b]; });
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
  HubSet hs;
  hs.hubs.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
  std::sort(hs.hubs.begin(), hs.hubs.end());
  hs.metric = metric;
  hs.k = k;
  return hs;
}

}  // namespace

HubSet select_hubs(const SwapGraph& g, int k, HubMetric metric,
                   std::optional<TokenIndex> numeraire) {
  if (k < 1) throw Error(Errc::invalid_params, "hub count must be at least 1");
  const auto tokens = g.tokens();  // ascending index, which is id order
  std::vector<long double> degree(g.universe_size(), 0.0L);
  for (TokenIndex t : tokens) degree[t] = static_cast<long double>(g.incident_pools(t).size());
  if (metric == HubMetric::degree) return top_k(tokens, degree, k, metric);

  if (!numeraire) {
    if (tokens.empty()) return HubSet{{}, metric, k};
    numeraire = top_k(tokens, degree, 1, HubMetric::degree).hubs.front();
  }
  std::vector<long double> mass(g.universe_size(), 0.0L);
  for (TokenIndex t : tokens) {
    for (PoolIndex p : g.incident_pools(t)) mass[t] += numeraire_held(g, p, *numeraire);
  }
  return top_k(tokens, mass, k, metric);
}

HubSet hubs_from_ids(const SwapGraph& g, const std::vector<std::string>& ids) {
  HubSet hs;
  for (const auto& id : ids) hs.hubs.push_back(g.require_token(id));
  std::sort(hs.hubs.begin(), hs.hubs.end());
  hs.hubs.erase(std::unique(hs.hubs.begin(), hs.hubs.end()), hs.hubs.end());
  hs.k = static_cast<int>(hs.hubs.size());
  return hs;
}

SwapGraph induce_core_graph(const SwapGraph& g, const HubSet& hubs, TokenIndex source,
                            TokenIndex target) {
  if (!g.contains(source) || !g.contains(target)) {
    throw Error(Errc::unknown_token, "query tokens must belong to the graph");
  }
  std::vector<bool> keep(g.universe_size(), false);
  for (TokenIndex h : hubs.hubs) {
    if (h < keep.size()) keep[h] = true;
  }
  keep[source] = true;
  keep[target] = true;
  return g.induced(keep);
}

std::vector<PoolIndex> Shortcut::pools() const {
  std::vector<PoolIndex> out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.push_back(e.pool);
  return out;
}

bool shortcut_rank_less(const Shortcut& a, const Shortcut& b) {
  if (a.spot_rate != b.spot_rate) return a.spot_rate > b.spot_rate;
  const std::size_t n = std::min(a.edges.size(), b.edges.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a.edges[i].pool != b.edges[i].pool) return a.edges[i].pool < b.edges[i].pool;
    if (a.edges[i].to != b.edges[i].to) return a.edges[i].to < b.edges[i].to;
  }
  return a.edges.size() < b.edges.size();
}

ShortcutIndex::ShortcutIndex(ShortcutConfig cfg, std::vector<TokenIndex> hubs,
                             std::map<Key, std::vector<Shortcut>> entries)
    : cfg_(cfg), hubs_(std::move(hubs)), entries_(std::move(entries)) {
  for (const auto& [key, list] : entries_) {
    if (list.size() > static_cast<std::size_t>(cfg_.per_pair)) {
      throw Error(Errc::invalid_params, "shortcut list exceeds the per-pair limit");
    }
    for (const auto& sc : list) {
      for (std::size_t i = 0; i + 1 < sc.edges.size(); ++i) {
        if (std::binary_search(hubs_.begin(), hubs_.end(), sc.edges[i].to)) {
          throw Error(Errc::invalid_params, "shortcut passes through a hub");
        }
      }
    }
  }
}

const std::vector<Shortcut>& ShortcutIndex::lookup(TokenIndex hub_in, TokenIndex hub_out) const {
  static const std::vector<Shortcut> empty;
  const auto it = entries_.find({hub_in, hub_out});
  return it == entries_.end() ? empty : it->second;
}

std::size_t ShortcutIndex::size() const noexcept {
  std::size_t n = 0;
  for (const auto& [key, list] : entries_) n += list.size();
  return n;
}

namespace {

struct ShortcutSearch {
  const SwapGraph& g;
  const HubSet& hubs;
  const ShortcutConfig& cfg;
  std::map<ShortcutIndex::Key, std::vector<Shortcut>>& out;
  std::vector<Edge> chain;

  void keep_top(Shortcut sc) {
    auto& list = out[{sc.hub_in, sc.hub_out}];
    const auto pos = std::upper_bound(list.begin(), list.end(), sc, shortcut_rank_less);
    if (pos - list.begin() >= cfg.per_pair) return;
    list.insert(pos, std::move(sc));
    if (list.size() > static_cast<std::size_t>(cfg.per_pair)) list.pop_back();
  }

  bool visited(TokenIndex t, PoolIndex pool) const {
    for (const auto& e : chain) {
      if (e.from == t || e.to == t || e.pool == pool) return true;
    }
    return false;
  }

  void extend(TokenIndex u, double rate) {
    const int intermediates = static_cast<int>(chain.size());
    for (EdgeIndex ei : g.out_edges(u)) {
      const Edge& e = g.edge(ei);
      if (visited(e.to, e.pool)) continue;
      const double next = rate * spot_price(e.fn);
      if (hubs.contains(e.to)) {
        chain.push_back(e);
        keep_top(Shortcut{chain.front().from, e.to, chain, next});
        chain.pop_back();
      } else if (intermediates < cfg.max_intermediates) {
        chain.push_back(e);
        extend(e.to, next);
        chain.pop_back();
      }
    }
  }
};

}  // namespace

ShortcutIndex build_shortcut_index(const SwapGraph& g, const HubSet& hubs,
                                   const ShortcutConfig& cfg) {
  if (cfg.max_intermediates < 1 || cfg.per_pair < 1) {
    throw Error(Errc::invalid_params, "shortcut depth and width must be at least 1");
  }
  std::map<ShortcutIndex::Key, std::vector<Shortcut>> entries;
  ShortcutSearch search{g, hubs, cfg, entries, {}};
  for (TokenIndex h : hubs.hubs) {
    if (!g.contains(h)) continue;
    // The first edge must leave the hub towards a non-hub token.
    for (EdgeIndex ei : g.out_edges(h)) {
      const Edge& e = g.edge(ei);
      if (hubs.contains(e.to)) continue;
      search.chain.assign(1, e);
      search.extend(e.to, spot_price(e.fn));
    }
  }
  for (auto it = entries.begin(); it != entries.end();) {
    it = it->second.empty() ? entries.erase(it) : std::next(it);
  }
  return ShortcutIndex(cfg, hubs.hubs, std::move(entries));
}

RoutingGraph build_overlay(const SwapGraph& core, const ShortcutIndex* index) {
  RoutingGraph rg(core);
  if (index == nullptr) return rg;
  for (const auto& [key, list] : index->entries()) {
    if (!core.contains(key.first) || !core.contains(key.second)) continue;
    for (const auto& sc : list) rg.add_leg(sc.leg());
  }
  return rg;
}

namespace {

constexpr int kIndexFormatVersion = 1;

}  // namespace

void save_shortcut_index(const ShortcutIndex& index, const SwapGraph& g,
                         const std::string& snapshot_hash, const std::string& path) {
  nlohmann::json doc;
  doc["version"] = kIndexFormatVersion;
  doc["snapshot_hash"] = snapshot_hash;
  doc["max_intermediates"] = index.config().max_intermediates;
  doc["per_pair"] = index.config().per_pair;
  auto& hubs = doc["hubs"] = nlohmann::json::array();
  for (TokenIndex h : index.hubs()) hubs.push_back(g.token_id(h));
  auto& list = doc["shortcuts"] = nlohmann::json::array();
  for (const auto& [key, scs] : index.entries()) {
    for (const auto& sc : scs) {
      nlohmann::json steps = nlohmann::json::array();
      for (const auto& e : sc.edges) {
        steps.push_back({{"pool", g.pool_id(e.pool)},
                         {"token_in", g.token_id(e.from)},
                         {"token_out", g.token_id(e.to)}});
      }
      list.push_back({{"hub_in", g.token_id(sc.hub_in)},
                      {"hub_out", g.token_id(sc.hub_out)},
                      {"steps", std::move(steps)}});
    }
  }
  std::ofstream os(path);
  if (!os) throw Error(Errc::invalid_params, "cannot write shortcut index to " + path);
  os << doc.dump(1) << '\n';
}

std::optional<ShortcutIndex> load_shortcut_index(const SwapGraph& g,
                                                 const std::string& snapshot_hash,
                                                 const ShortcutConfig& cfg,
                                                 const std::string& path) {
  std::ifstream is(path);
  if (!is) return std::nullopt;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, "shortcut index " + path + ": " + e.what());
  }
  try {
    if (doc.at("version").get<int>() != kIndexFormatVersion) return std::nullopt;
    if (doc.at("snapshot_hash").get<std::string>() != snapshot_hash) return std::nullopt;
    if (doc.at("max_intermediates").get<int>() != cfg.max_intermediates ||
        doc.at("per_pair").get<int>() != cfg.per_pair) {
      return std::nullopt;
    }
    std::vector<TokenIndex> hubs;
    for (const auto& h : doc.at("hubs")) hubs.push_back(g.require_token(h.get<std::string>()));
    std::sort(hubs.begin(), hubs.end());
    std::map<ShortcutIndex::Key, std::vector<Shortcut>> entries;
    for (const auto& item : doc.at("shortcuts")) {
      Shortcut sc;
      sc.hub_in = g.require_token(item.at("hub_in").get<std::string>());
      sc.hub_out = g.require_token(item.at("hub_out").get<std::string>());
      sc.spot_rate = 1.0;
      for (const auto& step : item.at("steps")) {
        const auto pool = g.registry().find_pool(step.at("pool").get<std::string>());
        const TokenIndex from = g.require_token(step.at("token_in").get<std::string>());
        const TokenIndex to = g.require_token(step.at("token_out").get<std::string>());
        const auto ei = pool ? g.find_edge(*pool, from, to) : std::nullopt;
        if (!ei) throw Error(Errc::parse_error, "shortcut index references a missing edge");
        sc.edges.push_back(g.edge(*ei));
        sc.spot_rate *= spot_price(sc.edges.back().fn);
      }
      entries[{sc.hub_in, sc.hub_out}].push_back(std::move(sc));
    }
    for (auto& [key, list] : entries) std::sort(list.begin(), list.end(), shortcut_rank_less);
    return ShortcutIndex(cfg, std::move(hubs), std::move(entries));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, "shortcut index " + path + ": " + e.what());
  }
}

}  // namespace prime
