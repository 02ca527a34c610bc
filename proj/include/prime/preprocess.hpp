#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "prime/routing_graph.hpp"

namespace prime {

enum class HubMetric { degree, reserve_mass };

struct HubSet {
  std::vector<TokenIndex> hubs;  // ascending token index (= id order)
  HubMetric metric = HubMetric::degree;
  int k = 0;

  bool contains(TokenIndex t) const;
};

// Top-K tokens by incident pool count, or by the amount of `numeraire` held
// in pools touching the token. Ties go to the smaller token id. Without an
// explicit numeraire the highest-degree token is used.
HubSet select_hubs(const SwapGraph& g, int k, HubMetric metric = HubMetric::degree,
                   std::optional<TokenIndex> numeraire = std::nullopt);

// Pinned hub list; throws unknown_token for ids missing from g.
HubSet hubs_from_ids(const SwapGraph& g, const std::vector<std::string>& ids);

// Subgraph on hubs plus source and target.
SwapGraph induce_core_graph(const SwapGraph& g, const HubSet& hubs, TokenIndex source,
                            TokenIndex target);

struct Shortcut {
  TokenIndex hub_in = 0;
  TokenIndex hub_out = 0;
  std::vector<Edge> edges;
  double spot_rate = 0.0;

  Leg leg() const { return make_leg(edges); }
  std::vector<PoolIndex> pools() const;
};

struct ShortcutConfig {
  int max_intermediates = 2;
  int per_pair = 3;
};

// Best hub-to-hub routes through non-hub tokens, S per ordered pair.
class ShortcutIndex {
 public:
  using Key = std::pair<TokenIndex, TokenIndex>;

  ShortcutIndex() = default;
  ShortcutIndex(ShortcutConfig cfg, std::vector<TokenIndex> hubs,
                std::map<Key, std::vector<Shortcut>> entries);

  const std::vector<Shortcut>& lookup(TokenIndex hub_in, TokenIndex hub_out) const;
  const std::map<Key, std::vector<Shortcut>>& entries() const noexcept { return entries_; }
  const std::vector<TokenIndex>& hubs() const noexcept { return hubs_; }
  const ShortcutConfig& config() const noexcept { return cfg_; }
  std::size_t size() const noexcept;

 private:
  ShortcutConfig cfg_;
  std::vector<TokenIndex> hubs_;
  std::map<Key, std::vector<Shortcut>> entries_;
};

ShortcutIndex build_shortcut_index(const SwapGraph& g, const HubSet& hubs,
                                   const ShortcutConfig& cfg = {});

// Orders shortcuts by descending spot rate, then by pool-id sequence.
bool shortcut_rank_less(const Shortcut& a, const Shortcut& b);

// Core graph edges plus every indexed shortcut whose endpoints lie in the
// core, as single-hop composite legs. `core` must outlive the result.
RoutingGraph build_overlay(const SwapGraph& core, const ShortcutIndex* index);

// JSON sidecar keyed by the snapshot hash. load returns nullopt when the
// file is absent or was built for a different snapshot or config.
void save_shortcut_index(const ShortcutIndex& index, const SwapGraph& g,
                         const std::string& snapshot_hash, const std::string& path);
std::optional<ShortcutIndex> load_shortcut_index(const SwapGraph& g,
                                                 const std::string& snapshot_hash,
                                                 const ShortcutConfig& cfg,
                                                 const std::string& path);

}  // namespace prime
