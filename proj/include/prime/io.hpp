#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "prime/engine.hpp"

namespace prime {

inline constexpr int kSnapshotVersion = 1;

struct Snapshot {
  int version = kSnapshotVersion;
  std::string block_ref;
  std::vector<Token> tokens;
  std::vector<Pool> pools;
};

// Throws parse_error (with the offending field) or version_unsupported.
Snapshot parse_snapshot(std::string_view json);
Snapshot load_snapshot(const std::string& path);

// Canonical form: sorted keys, tokens and pools sorted by id, every amount
// a decimal string, plus a "hash" field over the rest of the document.
std::string dump_snapshot(const Snapshot& s);
void save_snapshot(const Snapshot& s, const std::string& path);

// FNV-1a 64 of the canonical document without its hash field, as 16 hex
// digits.
std::string snapshot_hash(const Snapshot& s);

SwapGraph snapshot_graph(const Snapshot& s);

// Result document: amounts as decimal strings, token and pool ids.
std::string solution_json(const RouteSolution& sol, const SwapGraph& g, int indent = 2);

struct SyntheticParams {
  std::uint64_t seed = 1;
  std::size_t n_tokens = 10;
  std::size_t n_pools = 20;
  double hub_fraction = 0.2;
  int reserve_spread_orders = 6;
  double piecewise_fraction = 0.2;
};

// Deterministic for a seed. A preferential-attachment spanning tree keeps
// the graph connected; the remaining pools attach to hubs with power-law
// weights. Pool reserves follow per-token reference prices, so spot rates
// are consistent around every cycle before fees.
Snapshot generate_synthetic(const SyntheticParams& p);

}  // namespace prime
