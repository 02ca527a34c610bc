#pragma once

#include <optional>
#include <string>
#include <vector>

#include "prime/allocation.hpp"
#include "prime/preprocess.hpp"

namespace prime {

struct HubConfig {
  int k = 16;
  HubMetric metric = HubMetric::degree;
  std::vector<std::string> pinned;  // overrides k when non-empty
  std::optional<std::string> numeraire;
};

struct RouteQuery {
  TokenIndex source = 0;
  TokenIndex target = 0;
  Amount amount;
  int max_hops = 3;
  HubConfig hubs;
  AsgmParams asgm;
  ShortcutConfig shortcuts;
  bool use_shortcuts = true;
  int expand_per_hop = 2;
  // Stage-1 allocations only refresh τ; they stop at this multiple of eps_rel.
  double stage1_tolerance_factor = 10000.0;

  void validate() const;
};

// Query-independent Stage 0 output, reusable across queries on one graph.
struct Preprocessed {
  HubSet hubs;
  ShortcutIndex index;
};

Preprocessed preprocess(const SwapGraph& g, const HubConfig& hubs, const ShortcutConfig& sc,
                        bool build_index = true);

struct PlanStep {
  std::size_t path = 0;
  std::size_t hop = 0;
  std::size_t leg = 0;
  std::size_t step = 0;  // position inside a shortcut leg
  PoolIndex pool = 0;
  TokenIndex token_in = 0;
  TokenIndex token_out = 0;
  Amount amount_in;
  Amount min_out;
};

struct RouteStats {
  std::size_t queue_pushes = 0;
  int stage1_iterations = 0;
  int asgm_iterations = 0;       // final optimisation
  int total_iterations = 0;      // every ASGM run of the query
  std::size_t objective_evaluations = 0;
  bool degraded = false;
  bool single_path_fallback = false;
  std::vector<double> tau_history;          // after each Stage-1 acceptance
  std::vector<Amount> objective_history;    // J after each Stage-1 acceptance
  std::size_t core_tokens = 0;
  std::size_t core_edges = 0;
  std::size_t shortcut_legs = 0;
  double setup_ms = 0.0;   // core induction and overlay
  double stage1_ms = 0.0;
  double stage2_ms = 0.0;
};

struct RouteSolution {
  std::string algorithm;
  TokenIndex source = 0;
  TokenIndex target = 0;
  Amount amount_in;
  std::vector<MultiEdgePath> paths;
  Allocation allocation;
  Amount total_output;
  double tau = 0.0;
  std::vector<PlanStep> plan;
  ConvergenceTrace trace;
  RouteStats stats;
  bool disjoint = true;
};

// Stage 0 is computed from `q` unless `cached` is supplied. Throws no_route
// when Stage 1 finds nothing.
RouteSolution prime(const SwapGraph& g, const RouteQuery& q, const Preprocessed* cached = nullptr);

// Merges paths with equal token sequences, then offers up to
// `expand_per_hop` unused parallel edges per hop and any indexed shortcut
// whose spot rate beats every leg already on the hop. New legs start at
// weight 0. `used_pools` is updated with everything added.
std::vector<MultiEdgePath> merge_and_expand(const std::vector<SinglePath>& paths,
                                            const std::vector<double>& path_weights,
                                            const SwapGraph& g, const ShortcutIndex* index,
                                            std::vector<bool>& used_pools, int expand_per_hop);

// Exact replay of the allocation, one step per pool touched with positive
// input. Returns the total output alongside the steps.
std::vector<PlanStep> build_execution_plan(const std::vector<MultiEdgePath>& paths,
                                           const Allocation& alloc, const Amount& x,
                                           Amount* total_output = nullptr);

struct AuditReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Re-simulates the plan against g's pool states.
AuditReport verify_solution(const RouteSolution& sol, const SwapGraph& g);

}  // namespace prime
