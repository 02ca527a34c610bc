#pragma once

#include <span>
#include <string>
#include <vector>

#include "prime/path_discovery.hpp"

namespace prime {

// Parallel legs between two consecutive tokens and the share of the hop
// input each one receives. Legs are kept in pool-id order.
struct Hop {
  TokenIndex from = 0;
  TokenIndex to = 0;
  std::vector<Leg> legs;
  std::vector<double> weights;
};

struct MultiEdgePath {
  std::vector<Hop> hops;

  static MultiEdgePath from_single(const SinglePath& p);
  TokenIndex source() const { return hops.front().from; }
  TokenIndex target() const { return hops.back().to; }
  std::vector<TokenIndex> token_sequence() const;
  std::vector<PoolIndex> pools() const;
};

using HopWeights = std::vector<std::vector<double>>;  // [hop][leg]

struct Allocation {
  std::vector<double> path_weights;
  std::vector<HopWeights> edge_weights;  // [path][hop][leg]
};

// Integer split of x by weights: floor(w_i * x) each, remainder to the
// largest weight (lowest index on ties). Sums to x exactly.
std::vector<Amount> split_amount(const Amount& x, std::span<const double> weights);

Amount path_output(const MultiEdgePath& p, const Amount& x);
Amount path_output(const MultiEdgePath& p, const HopWeights& w, const Amount& x);

double path_marginal_price(const MultiEdgePath& p, const Amount& a);
double path_marginal_price(const MultiEdgePath& p, const HopWeights& w, const Amount& a);

// Sum of path outputs with x split across paths by the path weights.
Amount objective(std::span<const MultiEdgePath> paths, const Allocation& alloc, const Amount& x);

struct AsgmParams {
  double alpha = 1e-4;
  double beta = 0.5;
  double delta0 = 0.25;
  double delta_min = 1e-12;
  int max_iterations = 1000;
  double eps_rel = 1e-6;
  // Hop-level relaxation runs to inner_tolerance_factor * eps_rel.
  double inner_tolerance_factor = 10.0;

  void validate() const;
};

struct TraceRecord {
  int t = 0;
  Amount objective;
  double g_max = 0.0;
  double g_min = 0.0;
  double delta = 0.0;
};

struct ConvergenceTrace {
  std::vector<TraceRecord> records;

  // Columns t,J,g_max,g_min,delta; J as an exact decimal integer.
  std::string to_csv() const;
};

struct AsgmResult {
  Allocation allocation;
  Amount objective;
  double tau = 0.0;
  double g_max = 0.0;
  double g_min = 0.0;
  ConvergenceTrace trace;
  bool degraded = false;
  int iterations = 0;
  std::size_t objective_evaluations = 0;
  int max_backtracks = 0;
};

// Adaptive sign-gradient allocation over the path simplex, with the same
// rebalancing applied to every hop's leg simplex at each outer iteration.
// Paths must be pairwise pool-disjoint. Starts from `initial_weights` when
// it has one entry per path, else from the uniform allocation.
AsgmResult asgm(std::span<const MultiEdgePath> paths, const Amount& x,
                const AsgmParams& params = {}, std::span<const double> initial_weights = {});

// Rebalances one hop's leg weights for the given hop input; returns the
// hop output at the final weights.
Amount relax_hop(const Hop& hop, std::vector<double>& weights, const Amount& input,
                 const AsgmParams& params, double eps_rel);

}  // namespace prime
