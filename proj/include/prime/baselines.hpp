#pragma once

#include <span>
#include <vector>

#include "prime/engine.hpp"

namespace prime {

// Highest-output single path on the whole graph (no hubs, no splitting).
// Throws no_route.
RouteSolution best_single_path(const SwapGraph& g, const RouteQuery& q);

struct FlowParams {
  double ternary_width = 1e-6;
  int ternary_iterations = 100;
  int max_augmentations = 32;
  double eps_rel = 1e-6;
};

// Augmenting-path heuristic that lets paths share pools. Paths execute in
// sequence against a private copy of the pool states, so later paths see
// the reserves left by earlier ones. The result sets disjoint = false when
// any pool is shared.
RouteSolution prime_flow(const SwapGraph& g, const RouteQuery& q, const FlowParams& params = {});

struct GridSpec {
  double step = 0.001;
  int max_paths = 4;

  void validate() const;
};

struct GridResult {
  Allocation allocation;
  Amount objective;
  std::vector<std::size_t> units;  // path weights in grid units, summing to 1/step
};

// Exhaustive search over the path-weight lattice of resolution `step`, with
// each hop's leg weights optimised on the same lattice. Ties resolve to the
// lexicographically smallest weight vector. Throws too_many_paths.
GridResult grid_oracle(std::span<const MultiEdgePath> paths, const Amount& x, const GridSpec& spec);

}  // namespace prime
