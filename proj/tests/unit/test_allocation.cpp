#include <doctest.h>

#include <numeric>
#include <random>

#include "prime/allocation.hpp"
#include "prime/error.hpp"
#include "support/instances.hpp"

using namespace prime;
using prime::testing::cp_pool;
using prime::testing::named_tokens;
using prime::testing::pow10;

namespace {

MultiEdgePath one_edge_path(const SwapGraph& g, EdgeIndex e) {
  const Edge& edge = g.edge(e);
  MultiEdgePath p;
  p.hops.push_back(Hop{edge.from, edge.to, {make_leg(edge)}, {1.0}});
  return p;
}

// Paths S->T, one per pool, in pool-id order.
std::vector<MultiEdgePath> parallel_paths(const SwapGraph& g) {
  std::vector<MultiEdgePath> out;
  for (EdgeIndex e : g.edges_between(g.require_token("S"), g.require_token("T"))) out.push_back(one_edge_path(g, e));
  return out;
}

SwapGraph two_pools(const Amount& a, const Amount& b) {
  return SwapGraph::build(named_tokens({"S", "T"}), {cp_pool("PA", "S", "T", a, a), cp_pool("PB", "S", "T", b, b)});
}

Allocation uniform_alloc(const std::vector<MultiEdgePath>& paths, std::vector<double> w) {
  Allocation a;
  a.path_weights = std::move(w);
  for (const auto& p : paths) {
    HopWeights hw;
    for (const auto& h : p.hops) hw.push_back(std::vector<double>(h.legs.size(), 1.0 / static_cast<double>(h.legs.size())));
    a.edge_weights.push_back(hw);
  }
  return a;
}

}  // namespace

TEST_CASE("split_amount conserves the input exactly") {
  const double w[] = {0.5, 0.5};
  const auto s = split_amount(Amount(1001), w);
  CHECK(s[0] + s[1] == Amount(1001));
  CHECK(s[0] == Amount(501));  // tie goes to the lower index
  const double zero[] = {0.0, 0.0, 0.0};
  CHECK(split_amount(Amount(9), zero)[0] == Amount(9));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> ws(1 + testing::below(rng, 6));
    for (auto& v : ws) v = testing::below(rng, 4) == 0 ? 0.0 : testing::unit(rng);
    const Amount x = testing::amount_of(std::pow(10.0L, 30.0L * testing::unit(rng)));
    const auto shares = split_amount(x, ws);
    Amount sum;
    for (const auto& v : shares) sum += v;
    CHECK(sum == x);
    const double total = std::accumulate(ws.begin(), ws.end(), 0.0);
    for (std::size_t k = 0; k < ws.size(); ++k) {
      if (total > 0.0 && ws[k] == 0.0) CHECK(shares[k].is_zero());
    }
  }
}

TEST_CASE("path_output examples") {
  const auto g = two_pools(Amount(1000), Amount(1000));
  const auto paths = parallel_paths(g);
  CHECK(path_output(paths[0], Amount(700)) == swap_out(g.edge(g.edges_between(0, 1)[0]).fn, Amount(700)));
  CHECK(path_output(paths[0], Amount(0)) == Amount(0));

  // One hop holding both pools.
  MultiEdgePath hop2;
  hop2.hops.push_back(Hop{0, 1, {paths[0].hops[0].legs[0], paths[1].hops[0].legs[0]}, {0.5, 0.5}});
  CHECK(path_output(hop2, Amount(1000)) == Amount(666));
  CHECK(objective(paths, uniform_alloc(paths, {0.5, 0.5}), Amount(1000)) == Amount(666));
  CHECK(objective(paths, uniform_alloc(paths, {1.0, 0.0}), Amount(1000)) == Amount(500));
  CHECK(objective(paths, uniform_alloc(paths, {0.5, 0.5}), Amount(0)) == Amount(0));
}

TEST_CASE("path marginal price follows the chain rule") {
  const auto g = SwapGraph::build(named_tokens({"S", "M", "T"}),
                                  {cp_pool("P1", "S", "M", pow10(21), pow10(21)), cp_pool("P2", "M", "T", pow10(21), pow10(21))});
  MultiEdgePath p;
  p.hops.push_back(Hop{0, 1, {make_leg(g.edge(g.edges_between(g.require_token("S"), g.require_token("M"))[0]))}, {1.0}});
  p.hops.push_back(Hop{1, 2, {make_leg(g.edge(g.edges_between(g.require_token("M"), g.require_token("T"))[0]))}, {1.0}});
  CHECK(path_marginal_price(p, Amount(0)) == doctest::Approx(1.0));

  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    auto inst = testing::random_path_instance(rng, 1, 3, 1 + testing::below(rng, 2));
    auto& path = inst.paths[0];
    for (auto& h : path.hops) {
      for (auto& w : h.weights) w = 0.2 + testing::unit(rng);
    }
    const Amount a = inst.x;
    const long double step = std::max(1.0L, a.to_long_double() / 1e6L);
    const Amount lo = testing::amount_of(a.to_long_double() - step);
    const Amount hi = testing::amount_of(a.to_long_double() + step);
    const long double fd = (path_output(path, hi).to_long_double() - path_output(path, lo).to_long_double()) /
                           (hi.to_long_double() - lo.to_long_double());
    CHECK(static_cast<long double>(path_marginal_price(path, a)) == doctest::Approx(static_cast<double>(fd)).epsilon(1e-4));
  }
}

TEST_CASE("asgm splits symmetric paths evenly") {
  const auto g = two_pools(pow10(21), pow10(21));
  const auto paths = parallel_paths(g);
  const auto r = asgm(paths, pow10(21));
  CHECK(r.allocation.path_weights[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(r.allocation.path_weights[1] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK_FALSE(r.degraded);
}

TEST_CASE("asgm reaches the closed-form split") {
  // Equal marginal prices: (200+b)^2 = ... a = 10, b = 20 for x = 30.
  const Amount u = pow10(18);
  const auto g = two_pools(Amount::from_wide(u.wide() * 100), Amount::from_wide(u.wide() * 200));
  const auto paths = parallel_paths(g);
  const auto r = asgm(paths, Amount::from_wide(u.wide() * 30));
  CHECK(r.allocation.path_weights[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-4));
  CHECK(r.allocation.path_weights[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-4));
  CHECK(r.tau == doctest::Approx(100.0 * 100.0 / (110.0 * 110.0)).epsilon(1e-5));
}

TEST_CASE("single path needs no rebalancing") {
  const auto g = two_pools(pow10(21), pow10(20));
  auto paths = parallel_paths(g);
  paths.resize(1);
  const auto r = asgm(paths, pow10(19));
  CHECK(r.iterations == 0);
  CHECK(r.allocation.path_weights == std::vector<double>{1.0});
  CHECK(r.objective == path_output(paths[0], pow10(19)));
}

TEST_CASE("asgm rejects overlapping paths and bad parameters") {
  const auto g = two_pools(pow10(21), pow10(20));
  auto paths = parallel_paths(g);
  paths[1] = paths[0];
  CHECK_THROWS_AS(asgm(paths, pow10(19)), Error);
  AsgmParams bad;
  bad.beta = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("asgm trace is monotone and stays on the simplex") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 60; ++i) {
    const auto inst = testing::random_path_instance(rng, 2 + testing::below(rng, 3), 3, 1 + testing::below(rng, 2));
    const auto r = asgm(inst.paths, inst.x);
    for (std::size_t k = 1; k < r.trace.records.size(); ++k) {
      CHECK(r.trace.records[k].objective >= r.trace.records[k - 1].objective);
    }
    double sum = 0.0;
    for (double w : r.allocation.path_weights) {
      CHECK(w >= 0.0);
      sum += w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    for (const auto& hw : r.allocation.edge_weights) {
      for (const auto& h : hw) {
        double hs = 0.0;
        for (double w : h) {
          CHECK(w >= 0.0);
          hs += w;
        }
        CHECK(hs == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
    CHECK(r.objective == objective(inst.paths, r.allocation, inst.x));
    CHECK(r.max_backtracks < 200);
  }
}

TEST_CASE("trace CSV has the documented header") {
  const auto g = two_pools(pow10(21), pow10(21));
  const auto paths = parallel_paths(g);
  const auto csv = asgm(paths, pow10(21)).trace.to_csv();
  CHECK(csv.rfind("t,J,g_max,g_min,delta\n", 0) == 0);
}
