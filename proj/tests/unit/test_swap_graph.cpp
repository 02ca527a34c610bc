#include <doctest.h>

#include <random>
#include <set>

#include "prime/error.hpp"
#include "prime/swap_graph.hpp"
#include "support/instances.hpp"

using namespace prime;
using prime::testing::cp_pool;
using prime::testing::named_tokens;

namespace {

Pool three_pool() {
  Pool p;
  p.id = "C3";
  p.tokens = {"A", "B", "C"};
  p.reserves = {Amount(1000), Amount(2000), Amount(3000)};
  p.fee_bps = 4;
  return p;
}

SwapGraph star(bool with_protected_leaf_pool = false) {
  std::vector<std::string> ids{"H", "L1", "L2", "L3", "L4", "L5"};
  std::vector<Pool> pools;
  for (int i = 1; i <= 5; ++i) {
    pools.push_back(cp_pool("P" + std::to_string(i), "H", "L" + std::to_string(i), Amount(100), Amount(100)));
  }
  if (with_protected_leaf_pool) pools.push_back(cp_pool("P9", "H", "L1", Amount(50), Amount(70)));
  return SwapGraph::build(named_tokens(ids), pools);
}

}  // namespace

TEST_CASE("pools expand to directed edges") {
  const auto g1 = SwapGraph::build(named_tokens({"A", "B"}), {cp_pool("P1", "A", "B", Amount(10), Amount(20))});
  CHECK(g1.edge_count() == 2);
  const auto g3 = SwapGraph::build(named_tokens({"A", "B", "C"}), {three_pool()});
  CHECK(g3.edge_count() == 6);
  const auto gp = SwapGraph::build(named_tokens({"A", "B"}), {cp_pool("P1", "A", "B", Amount(10), Amount(20)),
                                                              cp_pool("P2", "A", "B", Amount(30), Amount(40))});
  CHECK(gp.edge_count() == 4);
  const auto a = gp.require_token("A");
  const auto b = gp.require_token("B");
  const auto ab = gp.edges_between(a, b);
  REQUIRE(ab.size() == 2);
  CHECK(gp.pool_id(gp.edge(ab[0]).pool) == "P1");
  CHECK(gp.pool_id(gp.edge(ab[1]).pool) == "P2");
  // Reserves are viewed from the edge's input side.
  const auto* f = gp.edge(gp.edges_between(b, a)[0]).fn.as_constant_product();
  REQUIRE(f != nullptr);
  CHECK(f->reserve_in == Amount(20));
  CHECK(f->reserve_out == Amount(10));
}

TEST_CASE("edges_between examples") {
  std::vector<Pool> pools;
  for (int i = 0; i < 3; ++i) pools.push_back(cp_pool("P" + std::to_string(i), "A", "B", Amount(10 + i), Amount(9)));
  pools.push_back(cp_pool("P9", "B", "C", Amount(10), Amount(10)));
  const auto g = SwapGraph::build(named_tokens({"A", "B", "C"}), pools);
  CHECK(g.edges_between(g.require_token("A"), g.require_token("B")).size() == 3);
  CHECK(g.edges_between(g.require_token("A"), g.require_token("C")).empty());
  const auto pruned = prune_leaf_tokens(g, {g.require_token("A")});
  CHECK(pruned.edges_between(g.require_token("B"), g.require_token("C")).empty());
}

TEST_CASE("malformed snapshots are rejected") {
  auto code = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::invalid_params;
  };
  CHECK(code([] { SwapGraph::build(named_tokens({"A"}), {cp_pool("P", "A", "Z", Amount(1), Amount(1))}); }) ==
        Errc::malformed_snapshot);
  CHECK(code([] { SwapGraph::build(named_tokens({"A", "B"}), {cp_pool("P", "A", "B", Amount(0), Amount(1))}); }) ==
        Errc::malformed_snapshot);
  CHECK(code([] {
          SwapGraph::build(named_tokens({"A", "B"}), {cp_pool("P", "A", "B", Amount(1), Amount(1)),
                                                      cp_pool("P", "A", "B", Amount(2), Amount(2))});
        }) == Errc::malformed_snapshot);
  CHECK(code([] { SwapGraph::build(named_tokens({"A", "B"}), {cp_pool("P", "A", "A", Amount(1), Amount(1))}); }) ==
        Errc::malformed_snapshot);
}

TEST_CASE("leaf pruning examples") {
  const auto g = star();
  const auto h = g.require_token("H");
  const auto only_hub = prune_leaf_tokens(g, {h});
  CHECK(only_hub.token_count() == 1);
  CHECK(only_hub.edge_count() == 0);

  const auto tri = SwapGraph::build(named_tokens({"A", "B", "C"}),
                                    {cp_pool("P1", "A", "B", Amount(5), Amount(5)),
                                     cp_pool("P2", "B", "C", Amount(5), Amount(5)),
                                     cp_pool("P3", "A", "C", Amount(5), Amount(5))});
  const auto same = prune_leaf_tokens(tri, {});
  CHECK(same.token_count() == 3);
  CHECK(same.edge_count() == 6);

  const auto l1 = g.require_token("L1");
  const auto kept = prune_leaf_tokens(star(true), {h, l1});
  CHECK(kept.token_count() == 2);
  CHECK(kept.edges_between(h, l1).size() == 2);
}

TEST_CASE("build is deterministic under input permutation") {
  std::mt19937_64 rng(5);
  auto g = testing::random_price_consistent_graph(rng, 8, 15);
  std::vector<Pool> pools = g.registry().pools;
  std::reverse(pools.begin(), pools.end());
  std::vector<Token> toks = g.registry().tokens;
  std::reverse(toks.begin(), toks.end());
  const auto h = SwapGraph::build(toks, pools);
  REQUIRE(h.edge_count() == g.edge_count());
  for (TokenIndex t : g.tokens()) {
    const auto a = g.out_edges(t);
    const auto b = h.out_edges(t);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(g.edge(a[i]).pool == h.edge(b[i]).pool);
      CHECK(g.edge(a[i]).to == h.edge(b[i]).to);
    }
  }
}

TEST_CASE("pruning keeps every short path between protected tokens") {
  std::mt19937_64 rng(9);
  for (int round = 0; round < 200; ++round) {
    const std::size_t n = 3 + testing::below(rng, 8);
    const auto g = testing::random_price_consistent_graph(rng, n, 1 + testing::below(rng, 12));
    std::vector<TokenIndex> prot;
    for (TokenIndex t : g.tokens()) {
      if (testing::below(rng, 3) == 0) prot.push_back(t);
    }
    const auto pruned = prune_leaf_tokens(g, prot);
    for (TokenIndex a : prot) {
      for (TokenIndex b : prot) {
        if (a == b) continue;
        for (EdgeIndex e : g.out_edges(a)) {
          const TokenIndex mid = g.edge(e).to;
          if (mid == b) {
            CHECK(pruned.contains(mid));
            continue;
          }
          if (g.edges_between(mid, b).empty()) continue;
          CAPTURE(round);
          CHECK(pruned.contains(mid));
          CHECK_FALSE(pruned.edges_between(mid, b).empty());
        }
      }
    }
    // Edge count matches the per-pool formula on the unpruned graph.
    std::size_t want = 0;
    for (const auto& p : g.registry().pools) want += p.tokens.size() * (p.tokens.size() - 1);
    CHECK(g.edge_count() == want);
  }
}
