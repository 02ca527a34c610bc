#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <queue>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prime/error.hpp"
#include "prime/io.hpp"

using namespace prime;

namespace {

std::string fixture(const char* name) { return std::string(PRIME_FIXTURE_DIR) + "/" + name; }

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected prime::Error");
  return Errc::invalid_params;
}

std::string message_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

const char* kMinimal = R"({"version": 1, "block_ref": "b",
  "tokens": [{"id": "A", "symbol": "A", "decimals": 18}, {"id": "B", "symbol": "B", "decimals": 6}],
  "pools": [{"id": "P", "kind": "constant_product", "fee_bps": 30, "tokens": ["A", "B"], "reserves": ["10", "20"]}]})";

}  // namespace

TEST_CASE("save then load round-trips byte for byte") {
  const auto s = load_snapshot(fixture("small.json"));
  CHECK(s.tokens.size() == 6);
  CHECK(s.pools.size() == 8);
  const std::string once = dump_snapshot(s);
  const std::string twice = dump_snapshot(parse_snapshot(once));
  CHECK(once == twice);
  const auto path = (std::filesystem::temp_directory_path() / "prime_io_roundtrip.json").string();
  save_snapshot(s, path);
  std::ifstream is(path);
  std::stringstream buf;
  buf << is.rdbuf();
  CHECK(buf.str() == once);
  std::filesystem::remove(path);

  const auto doc = nlohmann::json::parse(once);
  CHECK(doc["hash"].get<std::string>() == snapshot_hash(s));
  CHECK(doc["hash"].get<std::string>().size() == 16);
  // Every amount is a string.
  CHECK(doc["pools"][0]["reserves"][0].is_string());
}

TEST_CASE("float-style amounts are rejected") {
  std::string text = kMinimal;
  text.replace(text.find("\"10\""), 4, "\"1e18\"");
  CHECK(code_of([&] { parse_snapshot(text); }) == Errc::parse_error);
  CHECK(message_of([&] { parse_snapshot(text); }).find("pools[0].reserves[0]") != std::string::npos);
  std::string number = kMinimal;
  number.replace(number.find("\"10\""), 4, "10");
  CHECK(code_of([&] { parse_snapshot(number); }) == Errc::parse_error);
}

TEST_CASE("unknown token references are rejected") {
  std::string text = kMinimal;
  text.replace(text.find("[\"A\", \"B\"]"), 10, "[\"A\", \"Z\"]");
  CHECK(code_of([&] { parse_snapshot(text); }) == Errc::parse_error);
  CHECK(message_of([&] { parse_snapshot(text); }).find("unknown token Z") != std::string::npos);
}

TEST_CASE("version and syntax errors") {
  std::string text = kMinimal;
  text.replace(text.find("\"version\": 1"), 12, "\"version\": 2");
  CHECK(code_of([&] { parse_snapshot(text); }) == Errc::version_unsupported);
  CHECK(code_of([] { parse_snapshot("{\n\"version\": 1,\n oops}"); }) == Errc::parse_error);
  CHECK(message_of([] { parse_snapshot("{\n\"version\": 1,\n oops}"); }).rfind("line 3", 0) == 0);
  CHECK(code_of([] { load_snapshot("/nonexistent/snapshot.json"); }) == Errc::parse_error);
}

TEST_CASE("snapshot graph and solution json") {
  const auto s = load_snapshot(fixture("small.json"));
  const auto g = snapshot_graph(s);
  CHECK(g.edge_count() == 16);
  RouteQuery q;
  q.source = g.require_token("WETH");
  q.target = g.require_token("USDT");
  q.amount = Amount::from_decimal("10000000000000000000");
  const auto sol = prime::prime(g, q);
  const auto doc = nlohmann::json::parse(solution_json(sol, g));
  CHECK(doc["total_output"].get<std::string>() == sol.total_output.to_decimal());
  CHECK(doc["amount_in"].get<std::string>() == "10000000000000000000");
  CHECK(doc["paths"].size() == sol.paths.size());
  CHECK(doc.contains("tau"));
  CHECK(doc["execution_plan"].size() == sol.plan.size());
  CHECK(doc["execution_plan"][0]["amount_in"].is_string());
}

TEST_CASE("synthetic generator is deterministic") {
  SyntheticParams p;
  CHECK(dump_snapshot(generate_synthetic(p)) == dump_snapshot(generate_synthetic(p)));
  p.seed = 2;
  CHECK(dump_snapshot(generate_synthetic(p)) != dump_snapshot(generate_synthetic(SyntheticParams{})));
}

TEST_CASE("minimum pool count yields a connected tree") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SyntheticParams p;
    p.seed = seed;
    p.n_tokens = 25;
    p.n_pools = 24;
    const auto s = generate_synthetic(p);
    CHECK(s.pools.size() == 24);
    const auto g = snapshot_graph(s);
    std::vector<bool> seen(g.universe_size(), false);
    std::queue<TokenIndex> q;
    q.push(0);
    seen[0] = true;
    std::size_t reached = 1;
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (EdgeIndex e : g.out_edges(u)) {
        const auto v = g.edge(e).to;
        if (!seen[v]) {
          seen[v] = true;
          ++reached;
          q.push(v);
        }
      }
    }
    CHECK(reached == 25);
  }
}

TEST_CASE("reserve spread reaches ten orders at spread eleven") {
  SyntheticParams p;
  p.n_tokens = 40;
  p.n_pools = 80;
  p.reserve_spread_orders = 11;
  p.piecewise_fraction = 0.0;
  const auto s = generate_synthetic(p);
  long double lo = 1e300L;
  long double hi = 0.0L;
  for (const auto& pool : s.pools) {
    for (const auto& r : pool.reserves) {
      lo = std::min(lo, r.to_long_double());
      hi = std::max(hi, r.to_long_double());
    }
  }
  CHECK(hi / lo >= 1e10L);
}

TEST_CASE("generator parameter checks") {
  SyntheticParams p;
  p.n_pools = 5;
  CHECK(code_of([&] { generate_synthetic(p); }) == Errc::invalid_params);
  p = {};
  p.hub_fraction = 0.0;
  CHECK(code_of([&] { generate_synthetic(p); }) == Errc::invalid_params);
  p = {};
  p.n_tokens = 1;
  CHECK(code_of([&] { generate_synthetic(p); }) == Errc::invalid_params);
}

TEST_CASE("generated piecewise pools load into a graph") {
  SyntheticParams p;
  p.n_tokens = 30;
  p.n_pools = 60;
  p.piecewise_fraction = 1.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    p.seed = seed;
    const auto s = generate_synthetic(p);
    CHECK_NOTHROW(snapshot_graph(parse_snapshot(dump_snapshot(s))));
  }
}
