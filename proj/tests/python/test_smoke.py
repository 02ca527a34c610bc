import os
import pathlib

import pytest

import prime_router as pr

FIXTURES = pathlib.Path(
    os.environ.get("PRIME_FIXTURE_DIR", pathlib.Path(__file__).resolve().parents[1] / "fixtures")
)


@pytest.fixture(scope="module")
def market():
    return pr.Graph.load(str(FIXTURES / "small.json"))


def test_swap_out_matches_integer_formula():
    r_in, r_out, fee, x = 10**9, 10**9, 30, 10**6
    want = x * (10000 - fee) * r_out // (r_in * 10000 + x * (10000 - fee))
    assert pr.swap_out(r_in, r_out, fee, x) == want == 996006


def test_amounts_keep_full_width():
    big = 10**60
    assert pr.swap_out(big, big, 0, big) == big // 2
    with pytest.raises(ValueError):
        pr.swap_out(-1, 5, 0, 1)


def test_prices():
    assert pr.spot_price(200, 100, 0) == pytest.approx(0.5)
    assert pr.marginal_price(100, 100, 0, 100) == pytest.approx(0.25)


def test_graph_metadata(market):
    assert market.token_count == 6
    assert market.pool_count == 8
    assert "WETH" in market.tokens
    assert len(market.hash) == 16


def test_route_dominates_single_path(market):
    amount = 10 * 10**18
    doc = pr.route(market, "WETH", "USDT", amount)
    osp = pr.best_single_path(market, "WETH", "USDT", amount)
    assert doc["violations"] == []
    assert doc["amount_in"] == amount
    assert doc["total_output"] >= osp["total_output"] > 0
    sol = pr.solve(market, "WETH", "USDT", amount)
    assert sum(sol.path_weights) == pytest.approx(1.0)
    assert sol.trace_csv().startswith("t,J,g_max,g_min,delta")


def test_flow_and_options(market):
    amount = 5 * 10**18
    flow = pr.route(market, "WETH", "USDT", amount, algo="flow")
    assert flow["algorithm"] == "flow"
    pinned = pr.route(market, "WETH", "USDT", amount, hubs=["WETH", "USDC"], shortcuts=False)
    assert pinned["total_output"] > 0


def test_errors(market):
    with pytest.raises(pr.PrimeError, match="UnknownToken"):
        pr.route(market, "NOPE", "USDT", 10)
    with pytest.raises(pr.NoRouteError):
        pr.route(market, "WETH", "ISO1", 10**18)
    with pytest.raises(pr.PrimeError):
        pr.route(market, "WETH", "USDT", 10, algo="bogus")


def test_generate_round_trip(tmp_path):
    g = pr.Graph.generate(seed=5, tokens=20, pools=40)
    path = tmp_path / "snap.json"
    g.save(str(path))
    again = pr.Graph.load(str(path))
    assert again.to_json() == g.to_json()
    assert pr.Graph.from_json(g.to_json()).hash == g.hash
