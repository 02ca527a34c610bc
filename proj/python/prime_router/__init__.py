"""Multi-path DEX routing over pool snapshots.

Amounts are Python ints in raw token units. ``route`` returns the solution
document as a dict, with the audit result under ``"violations"``.
"""

import json

from ._core import (
    Graph,
    NoRouteError,
    PrimeError,
    Solution,
    marginal_price,
    spot_price,
    swap_out,
)
from ._core import route as _route

__all__ = [
    "Graph",
    "NoRouteError",
    "PrimeError",
    "Solution",
    "best_single_path",
    "marginal_price",
    "route",
    "solve",
    "spot_price",
    "swap_out",
]


def solve(graph, source, target, amount, algo="prime", **options):
    """Run one query and return the native Solution object."""
    return _route(graph, source, target, amount, algo, **options)


def route(graph, source, target, amount, algo="prime", **options):
    """Run one query and return its result document as a dict."""
    sol = solve(graph, source, target, amount, algo, **options)
    doc = json.loads(sol.to_json())
    doc["total_output"] = int(doc["total_output"])
    doc["amount_in"] = int(doc["amount_in"])
    doc["violations"] = sol.violations() if sol.disjoint else []
    return doc


def best_single_path(graph, source, target, amount, max_hops=3):
    """Highest-output single route, as a result dict."""
    return route(graph, source, target, amount, algo="osp", max_hops=max_hops)
