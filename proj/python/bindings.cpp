#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "prime/baselines.hpp"
#include "prime/error.hpp"
#include "prime/io.hpp"

namespace py = pybind11;

// Amounts cross the boundary as Python ints; decimal text keeps all 256 bits.
namespace pybind11::detail {
template <>
struct type_caster<prime::Amount> {
  PYBIND11_TYPE_CASTER(prime::Amount, const_name("int"));

  bool load(handle src, bool) {
    if (!PyLong_Check(src.ptr())) return false;
    if (py::reinterpret_borrow<py::int_>(src) < py::int_(0)) {
      throw py::value_error("amounts must be non-negative");
    }
    value = prime::Amount::from_decimal(py::str(src).cast<std::string>());
    return true;
  }

  static handle cast(const prime::Amount& a, return_value_policy, handle) {
    const std::string text = a.to_decimal();
    return PyLong_FromString(text.c_str(), nullptr, 10);
  }
};
}  // namespace pybind11::detail

namespace {

struct Market {
  prime::Snapshot snapshot;
  prime::SwapGraph graph;

  explicit Market(prime::Snapshot s) : snapshot(std::move(s)), graph(prime::snapshot_graph(snapshot)) {}
};

struct Solution {
  std::shared_ptr<const Market> market;
  prime::RouteSolution sol;
};

prime::RouteQuery make_query(const Market& m, const std::string& source, const std::string& target,
                             const prime::Amount& amount, int max_hops,
                             const std::variant<int, std::vector<std::string>>& hubs, double alpha,
                             double beta, bool shortcuts) {
  prime::RouteQuery q;
  q.source = m.graph.require_token(source);
  q.target = m.graph.require_token(target);
  q.amount = amount;
  q.max_hops = max_hops;
  if (const auto* k = std::get_if<int>(&hubs)) {
    q.hubs.k = *k;
  } else {
    q.hubs.pinned = std::get<std::vector<std::string>>(hubs);
  }
  q.asgm.alpha = alpha;
  q.asgm.beta = beta;
  q.use_shortcuts = shortcuts;
  return q;
}

prime::SwapFunction cp(const prime::Amount& r_in, const prime::Amount& r_out, std::uint32_t fee) {
  return prime::SwapFunction::constant_product(r_in, r_out, fee);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-path DEX routing with exact integer swap simulation";

  static py::exception<prime::Error> prime_error(m, "PrimeError");
  static py::exception<prime::Error> no_route(m, "NoRouteError", prime_error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const prime::Error& e) {
      const std::string msg = std::string(prime::errc_name(e.code())) + ": " + e.what();
      if (e.code() == prime::Errc::no_route) {
        PyErr_SetString(no_route.ptr(), msg.c_str());
      } else {
        PyErr_SetString(prime_error.ptr(), msg.c_str());
      }
    }
  });

  m.def("swap_out",
        [](const prime::Amount& r_in, const prime::Amount& r_out, std::uint32_t fee, const prime::Amount& x) {
          return prime::swap_out(cp(r_in, r_out, fee), x);
        },
        py::arg("reserve_in"), py::arg("reserve_out"), py::arg("fee_bps"), py::arg("amount_in"),
        "Exact constant-product output for amount_in.");
  m.def("marginal_price",
        [](const prime::Amount& r_in, const prime::Amount& r_out, std::uint32_t fee, const prime::Amount& x) {
          return prime::marginal_price(cp(r_in, r_out, fee), x);
        },
        py::arg("reserve_in"), py::arg("reserve_out"), py::arg("fee_bps"), py::arg("amount_in"));
  m.def("spot_price",
        [](const prime::Amount& r_in, const prime::Amount& r_out, std::uint32_t fee) {
          return prime::spot_price(cp(r_in, r_out, fee));
        },
        py::arg("reserve_in"), py::arg("reserve_out"), py::arg("fee_bps"));

  py::class_<Market, std::shared_ptr<Market>>(m, "Graph")
      .def_static("load", [](const std::string& path) {
        return std::make_shared<Market>(prime::load_snapshot(path));
      })
      .def_static("from_json", [](const std::string& text) {
        return std::make_shared<Market>(prime::parse_snapshot(text));
      })
      .def_static("generate",
                  [](std::uint64_t seed, std::size_t tokens, std::size_t pools, double hub_fraction,
                     int spread, double piecewise_fraction) {
                    prime::SyntheticParams p;
                    p.seed = seed;
                    p.n_tokens = tokens;
                    p.n_pools = pools;
                    p.hub_fraction = hub_fraction;
                    p.reserve_spread_orders = spread;
                    p.piecewise_fraction = piecewise_fraction;
                    return std::make_shared<Market>(prime::generate_synthetic(p));
                  },
                  py::arg("seed"), py::arg("tokens"), py::arg("pools"), py::arg("hub_fraction") = 0.2,
                  py::arg("spread") = 6, py::arg("piecewise_fraction") = 0.2)
      .def_property_readonly("token_count", [](const Market& mk) { return mk.graph.token_count(); })
      .def_property_readonly("pool_count", [](const Market& mk) { return mk.graph.pool_count(); })
      .def_property_readonly("tokens", [](const Market& mk) {
        std::vector<std::string> ids;
        for (auto t : mk.graph.tokens()) ids.push_back(mk.graph.token_id(t));
        return ids;
      })
      .def_property_readonly("hash", [](const Market& mk) { return prime::snapshot_hash(mk.snapshot); })
      .def("to_json", [](const Market& mk) { return prime::dump_snapshot(mk.snapshot); })
      .def("save", [](const Market& mk, const std::string& path) { prime::save_snapshot(mk.snapshot, path); });

  py::class_<Solution>(m, "Solution")
      .def_property_readonly("algorithm", [](const Solution& s) { return s.sol.algorithm; })
      .def_property_readonly("total_output", [](const Solution& s) { return s.sol.total_output; })
      .def_property_readonly("amount_in", [](const Solution& s) { return s.sol.amount_in; })
      .def_property_readonly("tau", [](const Solution& s) { return s.sol.tau; })
      .def_property_readonly("path_count", [](const Solution& s) { return s.sol.paths.size(); })
      .def_property_readonly("path_weights", [](const Solution& s) { return s.sol.allocation.path_weights; })
      .def_property_readonly("disjoint", [](const Solution& s) { return s.sol.disjoint; })
      .def("to_json", [](const Solution& s) { return prime::solution_json(s.sol, s.market->graph); })
      .def("trace_csv", [](const Solution& s) { return s.sol.trace.to_csv(); })
      .def("violations", [](const Solution& s) {
        return prime::verify_solution(s.sol, s.market->graph).violations;
      });

  m.def("route",
        [](std::shared_ptr<Market> mk, const std::string& source, const std::string& target,
           const prime::Amount& amount, const std::string& algo, int max_hops,
           const std::variant<int, std::vector<std::string>>& hubs, double alpha, double beta,
           bool shortcuts) {
          const auto q = make_query(*mk, source, target, amount, max_hops, hubs, alpha, beta, shortcuts);
          prime::RouteSolution sol;
          {
            py::gil_scoped_release release;
            if (algo == "prime") {
              sol = prime::prime(mk->graph, q);
            } else if (algo == "osp") {
              sol = prime::best_single_path(mk->graph, q);
            } else if (algo == "flow") {
              sol = prime::prime_flow(mk->graph, q);
            } else {
              throw prime::Error(prime::Errc::invalid_params, "unknown algorithm " + algo);
            }
          }
          return Solution{std::move(mk), std::move(sol)};
        },
        py::arg("graph"), py::arg("source"), py::arg("target"), py::arg("amount"),
        py::arg("algo") = "prime", py::arg("max_hops") = 3, py::arg("hubs") = 16,
        py::arg("alpha") = 1e-4, py::arg("beta") = 0.5, py::arg("shortcuts") = true);
}
