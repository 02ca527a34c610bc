// prime_cli: route, bench and generate over JSON pool snapshots.
//
// Exit codes: 0 success, 1 input or configuration error, 2 no route.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "prime/bench.hpp"
#include "prime/error.hpp"
#include "prime/io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNoRoute = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("prime");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("PRIME_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool all_digits(const std::string& s) {
  return !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
}

// "--hubs 50" selects by metric; "--hubs WETH,USDC" pins the list.
void apply_hubs(prime::HubConfig& cfg, const std::string& hubs, const std::string& metric) {
  if (!hubs.empty()) {
    if (all_digits(hubs)) {
      cfg.k = std::stoi(hubs);
    } else {
      cfg.pinned = split_list(hubs);
    }
  }
  if (metric == "reserve") cfg.metric = prime::HubMetric::reserve_mass;
}

struct QueryFlags {
  int max_hops = 3;
  std::string hubs;
  std::string hub_metric = "degree";
  std::string numeraire;
  double alpha = 1e-4;
  double beta = 0.5;
  bool no_shortcuts = false;
};

void add_query_flags(CLI::App* cmd, QueryFlags& f) {
  cmd->add_option("--max-hops", f.max_hops, "Hop limit per path")->check(CLI::Range(1, 8));
  cmd->add_option("--hubs", f.hubs, "Hub count K or a comma-separated token list");
  cmd->add_option("--hub-metric", f.hub_metric, "Hub ranking")->check(CLI::IsMember({"degree", "reserve"}));
  cmd->add_option("--numeraire", f.numeraire, "Token valued by the reserve hub metric");
  cmd->add_option("--alpha", f.alpha, "Armijo constant");
  cmd->add_option("--beta", f.beta, "Backtracking decay");
  cmd->add_flag("--no-shortcuts", f.no_shortcuts, "Route on the core graph only");
}

prime::RouteQuery make_query(const QueryFlags& f) {
  prime::RouteQuery q;
  q.max_hops = f.max_hops;
  apply_hubs(q.hubs, f.hubs, f.hub_metric);
  if (!f.numeraire.empty()) q.hubs.numeraire = f.numeraire;
  q.asgm.alpha = f.alpha;
  q.asgm.beta = f.beta;
  q.use_shortcuts = !f.no_shortcuts;
  return q;
}

struct RouteFlags {
  std::string snapshot;
  std::string from;
  std::string to;
  std::string amount;
  std::string algo = "prime";
  std::string trace;
  std::string index;
  QueryFlags query;
};

int cmd_route(const RouteFlags& f) {
  const prime::Snapshot snap = prime::load_snapshot(f.snapshot);
  const prime::SwapGraph g = prime::snapshot_graph(snap);
  prime::RouteQuery q = make_query(f.query);
  q.source = g.require_token(f.from);
  q.target = g.require_token(f.to);
  q.amount = prime::Amount::from_decimal(f.amount);
  q.validate();
  spdlog::info("loaded {} tokens, {} pools", g.token_count(), g.pool_count());

  prime::RouteSolution sol;
  if (f.algo == "prime") {
    prime::Preprocessed pre = prime::preprocess(g, q.hubs, q.shortcuts, false);
    if (q.use_shortcuts) {
      const std::string hash = prime::snapshot_hash(snap);
      std::optional<prime::ShortcutIndex> cached;
      if (!f.index.empty()) cached = prime::load_shortcut_index(g, hash, q.shortcuts, f.index);
      if (cached && cached->hubs() == pre.hubs.hubs) {
        spdlog::info("shortcut index loaded from {}", f.index);
        pre.index = std::move(*cached);
      } else {
        pre.index = prime::build_shortcut_index(g, pre.hubs, q.shortcuts);
        if (!f.index.empty()) prime::save_shortcut_index(pre.index, g, hash, f.index);
      }
    }
    sol = prime::prime(g, q, &pre);
  } else if (f.algo == "osp") {
    sol = prime::best_single_path(g, q);
  } else {
    sol = prime::prime_flow(g, q);
  }
  if (!f.trace.empty()) {
    std::ofstream os(f.trace);
    if (!os) throw prime::Error(prime::Errc::invalid_params, "cannot write trace " + f.trace);
    os << sol.trace.to_csv();
  }
  spdlog::info("{} paths, output {}", sol.paths.size(), sol.total_output.to_decimal());
  std::cout << prime::solution_json(sol, g) << '\n';
  return kExitOk;
}

struct BenchFlags {
  std::vector<std::string> snapshots;
  std::vector<std::string> pairs;
  std::string amounts = "1,10,100,1000";
  std::string algos = "prime,osp";
  std::string mode = "compare";
  std::string alphas = "0.01,0.1,0.5,0.9";
  std::string betas = "0.3,0.5,0.7,0.9,0.95";
  std::string trace_dir;
  std::string out;
  int reps = 1;
  int jobs = 1;
  QueryFlags query;
};

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  for (const auto& s : split_list(text)) out.push_back(std::stod(s));
  return out;
}

// Query pairs for a snapshot: explicit FROM:TO flags, or every ordered pair
// of its three highest-degree tokens.
std::vector<std::pair<prime::TokenIndex, prime::TokenIndex>> bench_pairs(
    const prime::SwapGraph& g, const std::vector<std::string>& pairs) {
  std::vector<std::pair<prime::TokenIndex, prime::TokenIndex>> out;
  for (const auto& p : pairs) {
    const auto colon = p.find(':');
    if (colon == std::string::npos) {
      throw prime::Error(prime::Errc::invalid_params, "pair must be FROM:TO, got " + p);
    }
    out.emplace_back(g.require_token(p.substr(0, colon)), g.require_token(p.substr(colon + 1)));
  }
  if (!out.empty()) return out;
  const auto top = prime::select_hubs(g, 3).hubs;
  for (auto a : top) {
    for (auto b : top) {
      if (a != b) out.emplace_back(a, b);
    }
  }
  return out;
}

prime::Amount units(const prime::Amount& whole, std::uint32_t decimals) {
  prime::u512 v = whole.wide();
  for (std::uint32_t i = 0; i < decimals; ++i) v *= 10;
  return prime::Amount::from_wide(v);
}

int cmd_bench(const BenchFlags& f) {
  struct Loaded {
    std::string name;
    std::unique_ptr<prime::SwapGraph> graph;
    std::unique_ptr<prime::Preprocessed> stage0;
  };
  std::vector<Loaded> loaded;
  std::vector<prime::BenchCase> cases;
  const prime::RouteQuery base = make_query(f.query);
  for (const auto& path : f.snapshots) {
    Loaded l;
    l.name = path.substr(path.find_last_of('/') + 1);
    l.graph = std::make_unique<prime::SwapGraph>(prime::snapshot_graph(prime::load_snapshot(path)));
    l.stage0 = std::make_unique<prime::Preprocessed>(
        prime::preprocess(*l.graph, base.hubs, base.shortcuts, base.use_shortcuts));
    for (const auto& [s, t] : bench_pairs(*l.graph, f.pairs)) {
      for (const auto& amt : split_list(f.amounts)) {
        prime::BenchCase c;
        c.snapshot = l.name;
        c.graph = l.graph.get();
        c.stage0 = l.stage0.get();
        c.query = base;
        c.query.source = s;
        c.query.target = t;
        c.query.amount = units(prime::Amount::from_decimal(amt),
                               l.graph->registry().tokens[s].decimals);
        c.name = l.name + ":" + l.graph->token_id(s) + ">" + l.graph->token_id(t) + "@" + amt;
        for (char& ch : c.name) {
          if (ch == '/' || ch == ',') ch = '_';
        }
        cases.push_back(std::move(c));
      }
    }
    loaded.push_back(std::move(l));
  }
  if (cases.empty()) throw prime::Error(prime::Errc::invalid_params, "no bench cases");

  std::string csv;
  if (f.mode == "ablate") {
    csv = prime::ablation_csv(
        prime::run_ablation(cases.front(), parse_doubles(f.alphas), parse_doubles(f.betas), f.reps));
  } else {
    prime::BenchConfig cfg;
    cfg.algorithms = split_list(f.algos);
    for (const auto& a : cfg.algorithms) {
      if (a != "prime" && a != "osp" && a != "flow") {
        throw prime::Error(prime::Errc::invalid_params, "unknown algorithm " + a);
      }
    }
    cfg.repetitions = f.reps;
    cfg.jobs = f.jobs;
    cfg.trace_dir = f.trace_dir;
    csv = prime::bench_csv(prime::run_bench(cases, cfg));
  }
  if (f.out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream os(f.out);
    if (!os) throw prime::Error(prime::Errc::invalid_params, "cannot write " + f.out);
    os << csv;
  }
  return kExitOk;
}

int cmd_generate(const prime::SyntheticParams& p, const std::string& out) {
  const prime::Snapshot s = prime::generate_synthetic(p);
  if (out.empty()) {
    std::cout << prime::dump_snapshot(s);
  } else {
    prime::save_snapshot(s, out);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Multi-path DEX routing over pool snapshots"};
  app.require_subcommand(1);

  RouteFlags route;
  auto* r = app.add_subcommand("route", "Route one query and print the solution JSON");
  r->add_option("--snapshot", route.snapshot, "Snapshot JSON")->required();
  r->add_option("--from", route.from, "Source token id")->required();
  r->add_option("--to", route.to, "Target token id")->required();
  r->add_option("--amount", route.amount, "Input amount in raw units")->required();
  r->add_option("--algo", route.algo, "Algorithm")->check(CLI::IsMember({"prime", "osp", "flow"}));
  r->add_option("--trace", route.trace, "Write the convergence trace CSV here");
  r->add_option("--index", route.index, "Shortcut index sidecar (read if valid, else written)");
  add_query_flags(r, route.query);

  BenchFlags bench;
  auto* b = app.add_subcommand("bench", "Benchmark algorithms over snapshots and an amount ladder");
  b->add_option("--snapshot", bench.snapshots, "Snapshot JSON (repeatable)")->required();
  b->add_option("--pair", bench.pairs, "FROM:TO query pair (repeatable)");
  b->add_option("--amounts", bench.amounts, "Amount ladder in whole source-token units");
  b->add_option("--algos", bench.algos, "Comma-separated algorithms");
  b->add_option("--mode", bench.mode, "compare or ablate")->check(CLI::IsMember({"compare", "ablate"}));
  b->add_option("--alphas", bench.alphas, "Ablation alpha values");
  b->add_option("--betas", bench.betas, "Ablation beta values");
  b->add_option("--reps", bench.reps, "Repetitions per case (median time)")->check(CLI::PositiveNumber);
  b->add_option("--jobs", bench.jobs, "Parallel cases")->check(CLI::PositiveNumber);
  b->add_option("--trace-dir", bench.trace_dir, "Directory for per-case prime traces");
  b->add_option("--out", bench.out, "CSV output path (default stdout)");
  add_query_flags(b, bench.query);

  prime::SyntheticParams gen;
  std::string gen_out;
  auto* gcmd = app.add_subcommand("generate", "Write a synthetic snapshot");
  gcmd->add_option("--seed", gen.seed, "RNG seed");
  gcmd->add_option("--tokens", gen.n_tokens, "Token count");
  gcmd->add_option("--pools", gen.n_pools, "Pool count");
  gcmd->add_option("--hub-fraction", gen.hub_fraction, "Share of tokens acting as hubs");
  gcmd->add_option("--spread", gen.reserve_spread_orders, "Orders of magnitude across reserves");
  gcmd->add_option("--piecewise-fraction", gen.piecewise_fraction, "Share of piecewise pools");
  gcmd->add_option("--out", gen_out, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (r->parsed()) return cmd_route(route);
    if (b->parsed()) return cmd_bench(bench);
    return cmd_generate(gen, gen_out);
  } catch (const prime::Error& e) {
    spdlog::error("{}: {}", prime::errc_name(e.code()), e.what());
    return e.code() == prime::Errc::no_route ? kExitNoRoute : kExitInput;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  }
}
