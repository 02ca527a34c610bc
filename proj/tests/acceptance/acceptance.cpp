// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// on the command line to run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "prime/baselines.hpp"
#include "prime/bench.hpp"
#include "prime/error.hpp"
#include "prime/io.hpp"
#include "support/instances.hpp"

using namespace prime;
using prime::testing::amount_of;
using prime::testing::below;
using prime::testing::cp_pool;
using prime::testing::named_tokens;
using prime::testing::pow10;
using prime::testing::unit;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void fail(const std::string& why) {
    if (pass) detail << "first failure: " << why << "; ";
    pass = false;
  }
};

std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

// 1. CFMM properties over random reserves, fees and inputs.
void cfmm_properties(Outcome& out) {
  const auto start = Clock::now();
  std::mt19937_64 rng(1001);
  static constexpr std::uint32_t kFees[] = {0, 1, 5, 30, 100, 300, 1000};
  std::size_t fd_real = 0;
  std::size_t fd_integer = 0;
  double worst_fd = 0.0;
  const int cases = 10000;
  for (int i = 0; i < cases; ++i) {
    const long double rin = std::pow(10.0L, 3.0L + 27.0L * unit(rng));
    const long double rout = std::pow(10.0L, 3.0L + 27.0L * unit(rng));
    const std::uint32_t fee = kFees[below(rng, 7)];
    const auto f = SwapFunction::constant_product(amount_of(rin), amount_of(rout), fee);
    const long double xr = rin * std::pow(10.0L, -6.0L + 7.0L * unit(rng));
    const Amount x = amount_of(xr);
    const std::string where = "case " + std::to_string(i);

    if (!swap_out(f, Amount(0)).is_zero()) out.fail(where + ": f(0) != 0");

    // Monotone at neighbouring and random larger inputs.
    const Amount y = swap_out(f, x);
    if (swap_out(f, x + Amount(1)) < y) out.fail(where + ": not monotone at x+1");
    const Amount x2 = amount_of(xr * (1.0L + 9.0L * unit(rng)));
    const Amount y2 = swap_out(f, x2);
    if (y2 < y) out.fail(where + ": not monotone");

    // Average rate never rises along a geometric ladder; the integer swap
    // is allowed one unit of flooring slack, the real curve none.
    Amount xa = x;
    Amount ya = y;
    for (int k = 0; k < 6; ++k) {
      const Amount xb = xa + xa;
      const Amount yb = swap_out(f, xb);
      if (yb.wide() * xa.wide() > (ya + Amount(1)).wide() * xb.wide()) out.fail(where + ": average rate rose");
      const long double ra = swap_out_real(f, xa.to_long_double()) / xa.to_long_double();
      const long double rb = swap_out_real(f, xb.to_long_double()) / xb.to_long_double();
      if (rb > ra * (1.0L + 1e-15L)) out.fail(where + ": real average rate rose");
      xa = xb;
      ya = yb;
    }

    if (y.to_long_double() <= 1e6L) continue;
    const double analytic = marginal_price(f, x);
    // Central difference of the pre-floor curve.
    const long double xv = x.to_long_double();
    const long double h = std::max(1.0L, xv * 1e-4L);
    const long double fd = (swap_out_real(f, xv + h) - swap_out_real(f, xv - h)) / (2.0L * h);
    const double rel = static_cast<double>(std::fabs(analytic - fd) / fd);
    worst_fd = std::max(worst_fd, rel);
    ++fd_real;
    if (rel > 1e-5) out.fail(where + ": analytic vs finite difference " + fmt(rel));

    // Exact integer swap with Richardson extrapolation, where the step can
    // be made large enough for flooring noise to stay below 1e-6.
    const long double gamma = (10000.0L - fee) / 10000.0L;
    const long double hi = std::min(0.01L * (rin / gamma + xv), 0.25L * xv);
    if (2.0L / (hi * analytic) > 1e-6L) continue;
    const Amount hh = amount_of(hi);
    if (!(hh + hh < x)) continue;
    const auto central = [&](const Amount& step) {
      const long double num = swap_out(f, x + step).to_long_double() - swap_out(f, x - step).to_long_double();
      return num / (2.0L * step.to_long_double());
    };
    const long double rich = (4.0L * central(hh) - central(hh + hh)) / 3.0L;
    const double rel_int = static_cast<double>(std::fabs(analytic - rich) / rich);
    worst_fd = std::max(worst_fd, rel_int);
    ++fd_integer;
    if (rel_int > 1e-5) out.fail(where + ": analytic vs integer finite difference " + fmt(rel_int));
  }
  const double secs = seconds_since(start);
  if (secs >= 10.0) out.fail("runtime " + fmt(secs) + " s");
  out.detail << cases << " cases, " << fd_real << " real and " << fd_integer
             << " integer derivative checks, worst rel err " << fmt(worst_fd) << ", " << fmt(secs) << " s";
}

// 2. find_path against exhaustive enumeration.
void find_path_exactness(Outcome& out) {
  const auto start = Clock::now();
  std::mt19937_64 rng(2002);
  int routed = 0;
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = 2 + below(rng, 9);
    const auto g = testing::random_price_consistent_graph(rng, n, 1 + below(rng, 20));
    const auto s = static_cast<TokenIndex>(below(rng, n));
    auto t = static_cast<TokenIndex>(below(rng, n - 1));
    if (t >= s) ++t;
    const Amount x = amount_of(std::pow(10.0L, 17.0L + 6.0L * unit(rng)));
    Amount best;
    for (const auto& p : enumerate_paths_oracle(g, s, t, 3)) best = std::max(best, simulate_path(p, x));
    const auto found = find_path(RoutingGraph(g), s, t, x, 0.0, 3);
    const std::string where = "graph " + std::to_string(i);
    if (best.is_zero()) {
      if (found) out.fail(where + ": path returned where none has positive output");
      continue;
    }
    ++routed;
    if (!found) {
      out.fail(where + ": no path returned");
    } else if (simulate_path(*found, x) != best) {
      out.fail(where + ": output " + simulate_path(*found, x).to_decimal() + " vs oracle " + best.to_decimal());
    }
  }
  const double secs = seconds_since(start);
  if (secs >= 30.0) out.fail("runtime " + fmt(secs) + " s");
  out.detail << "500 graphs (" << routed << " routable), exact match, " << fmt(secs) << " s";
}

// 3. ASGM against the 0.001 grid oracle.
void asgm_vs_grid(Outcome& out) {
  const auto start = Clock::now();
  std::mt19937_64 rng(3003);
  double worst_ratio = 1e9;
  double worst_spread = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto inst = testing::random_path_instance(rng, 2 + below(rng, 3), 3);
    const auto r = asgm(inst.paths, inst.x);
    const auto grid = grid_oracle(inst.paths, inst.x, GridSpec{0.001, 4});
    const double ratio = static_cast<double>(r.objective.to_long_double() / grid.objective.to_long_double());
    const double spread = (r.g_max - r.g_min) / r.g_max;
    worst_ratio = std::min(worst_ratio, ratio);
    worst_spread = std::max(worst_spread, spread);
    const std::string where = "instance " + std::to_string(i);
    if (ratio < 0.9999) out.fail(where + ": ratio " + fmt(ratio, 8));
    if (spread > 1e-6) out.fail(where + ": spread " + fmt(spread) + (r.degraded ? " (degraded)" : ""));
  }
  const double secs = seconds_since(start);
  if (secs >= 60.0) out.fail("runtime " + fmt(secs) + " s");
  out.detail << "200 instances, min J/J_grid " << fmt(worst_ratio, 10) << ", max spread " << fmt(worst_spread)
             << ", " << fmt(secs) << " s";
}

// 4. Closed-form split of the (100,100)/(200,200) pair, at 18 decimals.
void closed_form(Outcome& out) {
  const Amount u = pow10(18);
  const auto scaled = [&](std::uint64_t v) { return Amount::from_wide(u.wide() * v); };
  const auto g = SwapGraph::build(named_tokens({"S", "T"}), {cp_pool("PA", "S", "T", scaled(100), scaled(100)),
                                                             cp_pool("PB", "S", "T", scaled(200), scaled(200))});
  std::vector<MultiEdgePath> paths;
  for (EdgeIndex e : g.edges_between(0, 1)) {
    MultiEdgePath p;
    p.hops.push_back(Hop{0, 1, {make_leg(g.edge(e))}, {1.0}});
    paths.push_back(std::move(p));
  }
  const Amount x = scaled(30);
  const auto r = asgm(paths, x);
  const double w0 = r.allocation.path_weights[0];
  const double w1 = r.allocation.path_weights[1];
  if (std::fabs(w0 - 1.0 / 3.0) > 1e-4 || std::fabs(w1 - 2.0 / 3.0) > 1e-4) {
    out.fail("W = (" + fmt(w0, 9) + ", " + fmt(w1, 9) + ")");
  }
  const auto grid = grid_oracle(paths, x, GridSpec{0.001, 4});
  if (grid.units[0] < 332 || grid.units[0] > 334) out.fail("grid units " + std::to_string(grid.units[0]));
  out.detail << "W = (" << fmt(w0, 9) << ", " << fmt(w1, 9) << "), grid (" << grid.units[0] << ", "
             << grid.units[1] << ")/1000, " << r.iterations << " iterations";
}

// Three pool-disjoint routes of one and two hops with mixed depth and fees.
testing::PathInstance standard_instance() {
  const Amount u = pow10(18);
  const auto scaled = [&](std::uint64_t v) { return Amount::from_wide(u.wide() * v); };
  std::vector<Pool> pools{cp_pool("Q1", "S", "T", scaled(1000), scaled(1000), 30),
                          cp_pool("Q2", "S", "T", scaled(2500), scaled(2450), 5),
                          cp_pool("Q3", "S", "M", scaled(800), scaled(1650), 30),
                          cp_pool("Q4", "M", "T", scaled(3000), scaled(1500), 5)};
  testing::PathInstance inst{SwapGraph::build(named_tokens({"M", "S", "T"}), pools), {}, scaled(1500)};
  const SwapGraph& g = inst.graph;
  const auto s = g.require_token("S");
  const auto m = g.require_token("M");
  const auto t = g.require_token("T");
  for (EdgeIndex e : g.edges_between(s, t)) {
    MultiEdgePath p;
    p.hops.push_back(Hop{s, t, {make_leg(g.edge(e))}, {1.0}});
    inst.paths.push_back(std::move(p));
  }
  MultiEdgePath two;
  two.hops.push_back(Hop{s, m, {make_leg(g.edge(g.edges_between(s, m)[0]))}, {1.0}});
  two.hops.push_back(Hop{m, t, {make_leg(g.edge(g.edges_between(m, t)[0]))}, {1.0}});
  inst.paths.push_back(std::move(two));
  return inst;
}

// 5. Linear convergence of the ASGM gap on the standard instance.
void linear_convergence(Outcome& out) {
  const auto inst = standard_instance();
  const auto kkt = testing::kkt_optimum(inst.paths, inst.x.to_long_double());
  const long double j_star = kkt.value;
  AsgmParams params;
  params.eps_rel = 1e-9;
  params.max_iterations = 500;
  const auto r = asgm(inst.paths, inst.x, params);
  const auto& recs = r.trace.records;
  int reached = -1;
  std::vector<std::pair<double, double>> series;  // (t, log gap)
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (i > 0 && recs[i].objective < recs[i - 1].objective) out.fail("J fell at t=" + std::to_string(recs[i].t));
    const long double gap = j_star - recs[i].objective.to_long_double();
    if (reached < 0 && gap <= 1e-8L * j_star) reached = recs[i].t;
    // Gaps within a few units of J* are flooring noise, not convergence.
    if (gap > 1e-12L * j_star) series.emplace_back(recs[i].t, std::log(static_cast<double>(gap)));
  }
  if (reached < 0 || reached > 500) out.fail("gap never fell below 1e-8 J*");

  // Least squares over the second half of the noise-free gap series.
  const std::vector<std::pair<double, double>> tail(series.begin() + static_cast<long>(series.size() / 2), series.end());
  double slope = 0.0;
  double r2 = 0.0;
  if (tail.size() < 3) {
    out.fail("tail has " + std::to_string(tail.size()) + " points");
  } else {
    double mt = 0.0;
    double my = 0.0;
    for (const auto& [t, y] : tail) {
      mt += t;
      my += y;
    }
    mt /= static_cast<double>(tail.size());
    my /= static_cast<double>(tail.size());
    double stt = 0.0;
    double sty = 0.0;
    double syy = 0.0;
    for (const auto& [t, y] : tail) {
      stt += (t - mt) * (t - mt);
      sty += (t - mt) * (y - my);
      syy += (y - my) * (y - my);
    }
    slope = sty / stt;
    r2 = syy > 0.0 ? sty * sty / (stt * syy) : 0.0;
    if (!(slope < 0.0)) out.fail("tail slope " + fmt(slope));
    if (r2 < 0.9) out.fail("tail R^2 " + fmt(r2));
  }
  out.detail << "gap <= 1e-8 J* at t=" << reached << ", " << recs.size() << " records, tail " << tail.size()
             << " points, slope " << fmt(slope) << ", R^2 " << fmt(r2);
}

// 6. Dominance over the best single path and a clean audit.
void dominance(Outcome& out) {
  const auto start = Clock::now();
  std::mt19937_64 rng(6006);
  int solved = 0;
  int no_route = 0;
  int strict = 0;
  for (int i = 0; i < 300; ++i) {
    SwapGraph g = [&] {
      if (i % 3 != 2) return testing::random_price_consistent_graph(rng, 3 + below(rng, 8), 3 + below(rng, 22));
      SyntheticParams p;
      p.seed = 9000 + static_cast<std::uint64_t>(i);
      p.n_tokens = 4 + below(rng, 9);
      p.n_pools = p.n_tokens + below(rng, 2 * p.n_tokens);
      p.piecewise_fraction = 0.3;
      return snapshot_graph(generate_synthetic(p));
    }();
    const auto toks = g.tokens();
    RouteQuery q;
    q.source = toks[below(rng, toks.size())];
    do {
      q.target = toks[below(rng, toks.size())];
    } while (q.target == q.source);
    q.amount = amount_of(std::pow(10.0L, 18.0L + 4.0L * unit(rng)));
    const std::string where = "instance " + std::to_string(i);
    RouteSolution osp;
    try {
      osp = best_single_path(g, q);
    } catch (const Error& e) {
      if (e.code() != Errc::no_route) throw;
      ++no_route;
      continue;
    }
    const auto sol = prime::prime(g, q);
    ++solved;
    if (sol.total_output < osp.total_output) {
      out.fail(where + ": prime " + sol.total_output.to_decimal() + " < osp " + osp.total_output.to_decimal());
    }
    if (sol.total_output > osp.total_output) ++strict;
    const auto audit = verify_solution(sol, g);
    if (!audit.ok()) out.fail(where + ": " + audit.violations.front());
  }
  out.detail << solved << " routed (" << strict << " strictly better), " << no_route << " without route, "
             << fmt(seconds_since(start)) << " s";
}

// 7. Latency on a 10k-token / 25k-pool synthetic snapshot, Stage 0 cached.
void scale_latency(Outcome& out) {
  SyntheticParams p;
  p.seed = 7;
  p.n_tokens = 10000;
  p.n_pools = 25000;
  p.hub_fraction = 0.005;
  const auto t0 = Clock::now();
  const auto g = snapshot_graph(generate_synthetic(p));
  const double gen_s = seconds_since(t0);
  HubConfig hubs;
  hubs.k = 50;
  const auto t1 = Clock::now();
  const Preprocessed stage0 = preprocess(g, hubs, ShortcutConfig{});
  const double pre_s = seconds_since(t1);

  std::mt19937_64 rng(77);
  const auto toks = g.tokens();
  std::vector<std::pair<TokenIndex, TokenIndex>> pairs{{stage0.hubs.hubs[0], stage0.hubs.hubs[1]},
                                                       {stage0.hubs.hubs[2], stage0.hubs.hubs[0]}};
  while (pairs.size() < 6) {
    const auto a = toks[below(rng, toks.size())];
    const auto b = toks[below(rng, toks.size())];
    if (a != b) pairs.emplace_back(a, b);
  }
  double worst_ms = 0.0;
  int routed = 0;
  for (const auto& [s, t] : pairs) {
    RouteQuery q;
    q.source = s;
    q.target = t;
    q.hubs = hubs;
    q.amount = Amount::from_wide(pow10(18).wide() * 100);
    const auto start = Clock::now();
    try {
      const auto sol = prime::prime(g, q, &stage0);
      ++routed;
      if (!verify_solution(sol, g).ok()) out.fail("audit failed for " + g.token_id(s) + "->" + g.token_id(t));
    } catch (const Error& e) {
      if (e.code() != Errc::no_route) throw;
    }
    const double ms = 1e3 * seconds_since(start);
    worst_ms = std::max(worst_ms, ms);
    if (ms >= 500.0) out.fail(g.token_id(s) + "->" + g.token_id(t) + " took " + fmt(ms) + " ms");
  }
  if (routed < 2) out.fail("only " + std::to_string(routed) + " queries routed");
  out.detail << g.token_count() << " tokens, " << g.pool_count() << " pools, " << pairs.size() << " queries ("
             << routed << " routed), slowest " << fmt(worst_ms) << " ms; generate " << fmt(gen_s) << " s, stage 0 "
             << fmt(pre_s) << " s";
}

// 8. (alpha, beta) ablation on a mid-sized synthetic query.
void ablation(Outcome& out) {
  SyntheticParams p;
  p.seed = 8;
  p.n_tokens = 300;
  p.n_pools = 900;
  const auto g = snapshot_graph(generate_synthetic(p));
  BenchCase c;
  c.name = "ablation";
  c.graph = &g;
  c.query.source = g.require_token("T000");
  c.query.target = g.require_token("T001");
  c.query.amount = Amount::from_wide(pow10(18).wide() * 1000);
  const Preprocessed stage0 = preprocess(g, c.query.hubs, c.query.shortcuts);
  c.stage0 = &stage0;

  const std::vector<double> betas{0.5, 0.7, 0.9, 0.95};
  const auto beta_rows = run_ablation(c, {1e-4}, betas, 7);
  double gap_lo = 1e9;
  double gap_hi = -1e9;
  std::ostringstream times;
  for (std::size_t i = 0; i < beta_rows.size(); ++i) {
    const auto& r = beta_rows[i];
    gap_lo = std::min(gap_lo, r.gap_bp);
    gap_hi = std::max(gap_hi, r.gap_bp);
    times << (i ? "/" : "") << fmt(r.wall_time_ms);
    if (i > 0 && !(r.wall_time_ms > beta_rows[i - 1].wall_time_ms)) {
      out.fail("wall time not increasing at beta=" + fmt(r.beta));
    }
  }
  if (gap_hi - gap_lo > 0.2) out.fail("beta gap change " + fmt(gap_hi - gap_lo) + " bp");

  const auto alpha_rows = run_ablation(c, {0.01, 0.1, 0.5, 0.9}, {0.5}, 1);
  double alpha_change = 0.0;
  for (const auto& r : alpha_rows) alpha_change = std::max(alpha_change, r.gap_bp);
  if (alpha_change > 0.01) out.fail("alpha changes quality by " + fmt(alpha_change) + " bp");
  out.detail << "beta 0.5/0.7/0.9/0.95 wall ms " << times.str() << ", beta gap change " << fmt(gap_hi - gap_lo)
             << " bp, alpha gap change " << fmt(alpha_change) << " bp";
}

// 9. Shortcuts through a non-hub token beat the core graph alone.
void shortcut_value(Outcome& out) {
  std::mt19937_64 rng(9009);
  double min_gain = 1e9;
  for (int i = 0; i < 25; ++i) {
    const Amount u = pow10(18);
    const auto scaled = [&](long double v) { return amount_of(v * u.to_long_double()); };
    const long double depth = std::pow(10.0L, 3.0L + 2.0L * unit(rng));
    const long double price = std::pow(10.0L, 2.0L * unit(rng) - 1.0L);
    std::vector<Pool> pools{
        // Thin direct hub pair.
        cp_pool("P1", "A", "B", scaled(0.05L * depth), scaled(0.05L * depth * price), 30),
        // Deep route through the non-hub V.
        cp_pool("P2", "A", "V", scaled(depth), scaled(depth * 3.0L), 5),
        cp_pool("P3", "V", "B", scaled(depth * 3.0L), scaled(depth * price), 5),
        // Third hub so the hub set is not the whole graph minus V.
        cp_pool("P4", "A", "C", scaled(depth), scaled(depth), 30),
        cp_pool("P5", "C", "B", scaled(0.1L * depth), scaled(0.1L * depth * price), 30)};
    const auto g = SwapGraph::build(named_tokens({"A", "B", "C", "V"}), pools);
    RouteQuery q;
    q.source = g.require_token("A");
    q.target = g.require_token("B");
    q.amount = scaled(depth * (0.001L + 0.05L * unit(rng)));
    q.hubs.pinned = {"A", "B", "C"};
    const auto with = prime::prime(g, q);
    q.use_shortcuts = false;
    const auto core = prime::prime(g, q);
    const double gain = basis_points(with.total_output, core.total_output);
    min_gain = std::min(min_gain, gain);
    if (!(with.total_output > core.total_output)) {
      out.fail("instance " + std::to_string(i) + ": " + with.total_output.to_decimal() + " vs core " +
               core.total_output.to_decimal());
    }
    if (!verify_solution(with, g).ok()) out.fail("instance " + std::to_string(i) + ": audit failed");
  }
  out.detail << "25 instances, smallest gain " << fmt(min_gain) << " bp";
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "cfmm property suite", cfmm_properties},
      {2, "find_path exactness", find_path_exactness},
      {3, "asgm vs grid oracle", asgm_vs_grid},
      {4, "closed-form split", closed_form},
      {5, "linear convergence", linear_convergence},
      {6, "prime dominance and soundness", dominance},
      {7, "scale latency", scale_latency},
      {8, "alpha/beta ablation", ablation},
      {9, "shortcut value", shortcut_value},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && only.count(c.id) == 0) continue;
    Outcome out;
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.fail(std::string("exception: ") + e.what());
    }
    if (!out.pass) ++failed;
    std::printf("%s %d %s: %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name, out.detail.str().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
