#include "prime/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "prime/error.hpp"

namespace prime {

double basis_points(const Amount& out, const Amount& base) {
  if (base.is_zero()) return 0.0;
  const long double o = out.to_long_double();
  const long double b = base.to_long_double();
  return static_cast<double>(1e4L * (o - b) / b);
}

RouteSolution run_algorithm(const std::string& algorithm, const BenchCase& c) {
  if (c.graph == nullptr) throw Error(Errc::invalid_params, "bench case without a graph");
  if (algorithm == "prime") return prime(*c.graph, c.query, c.stage0);
  if (algorithm == "osp") return best_single_path(*c.graph, c.query);
  if (algorithm == "flow") return prime_flow(*c.graph, c.query);
  throw Error(Errc::invalid_params, "unknown algorithm " + algorithm);
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Timed {
  RouteSolution sol;
  double ms = 0.0;
  bool no_route = false;
};

Timed timed_run(const std::string& algorithm, const BenchCase& c, int reps) {
  Timed t;
  std::vector<double> times;
  for (int r = 0; r < std::max(1, reps); ++r) {
    const auto start = std::chrono::steady_clock::now();
    try {
      t.sol = run_algorithm(algorithm, c);
    } catch (const Error& e) {
      if (e.code() != Errc::no_route) throw;
      t.no_route = true;
    }
    const auto end = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double, std::milli>(end - start).count());
  }
  t.ms = median(times);
  return t;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::vector<BenchRow> run_bench(const std::vector<BenchCase>& cases, const BenchConfig& cfg) {
  const std::size_t n_alg = cfg.algorithms.size();
  std::vector<BenchRow> rows(cases.size() * n_alg);
  std::vector<Timed> results(rows.size());
  parallel_for(rows.size(), cfg.jobs, [&](std::size_t i) {
    results[i] = timed_run(cfg.algorithms[i % n_alg], cases[i / n_alg], cfg.repetitions);
  });

  for (std::size_t c = 0; c < cases.size(); ++c) {
    const BenchCase& bc = cases[c];
    // The osp output anchors bp_vs_baseline; compute it if not requested.
    Amount base;
    bool have_base = false;
    for (std::size_t a = 0; a < n_alg; ++a) {
      if (cfg.algorithms[a] == "osp" && !results[c * n_alg + a].no_route) {
        base = results[c * n_alg + a].sol.total_output;
        have_base = true;
      }
    }
    if (!have_base) {
      try {
        base = best_single_path(*bc.graph, bc.query).total_output;
      } catch (const Error& e) {
        if (e.code() != Errc::no_route) throw;
      }
    }
    for (std::size_t a = 0; a < n_alg; ++a) {
      const Timed& t = results[c * n_alg + a];
      BenchRow& row = rows[c * n_alg + a];
      row.case_name = bc.name;
      row.snapshot = bc.snapshot;
      row.source = bc.graph->token_id(bc.query.source);
      row.target = bc.graph->token_id(bc.query.target);
      row.amount = bc.query.amount;
      row.algorithm = cfg.algorithms[a];
      row.no_route = t.no_route;
      row.wall_time_ms = t.ms;
      if (t.no_route) continue;
      row.output = t.sol.total_output;
      row.bp_vs_baseline = basis_points(row.output, base);
      row.iterations = t.sol.stats.total_iterations;
      row.queue_pushes = t.sol.stats.queue_pushes;
      if (!cfg.trace_dir.empty() && row.algorithm == "prime") {
        std::filesystem::create_directories(cfg.trace_dir);
        std::ofstream os(std::filesystem::path(cfg.trace_dir) / (bc.name + ".csv"));
        os << t.sol.trace.to_csv();
      }
    }
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "case,snapshot,source,target,amount,algorithm,output,bp_vs_baseline,wall_time_ms,"
        "iterations,queue_pushes\n";
  for (const auto& r : rows) {
    os << r.case_name << ',' << r.snapshot << ',' << r.source << ',' << r.target << ','
       << r.amount.to_decimal() << ',' << r.algorithm << ',';
    if (r.no_route) {
      os << "no_route,,";
    } else {
      os << r.output.to_decimal() << ',' << r.bp_vs_baseline << ',';
    }
    os << r.wall_time_ms << ',' << r.iterations << ',' << r.queue_pushes << '\n';
  }
  return os.str();
}

std::vector<AblationRow> run_ablation(const BenchCase& c, const std::vector<double>& alphas,
                                      const std::vector<double>& betas, int repetitions) {
  if (c.graph == nullptr) throw Error(Errc::invalid_params, "ablation case without a graph");
  Preprocessed local;
  BenchCase base = c;
  if (base.stage0 == nullptr) {
    local = preprocess(*c.graph, c.query.hubs, c.query.shortcuts, c.query.use_shortcuts);
    base.stage0 = &local;
  }
  std::vector<AblationRow> rows;
  for (double alpha : alphas) {
    for (double beta : betas) {
      BenchCase bc = base;
      bc.query.asgm.alpha = alpha;
      bc.query.asgm.beta = beta;
      const Timed t = timed_run("prime", bc, repetitions);
      if (t.no_route) throw Error(Errc::no_route, "ablation case has no route");
      AblationRow row;
      row.alpha = alpha;
      row.beta = beta;
      row.output = t.sol.total_output;
      row.wall_time_ms = t.ms;
      row.iterations = t.sol.stats.total_iterations;
      row.objective_evaluations = t.sol.stats.objective_evaluations;
      rows.push_back(row);
    }
  }
  Amount best;
  for (const auto& r : rows) best = std::max(best, r.output);
  for (auto& r : rows) r.gap_bp = -basis_points(r.output, best);
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "alpha,beta,output,gap_bp,wall_time_ms,iterations,objective_evaluations\n";
  for (const auto& r : rows) {
    os << r.alpha << ',' << r.beta << ',' << r.output.to_decimal() << ',' << r.gap_bp << ','
       << r.wall_time_ms << ',' << r.iterations << ',' << r.objective_evaluations << '\n';
  }
  return os.str();
}

}  // namespace prime
