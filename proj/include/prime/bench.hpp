#pragma once

#include <string>
#include <vector>

#include "prime/baselines.hpp"

namespace prime {

struct BenchCase {
  std::string name;
  std::string snapshot;  // label for the report
  const SwapGraph* graph = nullptr;
  const Preprocessed* stage0 = nullptr;  // optional cached Stage 0
  RouteQuery query;
};

struct BenchRow {
  std::string case_name;
  std::string snapshot;
  std::string source;
  std::string target;
  Amount amount;
  std::string algorithm;
  Amount output;
  double bp_vs_baseline = 0.0;  // against the osp output of the same case
  double wall_time_ms = 0.0;    // median over repetitions
  long long iterations = 0;
  std::size_t queue_pushes = 0;
  bool no_route = false;
};

struct BenchConfig {
  std::vector<std::string> algorithms{"prime", "osp"};
  int repetitions = 1;
  int jobs = 1;
  std::string trace_dir;  // when set, prime traces go to <dir>/<case>.csv
};

// 10^4 * (out - base) / base; 0 when base is zero.
double basis_points(const Amount& out, const Amount& base);

// Runs one algorithm ("prime", "osp" or "flow").
RouteSolution run_algorithm(const std::string& algorithm, const BenchCase& c);

std::vector<BenchRow> run_bench(const std::vector<BenchCase>& cases, const BenchConfig& cfg);
std::string bench_csv(const std::vector<BenchRow>& rows);

struct AblationRow {
  double alpha = 0.0;
  double beta = 0.0;
  Amount output;
  double gap_bp = 0.0;  // below the best output of the sweep
  double wall_time_ms = 0.0;
  long long iterations = 0;
  std::size_t objective_evaluations = 0;
};

// prime over every (alpha, beta) pair on one case, Stage 0 shared.
std::vector<AblationRow> run_ablation(const BenchCase& c, const std::vector<double>& alphas,
                                      const std::vector<double>& betas, int repetitions);
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace prime
