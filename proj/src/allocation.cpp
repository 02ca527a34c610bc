#include "prime/allocation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

#include "prime/error.hpp"

namespace prime {

MultiEdgePath MultiEdgePath::from_single(const SinglePath& p) {
  MultiEdgePath out;
  out.hops.reserve(p.legs.size());
  for (const auto& l : p.legs) out.hops.push_back(Hop{l.from, l.to, {l}, {1.0}});
  return out;
}

std::vector<TokenIndex> MultiEdgePath::token_sequence() const {
  std::vector<TokenIndex> seq;
  seq.push_back(hops.front().from);
  for (const auto& h : hops) seq.push_back(h.to);
  return seq;
}

std::vector<PoolIndex> MultiEdgePath::pools() const {
  std::vector<PoolIndex> out;
  for (const auto& h : hops) {
    for (const auto& l : h.legs) {
      for (const auto& e : l.edges) out.push_back(e.pool);
    }
  }
  return out;
}

namespace {

constexpr std::uint64_t kWeightScale = std::uint64_t{1} << 53;

std::size_t argmax_weight(std::span<const double> w) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < w.size(); ++i) {
    if (w[i] > w[best]) best = i;
  }
  return best;
}

std::vector<double> normalized(const std::vector<double>& w, std::size_t n) {
  if (w.size() != n) return std::vector<double>(n, 1.0 / static_cast<double>(n));
  double sum = 0.0;
  for (double v : w) sum += std::max(v, 0.0);
  if (!(sum > 0.0)) return std::vector<double>(n, 1.0 / static_cast<double>(n));
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::max(w[i], 0.0) / sum;
  return out;
}

std::optional<Amount> try_hop_output(const Hop& hop, std::span<const double> w, const Amount& a) {
  if (hop.legs.size() == 1) return try_leg_out(hop.legs.front(), a);
  const auto shares = split_amount(a, w);
  Amount out;
  for (std::size_t i = 0; i < hop.legs.size(); ++i) {
    if (shares[i].is_zero()) continue;
    const auto o = try_leg_out(hop.legs[i], shares[i]);
    if (!o) return std::nullopt;
    out += *o;
  }
  return out;
}

std::optional<Amount> try_path_output(const MultiEdgePath& p, const HopWeights& w, const Amount& x) {
  Amount a = x;
  for (std::size_t i = 0; i < p.hops.size(); ++i) {
    const auto o = try_hop_output(p.hops[i], w[i], a);
    if (!o) return std::nullopt;
    a = *o;
  }
  return a;
}

std::size_t best_spot_leg(const Hop& hop) {
  std::size_t best = 0;
  double best_spot = leg_spot(hop.legs[0]);
  for (std::size_t i = 1; i < hop.legs.size(); ++i) {
    const double s = leg_spot(hop.legs[i]);
    if (s > best_spot) {
      best_spot = s;
      best = i;
    }
  }
  return best;
}

enum class StepKind { converged, stepped, exhausted };

struct StepOutcome {
  StepKind kind = StepKind::converged;
  double delta = 0.0;
  int backtracks = 0;
  Amount value;
};

struct Extremes {
  std::size_t plus = 0;
  std::size_t minus = 0;
  double g_max = 0.0;
  double g_min = 0.0;
};

// p+ over every component, p- over components still holding weight.
Extremes find_extremes(const std::vector<double>& w, const std::vector<double>& g) {
  Extremes ex;
  bool have_minus = false;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] > g[ex.plus]) ex.plus = i;
    if (w[i] > 0.0 && (!have_minus || g[i] < g[ex.minus])) {
      ex.minus = i;
      have_minus = true;
    }
  }
  ex.g_max = g[ex.plus];
  ex.g_min = have_minus ? g[ex.minus] : ex.g_max;
  if (!have_minus) ex.minus = ex.plus;
  return ex;
}

// One sign-direction move of mass from `minus` to `plus` with Armijo
// backtracking. `scale` converts weight to input units for the predicted
// gain.
template <class Eval>
StepOutcome sign_step(std::vector<double>& w, const Extremes& ex, const Amount& current,
                      double scale, const AsgmParams& prm, double eps, Eval&& eval) {
  StepOutcome res;
  if (ex.plus == ex.minus || ex.g_max - ex.g_min <= eps * ex.g_max) return res;
  const double slope = scale * (ex.g_max - ex.g_min);
  double delta = std::min(prm.delta0, w[ex.minus]);
  std::vector<double> trial;
  for (;;) {
    trial = w;
    trial[ex.plus] += delta;
    trial[ex.minus] = delta >= w[ex.minus] ? 0.0 : w[ex.minus] - delta;
    const double sum = std::accumulate(trial.begin(), trial.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-12) {
      for (auto& v : trial) v /= sum;
    }
    const auto value = eval(trial);
    if (value && *value >= current + Amount::from_double_floor(prm.alpha * delta * slope)) {
      w = std::move(trial);
      res.kind = StepKind::stepped;
      res.delta = delta;
      res.value = *value;
      return res;
    }
    delta *= prm.beta;
    ++res.backtracks;
    if (delta < prm.delta_min) {
      res.kind = StepKind::exhausted;
      return res;
    }
  }
}

void check_disjoint(std::span<const MultiEdgePath> paths) {
  std::vector<PoolIndex> all;
  for (const auto& p : paths) {
    if (p.hops.empty()) throw Error(Errc::invalid_params, "path without hops");
    for (const auto& h : p.hops) {
      if (h.legs.empty()) throw Error(Errc::invalid_params, "hop without legs");
    }
    const auto pools = p.pools();
    all.insert(all.end(), pools.begin(), pools.end());
  }
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
    throw Error(Errc::invalid_params, "paths must be pairwise pool-disjoint");
  }
}

}  // namespace

namespace {

// Per-weight numerators over 2^53 summing to at most 2^53, and the index that
// takes the rounding remainder. Empty when no weight is positive.
struct Numerators {
  std::vector<std::uint64_t> nums;
  std::size_t top = 0;
};

Numerators weight_numerators(std::span<const double> weights) {
  Numerators out;
  double sum = 0.0;
  for (double v : weights) sum += std::max(v, 0.0);
  if (!(sum > 0.0)) return out;
  const std::size_t n = weights.size();
  out.nums.resize(n);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = std::max(weights[i], 0.0) / sum;
    out.nums[i] = static_cast<std::uint64_t>(std::floor(std::min(f, 1.0) * static_cast<double>(kWeightScale)));
    total += out.nums[i];
  }
  out.top = argmax_weight(weights);
  if (total > kWeightScale) out.nums[out.top] -= total - kWeightScale;
  return out;
}

Amount scaled_share(const u512& wide_x, std::uint64_t num) {
  return num == 0 ? Amount{} : Amount::from_wide((wide_x * num) >> 53);
}

}  // namespace

std::vector<Amount> split_amount(const Amount& x, std::span<const double> weights) {
  const std::size_t n = weights.size();
  std::vector<Amount> shares(n);
  if (n == 0) {
    if (!x.is_zero()) throw Error(Errc::invalid_params, "cannot split a positive amount zero ways");
    return shares;
  }
  const Numerators nw = weight_numerators(weights);
  if (nw.nums.empty()) {
    shares[0] = x;
    return shares;
  }
  Amount assigned;
  const u512 wide_x = x.wide();
  for (std::size_t i = 0; i < n; ++i) {
    shares[i] = scaled_share(wide_x, nw.nums[i]);
    assigned += shares[i];
  }
  shares[nw.top] += x - assigned;
  return shares;
}

Amount path_output(const MultiEdgePath& p, const Amount& x) {
  HopWeights w;
  w.reserve(p.hops.size());
  for (const auto& h : p.hops) w.push_back(normalized(h.weights, h.legs.size()));
  return path_output(p, w, x);
}

Amount path_output(const MultiEdgePath& p, const HopWeights& w, const Amount& x) {
  if (w.size() != p.hops.size()) throw Error(Errc::invalid_params, "hop weight count mismatch");
  Amount a = x;
  for (std::size_t i = 0; i < p.hops.size(); ++i) {
    const Hop& hop = p.hops[i];
    if (hop.legs.size() == 1) {
      a = leg_out(hop.legs.front(), a);
      continue;
    }
    const auto shares = split_amount(a, w[i]);
    Amount out;
    for (std::size_t k = 0; k < hop.legs.size(); ++k) {
      if (!shares[k].is_zero()) out += leg_out(hop.legs[k], shares[k]);
    }
    a = out;
  }
  return a;
}

double path_marginal_price(const MultiEdgePath& p, const Amount& a) {
  HopWeights w;
  w.reserve(p.hops.size());
  for (const auto& h : p.hops) w.push_back(normalized(h.weights, h.legs.size()));
  return path_marginal_price(p, w, a);
}

double path_marginal_price(const MultiEdgePath& p, const HopWeights& w, const Amount& a) {
  if (w.size() != p.hops.size()) throw Error(Errc::invalid_params, "hop weight count mismatch");
  Amount in = a;
  double d = 1.0;
  for (std::size_t i = 0; i < p.hops.size(); ++i) {
    const Hop& hop = p.hops[i];
    if (hop.legs.size() == 1) {
      d *= leg_marginal(hop.legs.front(), in);
      in = leg_out(hop.legs.front(), in);
      continue;
    }
    const auto wn = normalized(w[i], hop.legs.size());
    const auto shares = split_amount(in, wn);
    double hop_d = 0.0;
    Amount out;
    for (std::size_t k = 0; k < hop.legs.size(); ++k) {
      if (wn[k] > 0.0) hop_d += wn[k] * leg_marginal(hop.legs[k], shares[k]);
      if (!shares[k].is_zero()) out += leg_out(hop.legs[k], shares[k]);
    }
    d *= hop_d;
    in = out;
  }
  return d;
}

Amount objective(std::span<const MultiEdgePath> paths, const Allocation& alloc, const Amount& x) {
  if (alloc.path_weights.size() != paths.size() || alloc.edge_weights.size() != paths.size()) {
    throw Error(Errc::invalid_params, "allocation does not match the path set");
  }
  const auto shares = split_amount(x, alloc.path_weights);
  Amount total;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (!shares[i].is_zero()) total += path_output(paths[i], alloc.edge_weights[i], shares[i]);
  }
  return total;
}

void AsgmParams::validate() const {
  const bool ok = alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0 && delta0 > 0.0 &&
                  delta_min > 0.0 && max_iterations > 0 && eps_rel > 0.0 &&
                  inner_tolerance_factor > 0.0;
  if (!ok) throw Error(Errc::invalid_params, "ASGM parameters out of range");
}

std::string ConvergenceTrace::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "t,J,g_max,g_min,delta\n";
  for (const auto& r : records) {
    os << r.t << ',' << r.objective.to_decimal() << ',' << r.g_max << ',' << r.g_min << ','
       << r.delta << '\n';
  }
  return os.str();
}

Amount relax_hop(const Hop& hop, std::vector<double>& weights, const Amount& input,
                 const AsgmParams& params, double eps_rel) {
  const std::size_t m = hop.legs.size();
  weights = normalized(weights, m);
  if (m == 1) {
    weights = {1.0};
    return leg_out(hop.legs.front(), input);
  }
  if (input.is_zero()) {
    std::fill(weights.begin(), weights.end(), 0.0);
    weights[best_spot_leg(hop)] = 1.0;
    return Amount{};
  }
  auto eval = [&](const std::vector<double>& w) { return try_hop_output(hop, w, input); };
  auto current = eval(weights);
  if (!current) {
    // Start from the best feasible single leg.
    for (std::size_t k = 0; k < m; ++k) {
      std::vector<double> one_hot(m, 0.0);
      one_hot[k] = 1.0;
      const auto v = eval(one_hot);
      if (v && (!current || *current < *v)) {
        current = v;
        weights = one_hot;
      }
    }
    if (!current) throw Error(Errc::capacity_exceeded, "hop input exceeds every leg's capacity");
  }
  std::vector<double> g(m);
  const double scale = input.to_double();
  for (int it = 0; it < params.max_iterations; ++it) {
    const auto shares = split_amount(input, weights);
    for (std::size_t k = 0; k < m; ++k) g[k] = leg_marginal(hop.legs[k], shares[k]);
    const auto step = sign_step(weights, find_extremes(weights, g), *current, scale, params,
                                eps_rel, eval);
    if (step.kind != StepKind::stepped) break;
    current = step.value;
  }
  return *current;
}

namespace {

class AsgmSolver {
 public:
  AsgmSolver(std::span<const MultiEdgePath> paths, const Amount& x, const AsgmParams& prm,
             std::span<const double> initial)
      : paths_(paths), x_(x), prm_(prm), n_(paths.size()) {
    hop_weights_.resize(n_);
    for (std::size_t p = 0; p < n_; ++p) {
      for (const auto& h : paths_[p].hops) {
        hop_weights_[p].push_back(normalized(h.weights, h.legs.size()));
      }
    }
    weights_ = initial.size() == n_ ? normalized({initial.begin(), initial.end()}, n_)
                                    : std::vector<double>(n_, 1.0 / static_cast<double>(n_));
    cache_share_.assign(n_, Amount{});
    cache_out_.assign(n_, Amount{});
    cache_valid_.assign(n_, false);
    relaxed_share_.assign(n_, std::nullopt);
    wide_x_ = x_.wide();
    split_nums_.assign(n_, 0);
    split_floor_.assign(n_, Amount{});
    last_w_.assign(n_, 0.0);
    recent_.assign(n_, Recent{});
    pending_.resize(n_);
    std::iota(pending_.begin(), pending_.end(), std::size_t{0});
    grad_share_.assign(n_, Amount{});
    grad_value_.assign(n_, 0.0);
    grad_valid_.assign(n_, false);
  }

  AsgmResult run() {
    AsgmResult res;
    ensure_feasible_start();
    relax_all();
    Amount j = *evaluate(weights_);
    auto g = gradients();
    auto ex = find_extremes(weights_, g);
    res.trace.records.push_back(TraceRecord{0, j, ex.g_max, ex.g_min, 0.0});

    if (n_ > 1) {
      for (int t = 1; t <= prm_.max_iterations; ++t) {
        auto eval = [this](const std::vector<double>& w) { return evaluate(w); };
        const auto step = sign_step(weights_, ex, j, x_.to_double(), prm_, prm_.eps_rel, eval);
        res.max_backtracks = std::max(res.max_backtracks, step.backtracks);
        if (step.kind == StepKind::converged) break;
        if (step.kind == StepKind::exhausted) {
          res.degraded = true;
          break;
        }
        j = step.value;
        res.iterations = t;
        j = relax_all_monotone(j);
        g = gradients();
        ex = find_extremes(weights_, g);
        res.trace.records.push_back(TraceRecord{t, j, ex.g_max, ex.g_min, step.delta});
      }
    }
    res.allocation.path_weights = weights_;
    res.allocation.edge_weights = hop_weights_;
    res.objective = j;
    res.g_max = ex.g_max;
    res.g_min = ex.g_min;
    res.tau = ex.g_max;
    res.objective_evaluations = evaluations_;
    return res;
  }

 private:
  // Incremental split_amount. Numerators are recomputed only for weights that
  // moved, floors are memoised per path with their sum kept current, and the
  // remainder path's share is x minus every other floor, which equals
  // split_amount's result. Paths whose numerator moved queue in changed_.
  void update_split(const std::vector<double>& w) {
    double sum = 0.0;
    for (double v : w) sum += std::max(v, 0.0);
    if (!(sum > 0.0)) {
      std::vector<double> first(n_, 0.0);
      first[0] = 1.0;
      update_split(first);
      return;
    }
    const bool full = !(sum == last_sum_);
    for (std::size_t i = 0; i < n_; ++i) {
      if (!full && w[i] == last_w_[i]) continue;
      last_w_[i] = w[i];
      const double f = std::max(w[i], 0.0) / sum;
      const auto num = static_cast<std::uint64_t>(
          std::floor(std::min(f, 1.0) * static_cast<double>(kWeightScale)));
      if (num == split_nums_[i]) continue;
      floor_sum_ -= split_floor_[i];
      split_nums_[i] = num;
      split_floor_[i] = scaled_share(wide_x_, num);
      floor_sum_ += split_floor_[i];
      changed_.push_back(i);
    }
    last_sum_ = sum;
    top_ = argmax_weight(w);
  }

  Amount share_of(std::size_t p) const {
    return p == top_ ? x_ - (floor_sum_ - split_floor_[p]) : split_floor_[p];
  }

  std::vector<Amount> split(const std::vector<double>& w) {
    update_split(w);
    std::vector<Amount> shares(split_floor_);
    shares[top_] = share_of(top_);
    return shares;
  }

  // Backtracking revisits a handful of shares per path, notably the
  // remainder path's, which moves by a unit or two between trials.
  static constexpr std::size_t kRecent = 4;

  std::optional<Amount> recent_output(std::size_t p, const Amount& share) const {
    const auto& r = recent_[p];
    for (std::size_t i = 0; i < r.size; ++i) {
      if (r.share[i] == share) return r.out[i];
    }
    return std::nullopt;
  }

  void remember_output(std::size_t p, const Amount& share, const Amount& out) {
    auto& r = recent_[p];
    r.share[r.next] = share;
    r.out[r.next] = out;
    r.next = (r.next + 1) % kRecent;
    r.size = std::min(r.size + 1, kRecent);
  }

  void drop(std::size_t p) {
    if (cache_valid_[p]) out_sum_ -= cache_out_[p];
    cache_valid_[p] = false;
  }

  void invalidate(std::size_t p) {
    drop(p);
    recent_[p] = Recent{};
    pending_.push_back(p);
  }

  // J at `w`. Only paths whose share may have moved are re-simulated: those
  // with a new numerator, the old and new remainder paths, and paths whose
  // cached output was invalidated.
  std::optional<Amount> evaluate(const std::vector<double>& w) {
    ++evaluations_;
    update_split(w);
    std::vector<std::size_t> work;
    work.swap(pending_);
    work.insert(work.end(), changed_.begin(), changed_.end());
    changed_.clear();
    work.push_back(eval_top_);
    work.push_back(top_);
    eval_top_ = top_;
    bool ok = true;
    for (std::size_t p : work) {
      const Amount share = share_of(p);
      if (cache_valid_[p] && cache_share_[p] == share) continue;
      drop(p);
      std::optional<Amount> out;
      if (share.is_zero()) {
        out = Amount{};
      } else {
        out = recent_output(p, share);
        if (!out) {
          out = try_path_output(paths_[p], hop_weights_[p], share);
          if (out) remember_output(p, share, *out);
        }
      }
      if (!out) {
        pending_.push_back(p);
        ok = false;
        continue;
      }
      cache_share_[p] = share;
      cache_out_[p] = *out;
      cache_valid_[p] = true;
      out_sum_ += *out;
    }
    if (!ok) return std::nullopt;
    return out_sum_;
  }

  void ensure_feasible_start() {
    if (evaluate(weights_)) return;
    std::optional<Amount> best;
    std::vector<double> best_w;
    for (std::size_t p = 0; p < n_; ++p) {
      std::vector<double> vertex(n_, 0.0);
      vertex[p] = 1.0;
      const auto v = evaluate(vertex);
      if (v && (!best || *best < *v)) {
        best = v;
        best_w = vertex;
      }
    }
    if (!best) throw Error(Errc::capacity_exceeded, "no path can absorb the input amount");
    weights_ = best_w;
  }

  bool has_parallel_legs(std::size_t p) const {
    for (const auto& h : paths_[p].hops) {
      if (h.legs.size() > 1) return true;
    }
    return false;
  }

  void relax_path(std::size_t p, const Amount& share) {
    const double eps = prm_.eps_rel * prm_.inner_tolerance_factor;
    Amount a = share;
    for (std::size_t i = 0; i < paths_[p].hops.size(); ++i) {
      a = relax_hop(paths_[p].hops[i], hop_weights_[p][i], a, prm_, eps);
    }
    relaxed_share_[p] = share;
    invalidate(p);
    grad_valid_[p] = false;
  }

  struct Saved {
    std::size_t path;
    HopWeights weights;
    std::optional<Amount> share;
  };

  // Only paths whose input changed since their last relaxation move. Returns
  // the prior state of every path it relaxed.
  std::vector<Saved> relax_all() {
    const auto shares = split(weights_);
    std::vector<Saved> saved;
    for (std::size_t p = 0; p < n_; ++p) {
      if (relaxed_share_[p] == shares[p]) continue;
      if (!has_parallel_legs(p)) {
        relaxed_share_[p] = shares[p];
        continue;
      }
      saved.push_back(Saved{p, hop_weights_[p], relaxed_share_[p]});
      relax_path(p, shares[p]);
    }
    return saved;
  }

  // Hop relaxation can lose a few units to flooring when an upstream hop's
  // larger output is re-split downstream; keep the old weights then.
  Amount relax_all_monotone(const Amount& before) {
    auto saved = relax_all();
    const auto after = evaluate(weights_);
    if (after && *after >= before) return *after;
    for (auto& s : saved) {
      hop_weights_[s.path] = std::move(s.weights);
      relaxed_share_[s.path] = s.share;
      invalidate(s.path);
      grad_valid_[s.path] = false;
    }
    return *evaluate(weights_);
  }

  std::vector<double> gradients() {
    const auto shares = split(weights_);
    std::vector<double> g(n_);
    for (std::size_t p = 0; p < n_; ++p) {
      if (!grad_valid_[p] || grad_share_[p] != shares[p]) {
        grad_value_[p] = path_marginal_price(paths_[p], hop_weights_[p], shares[p]);
        grad_share_[p] = shares[p];
        grad_valid_[p] = true;
      }
      g[p] = grad_value_[p];
    }
    return g;
  }

  std::span<const MultiEdgePath> paths_;
  Amount x_;
  AsgmParams prm_;
  std::size_t n_;
  std::vector<double> weights_;
  std::vector<HopWeights> hop_weights_;
  std::vector<Amount> cache_share_;
  std::vector<Amount> cache_out_;
  std::vector<bool> cache_valid_;
  std::vector<std::optional<Amount>> relaxed_share_;
  u512 wide_x_;
  std::vector<std::uint64_t> split_nums_;
  std::vector<Amount> split_floor_;
  Amount floor_sum_;
  std::vector<double> last_w_;
  double last_sum_ = 0.0;
  std::size_t top_ = 0;
  std::size_t eval_top_ = 0;
  std::vector<std::size_t> changed_;
  std::vector<std::size_t> pending_;
  Amount out_sum_;
  struct Recent {
    std::array<Amount, kRecent> share{};
    std::array<Amount, kRecent> out{};
    std::size_t size = 0;
    std::size_t next = 0;
  };
  std::vector<Recent> recent_;
  std::vector<Amount> grad_share_;
  std::vector<double> grad_value_;
  std::vector<bool> grad_valid_;
  std::size_t evaluations_ = 0;
};

}  // namespace

AsgmResult asgm(std::span<const MultiEdgePath> paths, const Amount& x, const AsgmParams& params,
                std::span<const double> initial_weights) {
  params.validate();
  if (paths.empty()) throw Error(Errc::invalid_params, "ASGM needs at least one path");
  if (x.is_zero()) throw Error(Errc::invalid_params, "ASGM input must be positive");
  check_disjoint(paths);
  return AsgmSolver(paths, x, params, initial_weights).run();
}

}  // namespace prime
