#include "prime/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prime/error.hpp"

namespace prime {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& field, const std::string& msg) {
  throw Error(Errc::parse_error, field + ": " + msg);
}

const json& member(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) parse_fail(where, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) parse_fail(where + "." + key, "missing");
  return *it;
}

std::string string_field(const json& obj, const char* key, const std::string& where) {
  const json& v = member(obj, key, where);
  if (!v.is_string()) parse_fail(where + "." + key, "expected a string");
  return v.get<std::string>();
}

std::uint32_t uint_field(const json& obj, const char* key, const std::string& where) {
  const json& v = member(obj, key, where);
  if (!v.is_number_unsigned()) parse_fail(where + "." + key, "expected a non-negative integer");
  const auto n = v.get<std::uint64_t>();
  if (n > 0xffffffffULL) parse_fail(where + "." + key, "out of range");
  return static_cast<std::uint32_t>(n);
}

Amount amount_value(const json& v, const std::string& where) {
  if (!v.is_string()) parse_fail(where, "amounts must be decimal strings");
  try {
    return Amount::from_decimal(v.get<std::string>());
  } catch (const Error& e) {
    parse_fail(where, e.what());
  }
}

const json& array_field(const json& obj, const char* key, const std::string& where) {
  const json& v = member(obj, key, where);
  if (!v.is_array()) parse_fail(where + "." + key, "expected an array");
  return v;
}

std::string kind_name(SwapKind k) {
  return k == SwapKind::constant_product ? "constant_product" : "piecewise_liquidity";
}

json snapshot_document(const Snapshot& s) {
  std::vector<Token> tokens = s.tokens;
  std::sort(tokens.begin(), tokens.end(), [](const Token& a, const Token& b) { return a.id < b.id; });
  std::vector<Pool> pools = s.pools;
  std::sort(pools.begin(), pools.end(), [](const Pool& a, const Pool& b) { return a.id < b.id; });

  json doc;
  doc["version"] = s.version;
  doc["block_ref"] = s.block_ref;
  json& tj = doc["tokens"] = json::array();
  for (const auto& t : tokens) {
    tj.push_back({{"id", t.id}, {"symbol", t.symbol}, {"decimals", t.decimals}});
  }
  json& pj = doc["pools"] = json::array();
  for (const auto& p : pools) {
    json item = {{"id", p.id}, {"kind", kind_name(p.kind)}, {"fee_bps", p.fee_bps}, {"tokens", p.tokens}};
    if (p.kind == SwapKind::constant_product) {
      json reserves = json::array();
      for (const auto& r : p.reserves) reserves.push_back(r.to_decimal());
      item["reserves"] = std::move(reserves);
    } else {
      json dirs = json::array();
      for (const auto& d : p.directions) {
        json segs = json::array();
        for (const auto& sg : d.segments) {
          segs.push_back({{"capacity_in", sg.capacity_in.to_decimal()},
                          {"reserve_in", sg.virtual_reserve_in.to_decimal()},
                          {"reserve_out", sg.virtual_reserve_out.to_decimal()}});
        }
        dirs.push_back({{"token_in", d.token_in}, {"token_out", d.token_out}, {"segments", std::move(segs)}});
      }
      item["directions"] = std::move(dirs);
    }
    pj.push_back(std::move(item));
  }
  return doc;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Snapshot parse_snapshot(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto upto = text.substr(0, std::min<std::size_t>(e.byte, text.size()));
    const auto line = 1 + std::count(upto.begin(), upto.end(), '\n');
    throw Error(Errc::parse_error, "line " + std::to_string(line) + ": " + e.what());
  }
  if (!doc.is_object()) parse_fail("snapshot", "expected an object");
  const json& version = member(doc, "version", "snapshot");
  if (!version.is_number_integer()) parse_fail("snapshot.version", "expected an integer");
  if (version.get<long long>() != kSnapshotVersion) {
    throw Error(Errc::version_unsupported,
                "snapshot version " + std::to_string(version.get<long long>()) + " is not supported");
  }

  Snapshot s;
  s.version = kSnapshotVersion;
  if (doc.contains("block_ref")) s.block_ref = string_field(doc, "block_ref", "snapshot");

  std::set<std::string> token_ids;
  const json& tokens = array_field(doc, "tokens", "snapshot");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string where = "tokens[" + std::to_string(i) + "]";
    Token t;
    t.id = string_field(tokens[i], "id", where);
    t.symbol = tokens[i].contains("symbol") ? string_field(tokens[i], "symbol", where) : t.id;
    t.decimals = tokens[i].contains("decimals") ? uint_field(tokens[i], "decimals", where) : 18;
    if (!token_ids.insert(t.id).second) parse_fail(where + ".id", "duplicate token id " + t.id);
    s.tokens.push_back(std::move(t));
  }

  const json& pools = array_field(doc, "pools", "snapshot");
  for (std::size_t i = 0; i < pools.size(); ++i) {
    const std::string where = "pools[" + std::to_string(i) + "]";
    const json& pj = pools[i];
    Pool p;
    p.id = string_field(pj, "id", where);
    const std::string kind = string_field(pj, "kind", where);
    if (kind == "constant_product") {
      p.kind = SwapKind::constant_product;
    } else if (kind == "piecewise_liquidity") {
      p.kind = SwapKind::piecewise_liquidity;
    } else {
      parse_fail(where + ".kind", "unknown pool kind " + kind);
    }
    p.fee_bps = uint_field(pj, "fee_bps", where);
    const json& toks = array_field(pj, "tokens", where);
    for (std::size_t k = 0; k < toks.size(); ++k) {
      const std::string tw = where + ".tokens[" + std::to_string(k) + "]";
      if (!toks[k].is_string()) parse_fail(tw, "expected a token id");
      const auto id = toks[k].get<std::string>();
      if (token_ids.count(id) == 0) parse_fail(tw, "unknown token " + id);
      p.tokens.push_back(id);
    }
    if (p.kind == SwapKind::constant_product) {
      const json& res = array_field(pj, "reserves", where);
      for (std::size_t k = 0; k < res.size(); ++k) {
        p.reserves.push_back(amount_value(res[k], where + ".reserves[" + std::to_string(k) + "]"));
      }
    } else {
      const json& dirs = array_field(pj, "directions", where);
      for (std::size_t k = 0; k < dirs.size(); ++k) {
        const std::string dw = where + ".directions[" + std::to_string(k) + "]";
        DirectedSegments d;
        d.token_in = string_field(dirs[k], "token_in", dw);
        d.token_out = string_field(dirs[k], "token_out", dw);
        for (const auto* id : {&d.token_in, &d.token_out}) {
          if (token_ids.count(*id) == 0) parse_fail(dw, "unknown token " + *id);
        }
        const json& segs = array_field(dirs[k], "segments", dw);
        for (std::size_t j = 0; j < segs.size(); ++j) {
          const std::string sw = dw + ".segments[" + std::to_string(j) + "]";
          d.segments.push_back(LiquiditySegment{amount_value(member(segs[j], "capacity_in", sw), sw + ".capacity_in"),
                                                amount_value(member(segs[j], "reserve_in", sw), sw + ".reserve_in"),
                                                amount_value(member(segs[j], "reserve_out", sw), sw + ".reserve_out")});
        }
        p.directions.push_back(std::move(d));
      }
    }
    s.pools.push_back(std::move(p));
  }
  return s;
}

Snapshot load_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::parse_error, "cannot open snapshot " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  try {
    return parse_snapshot(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

std::string snapshot_hash(const Snapshot& s) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(snapshot_document(s).dump());
  return os.str();
}

std::string dump_snapshot(const Snapshot& s) {
  json doc = snapshot_document(s);
  doc["hash"] = snapshot_hash(s);
  return doc.dump(2) + "\n";
}

void save_snapshot(const Snapshot& s, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::invalid_params, "cannot write snapshot " + path);
  os << dump_snapshot(s);
}

SwapGraph snapshot_graph(const Snapshot& s) { return SwapGraph::build(s.tokens, s.pools); }

std::string solution_json(const RouteSolution& sol, const SwapGraph& g, int indent) {
  json doc;
  doc["algorithm"] = sol.algorithm;
  doc["source"] = g.token_id(sol.source);
  doc["target"] = g.token_id(sol.target);
  doc["amount_in"] = sol.amount_in.to_decimal();
  doc["total_output"] = sol.total_output.to_decimal();
  doc["tau"] = sol.tau;
  doc["disjoint"] = sol.disjoint;

  const auto shares = split_amount(sol.amount_in, sol.allocation.path_weights);
  json& paths = doc["paths"] = json::array();
  for (std::size_t p = 0; p < sol.paths.size(); ++p) {
    json hops = json::array();
    for (std::size_t h = 0; h < sol.paths[p].hops.size(); ++h) {
      const Hop& hop = sol.paths[p].hops[h];
      json legs = json::array();
      for (std::size_t k = 0; k < hop.legs.size(); ++k) {
        json pools = json::array();
        json tokens = json::array({g.token_id(hop.legs[k].from)});
        for (const auto& e : hop.legs[k].edges) {
          pools.push_back(g.pool_id(e.pool));
          tokens.push_back(g.token_id(e.to));
        }
        legs.push_back({{"weight", sol.allocation.edge_weights[p][h][k]},
                        {"pools", std::move(pools)},
                        {"tokens", std::move(tokens)}});
      }
      hops.push_back({{"token_in", g.token_id(hop.from)},
                      {"token_out", g.token_id(hop.to)},
                      {"legs", std::move(legs)}});
    }
    paths.push_back({{"weight", sol.allocation.path_weights[p]},
                     {"amount_in", shares[p].to_decimal()},
                     {"hops", std::move(hops)}});
  }

  json& plan = doc["execution_plan"] = json::array();
  for (const auto& s : sol.plan) {
    plan.push_back({{"path", s.path},
                    {"hop", s.hop},
                    {"leg", s.leg},
                    {"step", s.step},
                    {"pool", g.pool_id(s.pool)},
                    {"token_in", g.token_id(s.token_in)},
                    {"token_out", g.token_id(s.token_out)},
                    {"amount_in", s.amount_in.to_decimal()},
                    {"min_out", s.min_out.to_decimal()}});
  }

  const RouteStats& st = sol.stats;
  doc["stats"] = {{"queue_pushes", st.queue_pushes},
                  {"stage1_iterations", st.stage1_iterations},
                  {"asgm_iterations", st.asgm_iterations},
                  {"total_iterations", st.total_iterations},
                  {"objective_evaluations", st.objective_evaluations},
                  {"degraded", st.degraded},
                  {"core_tokens", st.core_tokens},
                  {"core_edges", st.core_edges},
                  {"shortcut_legs", st.shortcut_legs}};
  return doc.dump(indent);
}

namespace {

// Seeded stream with a fixed mapping from raw 64-bit draws, so a seed
// produces the same snapshot on every platform.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(eng_() % n); }

  // Index drawn with probability proportional to cumulative weights.
  std::size_t pick(const std::vector<double>& cumulative, std::size_t limit) {
    const double r = uniform() * cumulative[limit - 1];
    const auto it = std::upper_bound(cumulative.begin(),
                                     cumulative.begin() + static_cast<std::ptrdiff_t>(limit), r);
    return std::min(static_cast<std::size_t>(it - cumulative.begin()), limit - 1);
  }

 private:
  std::mt19937_64 eng_;
};

Amount amount_from(long double v) {
  if (!(v >= 1.0L)) return Amount(1);
  std::ostringstream os;
  os << std::fixed << std::setprecision(0) << std::floor(v);
  return Amount::from_decimal(os.str());
}

std::string padded(char prefix, std::size_t i, std::size_t width) {
  std::ostringstream os;
  os << prefix << std::setw(static_cast<int>(width)) << std::setfill('0') << i;
  return os.str();
}

// Segments for one direction that start at the pool's spot rate and never
// raise the marginal price at a boundary.
std::vector<LiquiditySegment> synthetic_segments(Stream& rng, long double r_in, long double r_out,
                                                 std::uint32_t fee_bps) {
  const long double gamma = static_cast<long double>(kFeeDenominator - fee_bps) / kFeeDenominator;
  const std::size_t count = 2 + rng.below(2);
  long double vin = r_in;
  long double vout = r_out;
  std::vector<LiquiditySegment> segs;
  for (std::size_t k = 0; k < count; ++k) {
    const bool last = k + 1 == count;
    const long double cap = last ? vin * 1e6L : vin * (0.05L + 0.25L * rng.uniform());
    const Amount a_in = amount_from(std::ceil(vin));
    const Amount a_out = amount_from(vout);
    const Amount a_cap = amount_from(cap);
    segs.push_back(LiquiditySegment{a_cap, a_in, a_out});
    if (last) break;
    const long double in0 = a_in.to_long_double();
    const long double end_in = in0 + a_cap.to_long_double() * gamma;
    const long double end_out = in0 * a_out.to_long_double() / end_in;
    const long double m = std::pow(10.0L, 0.6L * rng.uniform() - 0.3L);
    vin = std::ceil(m * end_in);
    vout = std::floor(m * end_out * (1.0L - 1e-9L));
  }
  return segs;
}

}  // namespace

Snapshot generate_synthetic(const SyntheticParams& p) {
  if (p.n_tokens < 2) throw Error(Errc::invalid_params, "need at least two tokens");
  if (p.n_pools + 1 < p.n_tokens) throw Error(Errc::invalid_params, "need at least n_tokens - 1 pools");
  if (!(p.hub_fraction > 0.0 && p.hub_fraction <= 1.0)) {
    throw Error(Errc::invalid_params, "hub_fraction must be in (0, 1]");
  }
  if (p.reserve_spread_orders < 0 || p.reserve_spread_orders > 40) {
    throw Error(Errc::invalid_params, "reserve_spread_orders must be in [0, 40]");
  }
  if (!(p.piecewise_fraction >= 0.0 && p.piecewise_fraction <= 1.0)) {
    throw Error(Errc::invalid_params, "piecewise_fraction must be in [0, 1]");
  }

  Stream rng(p.seed);
  const std::size_t n = p.n_tokens;
  const std::size_t width = std::max<std::size_t>(3, std::to_string(n - 1).size());
  const std::size_t pool_width = std::max<std::size_t>(3, std::to_string(p.n_pools).size());
  const auto hubs = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(p.hub_fraction * static_cast<double>(n))));

  Snapshot s;
  s.block_ref = "synthetic-" + std::to_string(p.seed);
  for (std::size_t i = 0; i < n; ++i) {
    s.tokens.push_back(Token{padded('T', i, width), "TK" + std::to_string(i), 18});
  }

  // log10 reference price per token; the extremes are pinned so the full
  // spread is always present.
  const double spread = p.reserve_spread_orders;
  std::vector<double> log_price(n);
  for (auto& lp : log_price) lp = spread * (rng.uniform() - 0.5);
  log_price[n - 1] = -spread / 2.0;
  log_price[n - 2] = spread / 2.0;

  std::vector<double> hub_cumulative(hubs);
  for (std::size_t j = 0; j < hubs; ++j) {
    hub_cumulative[j] = (j ? hub_cumulative[j - 1] : 0.0) + 1.0 / std::pow(static_cast<double>(j + 1), 1.2);
  }
  auto attach = [&](std::size_t limit) {
    if (rng.uniform() < 0.75) return rng.pick(hub_cumulative, std::min(limit, hubs));
    return rng.below(limit);
  };

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 1; i < n; ++i) pairs.emplace_back(attach(i), i);
  while (pairs.size() < p.n_pools) {
    const std::size_t a = attach(n);
    std::size_t b = rng.below(n - 1);
    if (b >= a) ++b;
    pairs.emplace_back(a, b);
  }

  static constexpr std::uint32_t kFees[] = {5, 30, 100};
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [a, b] = pairs[k];
    Pool pool;
    pool.id = padded('P', k, pool_width);
    pool.fee_bps = kFees[rng.below(3)];
    pool.tokens = {s.tokens[a].id, s.tokens[b].id};
    const long double value = std::pow(10.0L, 5.0L + static_cast<long double>(rng.uniform()));
    const long double ra = value * 1e12L / std::pow(10.0L, static_cast<long double>(log_price[a]));
    const long double rb = value * 1e12L / std::pow(10.0L, static_cast<long double>(log_price[b]));
    if (rng.uniform() < p.piecewise_fraction) {
      pool.kind = SwapKind::piecewise_liquidity;
      const long double depth = std::pow(10.0L, static_cast<long double>(rng.uniform()) - 0.5L);
      pool.directions.push_back(DirectedSegments{pool.tokens[0], pool.tokens[1],
                                                 synthetic_segments(rng, ra * depth, rb * depth, pool.fee_bps)});
      pool.directions.push_back(DirectedSegments{pool.tokens[1], pool.tokens[0],
                                                 synthetic_segments(rng, rb * depth, ra * depth, pool.fee_bps)});
    } else {
      pool.kind = SwapKind::constant_product;
      pool.reserves = {amount_from(ra), amount_from(rb)};
    }
    s.pools.push_back(std::move(pool));
  }
  return s;
}

}  // namespace prime
