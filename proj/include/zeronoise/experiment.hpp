#pragma once

// Experiment orchestration behind the command-line tool: configuration with
// defaults < config file < flags precedence, the field/flow/sde exports,
// the analysis pipelines over stored samples, and the self-check suite.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zeronoise/depauw_field.hpp"
#include "zeronoise/diagnostics.hpp"
#include "zeronoise/exact_flow.hpp"
#include "zeronoise/io.hpp"
#include "zeronoise/measure_stats.hpp"
#include "zeronoise/sde.hpp"

namespace zeronoise {

using json = nlohmann::ordered_json;

/// Generic start point (frac(sqrt 2), frac(sqrt 3)).
inline TorusPoint generic_point() {
  return TorusPoint(std::numbers::sqrt2 - 1.0, std::numbers::sqrt3 - 1.0);
}

struct ExperimentConfig {
  std::string name = "run";
  double horizon = 1.0;
  int max_depth = 12;
  SdeConfig sde{};
  bool save_times_set = false;
  bool zero_drift = false;
  std::size_t bins = 16;
  std::vector<double> nu_ladder{0.08, 0.04, 0.02};
  TorusPoint x0 = generic_point();
  std::string out_dir = ".";
  // field / flow exports
  double t = 1.0;
  std::size_t grid_n = 64;
  double t_from = 0.0;
  double t_to = 1.0;
  std::size_t steps = 256;
  std::size_t quad_substeps = 4;

  DepauwField field() const { return DepauwField(horizon, max_depth); }

  /// Resolves defaults that depend on other settings.
  void finalize() {
    if (!save_times_set) sde.save_times = {horizon};
    if (sde.initial.kind == InitialLaw::Kind::point) sde.initial.point = x0;
  }
};

namespace detail {
inline std::size_t to_count(const std::string &v, const std::string &key) {
  double d = to_double(v, key);
  if (!(d >= 0.0) || d != std::floor(d) || d > 1e15) throw UsageError(key + " must be a non-negative integer");
  return static_cast<std::size_t>(d);
}
inline bool to_bool(const std::string &v, const std::string &key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError(key + " must be true or false");
}
inline TorusPoint to_point(const std::string &v, const std::string &key) {
  auto xs = to_double_list(v, key);
  if (xs.size() != 2) throw UsageError(key + " needs two comma-separated coordinates");
  return TorusPoint(xs[0], xs[1]);
}
} // namespace detail

/// Applies one "key = value" setting; unknown keys are usage errors.
inline void apply_setting(ExperimentConfig &c, const std::string &key, const std::string &value) {
  using namespace detail;
  if (key == "name") c.name = value;
  else if (key == "T") {
    c.horizon = to_double(value, key);
    if (!(c.horizon > 0.0)) throw UsageError("T must be positive");
  } else if (key == "K_max") {
    auto k = to_count(value, key);
    if (k > 40) throw UsageError("K_max must be at most 40");
    c.max_depth = static_cast<int>(k);
  } else if (key == "nu") {
    c.sde.nu = to_double(value, key);
    if (!(c.sde.nu >= 0.0)) throw UsageError("nu must be >= 0");
  } else if (key == "n_paths") {
    c.sde.n_paths = to_count(value, key);
    if (c.sde.n_paths == 0) throw UsageError("n_paths must be >= 1");
  } else if (key == "dt_base") {
    c.sde.dt_base = to_double(value, key);
    if (!(c.sde.dt_base > 0.0)) throw UsageError("dt_base must be positive");
  } else if (key == "steps_per_stage_min") {
    c.sde.steps_per_stage_min = to_count(value, key);
    if (c.sde.steps_per_stage_min == 0) throw UsageError("steps_per_stage_min must be >= 1");
  } else if (key == "seed") c.sde.seed = static_cast<std::uint64_t>(to_count(value, key));
  else if (key == "initial") {
    if (value == "uniform") c.sde.initial.kind = InitialLaw::Kind::uniform;
    else if (value == "point") c.sde.initial.kind = InitialLaw::Kind::point;
    else throw UsageError("initial must be 'uniform' or 'point'");
  } else if (key == "x0") c.x0 = to_point(value, key);
  else if (key == "save_times") {
    c.sde.save_times = to_double_list(value, key);
    if (!std::is_sorted(c.sde.save_times.begin(), c.sde.save_times.end()))
      throw UsageError("save_times must be sorted");
    c.save_times_set = true;
  } else if (key == "integrator") {
    try {
      c.sde.integrator = integrator_from_string(value);
    } catch (const std::invalid_argument &e) {
      throw UsageError(e.what());
    }
  } else if (key == "threads") c.sde.threads = static_cast<unsigned>(to_count(value, key));
  else if (key == "record_paths") c.sde.record_paths = to_bool(value, key);
  else if (key == "zero_drift") c.zero_drift = to_bool(value, key);
  else if (key == "bins") {
    c.bins = to_count(value, key);
    if (c.bins == 0) throw UsageError("bins must be >= 1");
  } else if (key == "nu_ladder") c.nu_ladder = to_double_list(value, key);
  else if (key == "out") c.out_dir = value;
  else if (key == "t") c.t = to_double(value, key);
  else if (key == "grid_n") c.grid_n = to_count(value, key);
  else if (key == "t_from") c.t_from = to_double(value, key);
  else if (key == "t_to") c.t_to = to_double(value, key);
  else if (key == "steps") c.steps = to_count(value, key);
  else if (key == "quad_substeps") c.quad_substeps = std::max<std::size_t>(1, to_count(value, key));
  else throw UsageError("unknown setting '" + key + "'");
}

inline void apply_config_file(ExperimentConfig &c, const std::string &file) {
  std::vector<std::pair<std::string, std::string>> kv;
  try {
    kv = read_key_values(file);
  } catch (const ParseError &e) {
    throw UsageError(e.what());
  }
  for (const auto &[k, v] : kv) apply_setting(c, k, v);
}

inline json config_json(const ExperimentConfig &c) {
  return json{{"name", c.name},
              {"T", c.horizon},
              {"K_max", c.max_depth},
              {"nu", c.sde.nu},
              {"n_paths", c.sde.n_paths},
              {"dt_base", c.sde.dt_base},
              {"steps_per_stage_min", c.sde.steps_per_stage_min},
              {"seed", c.sde.seed},
              {"initial", c.sde.initial.kind == InitialLaw::Kind::point ? "point" : "uniform"},
              {"x0", {c.x0[0], c.x0[1]}},
              {"save_times", c.sde.save_times},
              {"integrator", to_string(c.sde.integrator)},
              {"record_paths", c.sde.record_paths},
              {"zero_drift", c.zero_drift},
              {"bins", c.bins},
              {"nu_ladder", c.nu_ladder},
              {"t", c.t},
              {"grid_n", c.grid_n},
              {"t_from", c.t_from},
              {"t_to", c.t_to},
              {"steps", c.steps},
              {"quad_substeps", c.quad_substeps}};
}

inline std::ofstream open_output(const std::filesystem::path &p) {
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
  return os;
}

/// Drift sampled at the centres ((i+1/2)/n, (j+1/2)/n) of an n x n grid.
inline void write_field_csv(const ExperimentConfig &c, std::ostream &os) {
  const auto f = c.field();
  if (!(c.t > 0.0 && c.t <= c.horizon)) throw UsageError("field: t must lie in (0,T]");
  if (c.grid_n == 0) throw UsageError("field: grid_n must be >= 1");
  os << "t,x1,x2,b1,b2\n";
  const double h = 1.0 / static_cast<double>(c.grid_n);
  for (std::size_t i = 0; i < c.grid_n; ++i)
    for (std::size_t j = 0; j < c.grid_n; ++j) {
      TorusPoint x((static_cast<double>(i) + 0.5) * h, (static_cast<double>(j) + 0.5) * h);
      Vec2 b = eval_bdp(f, c.t, x);
      os << fmt17(c.t) << ',' << fmt17(x[0]) << ',' << fmt17(x[1]) << ',' << fmt17(b[0]) << ','
         << fmt17(b[1]) << '\n';
    }
}

/// Black density rho^B(t, .) on the same grid.
inline void write_density_csv(const ExperimentConfig &c, std::ostream &os) {
  const auto f = c.field();
  if (!(c.t > 0.0 && c.t <= c.horizon)) throw UsageError("field: t must lie in (0,T]");
  os << "t,x1,x2,rhoB\n";
  const double h = 1.0 / static_cast<double>(c.grid_n);
  for (std::size_t i = 0; i < c.grid_n; ++i)
    for (std::size_t j = 0; j < c.grid_n; ++j) {
      TorusPoint x((static_cast<double>(i) + 0.5) * h, (static_cast<double>(j) + 0.5) * h);
      os << fmt17(c.t) << ',' << fmt17(x[0]) << ',' << fmt17(x[1]) << ',' << rho_B(f, c.t, x) << '\n';
    }
}

/// Exact trajectory from x0 at t_from, sampled at steps + 1 equispaced times.
inline void write_flow_csv(const ExperimentConfig &c, std::ostream &os) {
  const auto f = c.field();
  auto valid = [&](double s) { return s >= 0.0 && s <= c.horizon; };
  if (!valid(c.t_from) || !valid(c.t_to)) throw UsageError("flow: times must lie in [0,T]");
  if (c.steps == 0) throw UsageError("flow: steps must be >= 1");
  os << "t,x1,x2\n";
  const std::size_t n = c.t_from == c.t_to ? 0 : c.steps;
  TorusPoint x = c.x0;
  double prev = c.t_from;
  for (std::size_t i = 0; i <= n; ++i) {
    double s = i == n ? c.t_to
                      : c.t_from + (c.t_to - c.t_from) * static_cast<double>(i) / static_cast<double>(n);
    x = flow(f, prev, s, x);
    prev = s;
    os << fmt17(s) << ',' << fmt17(x[0]) << ',' << fmt17(x[1]) << '\n';
  }
}

inline PathEnsemble run_ensemble(const ExperimentConfig &c) {
  if (c.zero_drift) return simulate(ZeroField{c.horizon}, c.sde);
  return simulate(c.field(), c.sde);
}

inline void write_samples(const PathEnsemble &e, std::ostream &os) {
  write_samples_header(os);
  for (std::size_t i = 0; i < e.n_paths; ++i)
    for (std::size_t j = 0; j < e.save_times.size(); ++j)
      write_sample_row(os, {i, e.save_times[j], e.at(i, j)});
}

/// Full recorded paths in the samples layout (one row per node).
inline void write_paths(const PathEnsemble &e, std::ostream &os) {
  write_samples_header(os);
  for (std::size_t i = 0; i < e.paths.size(); ++i)
    for (std::size_t j = 0; j < e.paths[i].size(); ++j)
      write_sample_row(os, {i, e.paths[i].times()[j], e.paths[i].points()[j]});
}

inline json manifest_json(const ExperimentConfig &c, double wall_time_s) {
  return json{{"name", c.name},
              {"seed", c.sde.seed},
              {"nu", c.sde.nu},
              {"n_paths", c.sde.n_paths},
              {"dt_base", c.sde.dt_base},
              {"integrator", to_string(c.sde.integrator)},
              {"save_times", c.sde.save_times},
              {"wall_time_s", wall_time_s},
              {"config", config_json(c)}};
}

/// Runs the SDE and writes samples.csv (or paths.csv with full paths) and
/// manifest.json into the output directory.
inline json run_sde_command(const ExperimentConfig &c) {
  namespace fs = std::filesystem;
  auto start = std::chrono::steady_clock::now();
  PathEnsemble e = run_ensemble(c);
  const fs::path dir(c.out_dir);
  {
    auto os = open_output(dir / "samples.csv");
    write_samples(e, os);
  }
  if (c.sde.record_paths) {
    auto os = open_output(dir / "paths.csv");
    write_paths(e, os);
  }
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json m = manifest_json(c, wall);
  auto os = open_output(dir / "manifest.json");
  os << m.dump(2) << '\n';
  return m;
}

// ---------------------------------------------------------------------------
// Analysis over stored samples.

struct SampleTable {
  std::map<std::size_t, std::vector<std::pair<double, TorusPoint>>> by_path;
  std::vector<double> times;

  explicit SampleTable(const std::vector<SampleRow> &rows) {
    for (const auto &r : rows) {
      by_path[r.path_id].emplace_back(r.t, r.x);
      times.push_back(r.t);
    }
    for (auto &[id, v] : by_path)
      std::stable_sort(v.begin(), v.end(), [](const auto &a, const auto &b) { return a.first < b.first; });
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
  }

  std::vector<TorusPoint> marginal(double t) const {
    std::vector<TorusPoint> out;
    for (const auto &[id, v] : by_path)
      for (const auto &[s, x] : v)
        if (s == t) out.push_back(x);
    return out;
  }

  /// (first sample, last sample) of every path.
  std::vector<SamplePair> endpoints() const {
    std::vector<SamplePair> out;
    for (const auto &[id, v] : by_path) out.emplace_back(v.front().second, v.back().second);
    return out;
  }
};

inline double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Median and mean over bins of the spread of the conditional law; bins
/// with fewer than two members are skipped.
struct BinSpreadSummary {
  double median = 0.0;
  double mean = 0.0;
  std::size_t bins_used = 0;
};

inline BinSpreadSummary conditional_spread(const ConditionalFamily &fam, std::size_t max_pairs = 2000) {
  std::vector<double> vals;
  for (std::size_t b = 0; b < fam.bins(); ++b) {
    if (fam.count(b) < 2) continue;
    vals.push_back(spread(fam.conditional(b), max_pairs).value);
  }
  BinSpreadSummary s;
  s.bins_used = vals.size();
  if (!vals.empty()) {
    double sum = 0.0;
    for (double v : vals) sum += v;
    s.mean = sum / static_cast<double>(vals.size());
    s.median = median(vals);
  }
  return s;
}

inline json metric(double value, std::size_t n) { return json{{"value", value}, {"n", n}}; }

inline json metric_ci(double value, std::size_t n, const Interval &ci) {
  return json{{"value", value}, {"n", n}, {"ci_lo", ci.lo}, {"ci_hi", ci.hi}};
}

inline json branching_metrics(const std::vector<TorusPoint> &xt) {
  json m;
  const double frac = branching_fraction(xt, dyadic_density(0));
  m["black_fraction"] = metric_ci(frac, xt.size(), wilson_interval(frac, xt.size()));
  auto sp = spread(EmpiricalMeasure::uniform(xt));
  m["spread"] = json{{"value", sp.value}, {"n", xt.size()}, {"pairs", sp.pairs}};
  return m;
}

inline json analyze(const std::string &kind, const std::vector<std::string> &inputs,
                    const ExperimentConfig &c) {
  static const std::vector<std::string> kinds{"uniformity", "branching", "backward", "residual",
                                              "convergence"};
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
    throw UsageError("unknown analysis kind '" + kind + "'");
  if (inputs.empty()) throw UsageError("analyze: at least one --input is required");

  json report{{"kind", kind}, {"inputs", json::array()}, {"metrics", json::object()}};
  std::vector<SampleTable> tables;
  for (const auto &in : inputs) {
    auto rows = read_samples_csv(in);
    if (rows.empty()) throw std::runtime_error("'" + in + "' holds no samples");
    report["inputs"].push_back({{"path", in}, {"sha256", sha256_file(in)}, {"rows", rows.size()}});
    tables.emplace_back(rows);
  }
  json &m = report["metrics"];
  const SampleTable &tab = tables.front();

  if (kind == "uniformity") {
    double min_p = 1.0;
    for (double t : tab.times) {
      auto xs = tab.marginal(t);
      json entry{{"t", t}, {"n", xs.size()}, {"bins", c.bins}};
      try {
        auto r = chi_square_uniformity(xs, c.bins);
        entry["statistic"] = r.statistic;
        entry["p_value"] = r.p_value;
        entry["dof"] = r.dof;
        min_p = std::min(min_p, r.p_value);
      } catch (const std::invalid_argument &e) {
        entry["error"] = e.what();
      }
      m["chi_square_t=" + fmt17(t)] = entry;
    }
    m["min_p_value"] = metric(min_p, tab.times.size());
  } else if (kind == "branching") {
    m = branching_metrics(tab.marginal(tab.times.back()));
  } else if (kind == "backward") {
    auto pairs = tab.endpoints();
    auto fam = disintegrate(pairs, ConditionOn::second, c.bins);
    auto s = conditional_spread(fam);
    m["median_bin_spread"] = metric(s.median, pairs.size());
    m["mean_bin_spread"] = metric(s.mean, pairs.size());
    m["bins_used"] = s.bins_used;
  } else if (kind == "residual") {
    const auto f = c.field();
    std::vector<double> res;
    for (const auto &[id, v] : tab.by_path) {
      std::vector<double> ts;
      std::vector<TorusPoint> xs;
      for (const auto &[t, x] : v) {
        ts.push_back(t);
        xs.push_back(x);
      }
      Path p(std::move(ts), std::move(xs));
      res.push_back(c.zero_drift ? integral_curve_residual(p, ZeroField{p.horizon()}, c.quad_substeps)
                                 : integral_curve_residual(p, f, c.quad_substeps));
    }
    double sum = 0.0;
    for (double r : res) sum += r;
    m["mean_residual"] = metric(sum / static_cast<double>(res.size()), res.size());
    m["max_residual"] = metric(*std::max_element(res.begin(), res.end()), res.size());
  } else { // convergence
    json per = json::array();
    std::vector<std::vector<TorusPoint>> finals;
    for (const auto &t : tables) {
      finals.push_back(t.marginal(t.times.back()));
      per.push_back(branching_metrics(finals.back()));
    }
    m["per_input"] = per;
    json dists = json::array();
    for (std::size_t i = 0; i + 1 < finals.size(); ++i)
      dists.push_back(sliced_w1(EmpiricalMeasure::uniform(finals[i]),
                                EmpiricalMeasure::uniform(finals[i + 1]), 8));
    m["sliced_w1_consecutive"] = dists;
  }
  report["config"] = config_json(c);
  return report;
}

// ---------------------------------------------------------------------------
// Self-checks.

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  /// Overrides the field's speed factor; used to confirm the checks bite.
  double speed_factor_override = 0.0;
  std::size_t refinement_samples = 100000;
  std::size_t preservation_samples = 100000;
};

inline std::vector<CheckResult> run_verify(const VerifyOptions &opt = {}) {
  std::vector<CheckResult> out;
  DepauwField f(1.0, 12);
  if (opt.speed_factor_override > 0.0) f.speed_factor = opt.speed_factor_override;

  {
    CounterRng rng(1, 0, Lane::sampling);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      TorusPoint a(rng.uniform(), rng.uniform()), b(rng.uniform(), rng.uniform()),
          cc(rng.uniform(), rng.uniform());
      worst = std::max(worst, torus_dist(a, cc) - torus_dist(a, b) - torus_dist(b, cc));
    }
    out.push_back({"torus-triangle-inequality", worst <= 1e-12, "max violation " + fmt17(worst)});
  }
  {
    bool ok = true;
    std::string detail;
    for (int k = 0; k <= 2; ++k) {
      auto r = permutation_check(f, k, 1000);
      ok = ok && r.max_deviation() < 1e-12 && r.filled_cycle_length == 4 && r.empty_cycle_length == 1;
      detail += "k=" + std::to_string(k) + " dev=" + fmt17(r.max_deviation()) +
                " cycle=" + std::to_string(r.filled_cycle_length) + "; ";
    }
    out.push_back({"property-R-permutation", ok, detail});
  }
  {
    auto r = refinement_check(f, 0, opt.refinement_samples);
    bool ok = r.calibrated_flip == kRefinementFlip && r.mismatches[kRefinementFlip] == 0;
    out.push_back({"refinement-identity", ok,
                   "checked " + std::to_string(r.checked) + ", mismatches " +
                       std::to_string(r.mismatches[kRefinementFlip]) + ", calibrated flip " +
                       std::to_string(r.calibrated_flip)});
  }
  {
    CounterRng rng(2, 0, Lane::sampling);
    double period = 0.0, radius = 0.0, inverse = 0.0, semigroup = 0.0;
    for (int i = 0; i < 10000; ++i) {
      Vec2 xi{rng.uniform() - 0.5, rng.uniform() - 0.5};
      period = std::max(period, norm(loop_advance(xi, 2.0) - xi));
      Vec2 adv = loop_advance(xi, 10.0 * rng.uniform() - 5.0);
      radius = std::max(radius, std::abs(std::max(std::abs(adv[0]), std::abs(adv[1])) -
                                         std::max(std::abs(xi[0]), std::abs(xi[1]))));
      TorusPoint x(rng.uniform(), rng.uniform());
      double s = rng.uniform(), t = rng.uniform(), u = rng.uniform();
      if (s > t) std::swap(s, t);
      if (t > u) std::swap(t, u);
      if (s > t) std::swap(s, t);
      inverse = std::max(inverse, torus_dist(flow(f, u, s, flow(f, s, u, x)), x));
      semigroup = std::max(semigroup, torus_dist(flow(f, s, u, x), flow(f, t, u, flow(f, s, t, x))));
    }
    bool ok = period < 1e-10 && radius < 1e-10 && inverse < 1e-10 && semigroup < 1e-10;
    out.push_back({"loop-mechanics", ok,
                   "period " + fmt17(period) + ", radius " + fmt17(radius) + ", inverse " +
                       fmt17(inverse) + ", semigroup " + fmt17(semigroup)});
  }
  {
    CounterRng rng(3, 0, Lane::sampling);
    std::vector<TorusPoint> pushed;
    pushed.reserve(opt.preservation_samples);
    for (std::size_t i = 0; i < opt.preservation_samples; ++i)
      pushed.push_back(flow(f, 0.0, f.horizon, TorusPoint(rng.uniform(), rng.uniform())));
    auto r = chi_square_uniformity(pushed, 16);
    out.push_back({"measure-preservation", r.p_value > 0.001, "p-value " + fmt17(r.p_value)});
  }
  {
    auto ps = prodi_serrin_check({kInf, kInf, 2});
    double sup = lqlp_norm([&](double t, const TorusPoint &x) { return eval_bdp(f, t, x); }, kInf,
                           kInf, f.horizon, 4, 1024);
    double target = 2.0 * f.speed_factor;
    bool ok = ps.admissible && ps.margin == 1.0 && std::abs(sup - target) <= 0.01 * target;
    out.push_back({"prodi-serrin-and-norms", ok,
                   "margin " + fmt17(ps.margin) + ", sup " + fmt17(sup) + " vs " + fmt17(target)});
  }
  return out;
}

} // namespace zeronoise
