#pragma once

// Monte Carlo for dX = b(t, X) dt + nu dW on the unit torus.
//
// Time is cut at the drift's breakpoints (where b jumps in time) and at the
// requested save times; inside a segment of length L the step is
// min(dt_base, L / steps_per_stage_min). Every path owns counter-based
// random streams keyed by (seed, path index), so an ensemble is the same
// bit for bit whatever the thread count.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "zeronoise/depauw_field.hpp"
#include "zeronoise/exact_flow.hpp"
#include "zeronoise/rng.hpp"
#include "zeronoise/torus.hpp"

namespace zeronoise {

/// b = 0 on [0, T]; the SDE reduces to wrapped Brownian motion.
struct ZeroField {
  double horizon = 1.0;
};

// Drift fields are time-autonomous on the segments between consecutive
// breakpoints 0 = b_0 < b_1 < ... < b_n = T.

inline std::vector<double> drift_breakpoints(const DepauwField &f) {
  std::vector<double> bp{0.0, f.truncation_time()};
  for (int k = f.max_depth; k >= 0; --k) bp.push_back(f.breakpoint(k));
  return bp;
}
inline std::vector<double> drift_breakpoints(const ZeroField &f) { return {0.0, f.horizon}; }

inline double field_horizon(const DepauwField &f) { return f.horizon; }
inline double field_horizon(const ZeroField &f) { return f.horizon; }

/// Stage index of segment s (segment 0 is the switched-off initial layer).
inline int segment_stage(const DepauwField &f, std::size_t s) {
  return f.max_depth + 1 - static_cast<int>(s);
}

inline Vec2 segment_velocity(const DepauwField &f, std::size_t s, const TorusPoint &x) {
  if (s == 0) return {0.0, 0.0};
  auto loc = locate(segment_stage(f, s), x);
  if (!loc.cell.filled) return {0.0, 0.0};
  return f.speed_factor * eval_w(loc.offset);
}
inline Vec2 segment_velocity(const ZeroField &, std::size_t, const TorusPoint &) { return {0.0, 0.0}; }

inline TorusPoint segment_flow(const DepauwField &f, std::size_t s, double t0, double t1,
                               const TorusPoint &x) {
  if (s == 0) return x;
  return flow_stage(f, segment_stage(f, s), t0, t1, x);
}
inline TorusPoint segment_flow(const ZeroField &, std::size_t, double, double,
                               const TorusPoint &x) {
  return x;
}

template <typename F>
concept DriftField = requires(const F &f, std::size_t s, double t, const TorusPoint &x) {
  { drift_breakpoints(f) } -> std::same_as<std::vector<double>>;
  { field_horizon(f) } -> std::convertible_to<double>;
  { segment_velocity(f, s, x) } -> std::same_as<Vec2>;
  { segment_flow(f, s, t, t, x) } -> std::same_as<TorusPoint>;
};

enum class Integrator { euler_maruyama, drift_splitting };

inline std::string to_string(Integrator i) {
  return i == Integrator::euler_maruyama ? "euler_maruyama" : "drift_splitting";
}
inline Integrator integrator_from_string(const std::string &s) {
  if (s == "euler_maruyama") return Integrator::euler_maruyama;
  if (s == "drift_splitting") return Integrator::drift_splitting;
  throw std::invalid_argument("unknown integrator '" + s + "'");
}

struct InitialLaw {
  enum class Kind { uniform, point, custom };
  Kind kind = Kind::uniform;
  TorusPoint point{};
  std::vector<TorusPoint> custom;

  static InitialLaw uniform() { return {}; }
  static InitialLaw at(const TorusPoint &p) { return {Kind::point, p, {}}; }
  static InitialLaw list(std::vector<TorusPoint> pts) { return {Kind::custom, {}, std::move(pts)}; }
};

struct SdeConfig {
  double nu = 0.05;
  std::size_t n_paths = 1000;
  double dt_base = 1.0 / 1024.0;
  std::size_t steps_per_stage_min = 8;
  std::uint64_t seed = 1;
  InitialLaw initial{};
  std::vector<double> save_times{1.0};
  Integrator integrator = Integrator::drift_splitting;
  bool record_paths = false;
  unsigned threads = 0; // 0: hardware concurrency
  std::size_t memory_limit_bytes = std::size_t{3} << 30;
};

/// Shared time discretisation: nodes, the drift segment of every step and
/// the node index of every save time.
struct TimeGrid {
  std::vector<double> nodes;
  std::vector<std::uint32_t> segment;
  std::vector<std::size_t> save_nodes;
};

template <DriftField F> TimeGrid build_time_grid(const F &field, const SdeConfig &cfg) {
  const double T = field_horizon(field);
  if (!(cfg.dt_base > 0.0)) throw std::invalid_argument("dt_base must be positive");
  if (cfg.steps_per_stage_min == 0) throw std::invalid_argument("steps_per_stage_min must be >= 1");
  if (!std::is_sorted(cfg.save_times.begin(), cfg.save_times.end()))
    throw std::invalid_argument("save_times must be sorted");
  for (double s : cfg.save_times)
    if (!(s >= 0.0 && s <= T)) throw std::invalid_argument("save time outside [0,T]");

  const auto bp = drift_breakpoints(field);
  TimeGrid g;
  g.nodes.push_back(0.0);
  for (std::size_t s = 0; s + 1 < bp.size(); ++s) {
    const double a = bp[s], b = bp[s + 1];
    const double h = std::min(cfg.dt_base, (b - a) / static_cast<double>(cfg.steps_per_stage_min));
    std::vector<double> cuts{a};
    for (double st : cfg.save_times)
      if (st > a && st < b) cuts.push_back(st);
    cuts.push_back(b);
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double lo = cuts[c], hi = cuts[c + 1];
      const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((hi - lo) / h - 1e-9)));
      for (std::size_t j = 1; j < n; ++j) {
        g.nodes.push_back(lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n));
        g.segment.push_back(static_cast<std::uint32_t>(s));
      }
      g.nodes.push_back(hi);
      g.segment.push_back(static_cast<std::uint32_t>(s));
    }
  }
  for (double st : cfg.save_times) {
    auto it = std::lower_bound(g.nodes.begin(), g.nodes.end(), st);
    g.save_nodes.push_back(static_cast<std::size_t>(it - g.nodes.begin()));
  }
  return g;
}

/// Brownian increment nu * (W_{t+dt} - W_t).
inline Vec2 brownian_increment(CounterRng &rng, double dt, double nu) {
  if (!(dt > 0.0)) throw std::domain_error("brownian_increment: dt must be positive");
  auto [z1, z2] = rng.normal_pair();
  const double sd = nu * std::sqrt(dt);
  return {sd * z1, sd * z2};
}

/// One step on drift segment s.
template <DriftField F>
TorusPoint step_in_segment(const F &field, std::size_t s, double t0, double t1, const TorusPoint &x,
                           const Vec2 &dW, Integrator integrator) {
  if (integrator == Integrator::euler_maruyama) {
    Vec2 v = segment_velocity(field, s, x);
    return TorusPoint(x.coords() + (t1 - t0) * v + dW);
  }
  return TorusPoint(segment_flow(field, s, t0, t1, x).coords() + dW);
}

/// One step from t to t + dt; the step must not straddle a drift breakpoint.
template <DriftField F>
TorusPoint step(const F &field, double t, double dt, const TorusPoint &x, const Vec2 &dW,
                Integrator integrator) {
  const auto bp = drift_breakpoints(field);
  const double t1 = t + dt;
  const double tol = 1e-12 * field_horizon(field);
  if (!(dt > 0.0) || t < 0.0 || t1 > bp.back() + tol)
    throw std::domain_error("step: interval outside [0,T]");
  std::size_t s = 0;
  while (s + 2 < bp.size() && t >= bp[s + 1]) ++s;
  if (t1 > bp[s + 1] + tol) throw std::logic_error("step: interval crosses a drift breakpoint");
  return step_in_segment(field, s, t, std::min(t1, bp[s + 1]), x, dW, integrator);
}

struct PathEnsemble {
  SdeConfig config;
  std::vector<double> save_times;
  std::size_t n_paths = 0;
  std::vector<TorusPoint> samples; // row-major: path, then save time
  std::vector<TorusPoint> initial;
  std::vector<Path> paths; // only with record_paths

  const TorusPoint &at(std::size_t path, std::size_t save) const {
    return samples[path * save_times.size() + save];
  }
  std::vector<TorusPoint> marginal(std::size_t save) const {
    std::vector<TorusPoint> out(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) out[i] = at(i, save);
    return out;
  }
};

inline std::size_t estimated_bytes(const SdeConfig &cfg, std::size_t n_nodes) {
  std::size_t per_path = (cfg.save_times.size() + 1) * sizeof(TorusPoint);
  if (cfg.record_paths) per_path += n_nodes * (sizeof(double) + sizeof(TorusPoint) + sizeof(Vec2));
  return per_path * cfg.n_paths;
}

inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Initial point of path i.
inline TorusPoint draw_initial(const SdeConfig &cfg, std::size_t i) {
  switch (cfg.initial.kind) {
  case InitialLaw::Kind::point:
    return cfg.initial.point;
  case InitialLaw::Kind::custom:
    return cfg.initial.custom[i];
  case InitialLaw::Kind::uniform:
  default: {
    CounterRng rng(cfg.seed, i, Lane::initial);
    double a = rng.uniform();
    double b = rng.uniform();
    return TorusPoint(a, b);
  }
  }
}

template <DriftField F> PathEnsemble simulate(const F &field, const SdeConfig &cfg) {
  if (cfg.n_paths == 0) throw std::invalid_argument("n_paths must be >= 1");
  if (!(cfg.nu >= 0.0)) throw std::invalid_argument("nu must be >= 0");
  if (cfg.initial.kind == InitialLaw::Kind::custom && cfg.initial.custom.size() != cfg.n_paths)
    throw std::invalid_argument("custom initial list must have n_paths entries");
  const TimeGrid grid = build_time_grid(field, cfg);
  const std::size_t need = estimated_bytes(cfg, grid.nodes.size());
  if (need > cfg.memory_limit_bytes)
    throw std::length_error("ensemble needs about " + std::to_string(need >> 20) +
                            " MiB, above the configured limit of " +
                            std::to_string(cfg.memory_limit_bytes >> 20) + " MiB");

  PathEnsemble ens;
  ens.config = cfg;
  ens.save_times = cfg.save_times;
  ens.n_paths = cfg.n_paths;
  const std::size_t n_save = cfg.save_times.size();
  ens.samples.resize(cfg.n_paths * n_save);
  ens.initial.resize(cfg.n_paths);
  std::vector<std::vector<TorusPoint>> full(cfg.record_paths ? cfg.n_paths : 0);

  auto run_path = [&](std::size_t i) {
    CounterRng rng(cfg.seed, i, Lane::noise);
    TorusPoint x = draw_initial(cfg, i);
    ens.initial[i] = x;
    std::vector<TorusPoint> *trace = cfg.record_paths ? &full[i] : nullptr;
    if (trace) {
      trace->reserve(grid.nodes.size());
      trace->push_back(x);
    }
    std::size_t next_save = 0;
    while (next_save < n_save && grid.save_nodes[next_save] == 0) ens.samples[i * n_save + next_save++] = x;
    for (std::size_t n = 0; n + 1 < grid.nodes.size(); ++n) {
      const double t0 = grid.nodes[n], t1 = grid.nodes[n + 1];
      Vec2 dW = cfg.nu > 0.0 ? brownian_increment(rng, t1 - t0, cfg.nu) : Vec2{0.0, 0.0};
      x = step_in_segment(field, grid.segment[n], t0, t1, x, dW, cfg.integrator);
      if (trace) trace->push_back(x);
      while (next_save < n_save && grid.save_nodes[next_save] == n + 1)
        ens.samples[i * n_save + next_save++] = x;
    }
  };

  const unsigned n_threads =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(cfg.threads), cfg.n_paths));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < cfg.n_paths; ++i) run_path(i);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < n_threads; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < cfg.n_paths; i += n_threads) run_path(i);
      });
  }

  if (cfg.record_paths) {
    ens.paths.reserve(cfg.n_paths);
    for (auto &pts : full) ens.paths.emplace_back(grid.nodes, std::move(pts));
  }
  return ens;
}

} // namespace zeronoise
