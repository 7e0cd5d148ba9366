#pragma once

// Closed-form regular Lagrangian flow of the Depauw field.
//
// Inside a filled cell a point at sup-norm radius r runs around the square
// loop of half-side r at constant perimeter speed 4r, so the loop period in
// w-time is 2 and a quarter period is a rigid rotation by +pi/2. Each dyadic
// stage lasts exactly a quarter period. Empty cells, cell centres and cell
// boundaries do not move.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "zeronoise/depauw_field.hpp"
#include "zeronoise/rng.hpp"
#include "zeronoise/torus.hpp"

namespace zeronoise {

/// Position on a square loop: radius r and counterclockwise arc length
/// s in [0, 8r) measured from the corner (r, -r).
struct LoopState {
  double radius = 0.0;
  double arc = 0.0;
};

inline LoopState to_loop(const Vec2 &xi) {
  const double r = std::max(std::abs(xi[0]), std::abs(xi[1]));
  if (xi[0] == r && xi[1] < r) return {r, xi[1] + r};
  if (xi[1] == r && xi[0] > -r) return {r, 3.0 * r - xi[0]};
  if (xi[0] == -r && xi[1] > -r) return {r, 5.0 * r - xi[1]};
  return {r, 7.0 * r + xi[0]};
}

inline Vec2 from_loop(const LoopState &s) {
  const double r = s.radius;
  const double a = s.arc;
  if (a < 2.0 * r) return {r, a - r};
  if (a < 4.0 * r) return {3.0 * r - a, r};
  if (a < 6.0 * r) return {-r, 5.0 * r - a};
  return {a - 7.0 * r, -r};
}

/// Exact solution of xi' = w(xi) for w-time tau_w (negative runs backwards).
inline Vec2 loop_advance(const Vec2 &xi, double tau_w) {
  LoopState s = to_loop(xi);
  if (s.radius == 0.0 || s.radius >= 0.5) return xi;
  const double period = 8.0 * s.radius;
  double a = std::fmod(s.arc + 4.0 * s.radius * tau_w, period);
  if (a < 0.0) a += period;
  if (a >= period) a = 0.0;
  s.arc = a;
  return from_loop(s);
}

struct FlowQuery {
  double t_from = 0.0;
  double t_to = 0.0;
};

/// w-time elapsed during [t0, t1] of stage k.
inline double stage_clock(const DepauwField &f, int k, double t0, double t1) {
  return f.speed_factor * f.scale(k) * (t1 - t0);
}

/// Flow of the stage-k drift from t0 to t1, both inside the closed stage interval.
inline TorusPoint flow_stage(const DepauwField &f, int k, double t0, double t1,
                             const TorusPoint &x) {
  const double lo = f.breakpoint(k + 1);
  const double hi = f.breakpoint(k);
  if (k < 0 || t0 < lo || t0 > hi || t1 < lo || t1 > hi)
    throw std::domain_error("flow_stage: times outside the stage interval");
  if (t0 == t1 || k > f.max_depth) return x;
  auto loc = locate(k, x);
  if (!loc.cell.filled) return x;
  Vec2 xi = loop_advance(loc.offset, stage_clock(f, k, t0, t1));
  const double inv = 1.0 / f.scale(k);
  Vec2 y{static_cast<double>(loc.cell.center[0]) + xi[0],
         static_cast<double>(loc.cell.center[1]) + xi[1]};
  return TorusPoint(inv * y);
}

/// Regular Lagrangian flow from q.t_from to q.t_to (either direction).
inline TorusPoint flow(const DepauwField &f, const FlowQuery &q, TorusPoint x) {
  const double T = f.horizon;
  if (!(q.t_from >= 0.0 && q.t_from <= T && q.t_to >= 0.0 && q.t_to <= T))
    throw std::domain_error("flow: times outside [0,T]");
  const double cut = f.truncation_time();
  if (q.t_to > q.t_from) {
    double a = std::max(q.t_from, cut);
    while (a < q.t_to) {
      // Stage whose half-open interval [T/2^{k+1}, T/2^k) starts the step.
      int k = 0;
      while (a < f.breakpoint(k + 1)) ++k;
      double b = std::min(f.breakpoint(k), q.t_to);
      x = flow_stage(f, k, a, b, x);
      a = b;
    }
  } else {
    double a = q.t_from;
    const double stop = std::max(q.t_to, cut);
    while (a > stop) {
      int k = *stage_of(f, a);
      double b = std::max(f.breakpoint(k + 1), stop);
      x = flow_stage(f, k, a, b, x);
      a = b;
    }
  }
  return x;
}

inline TorusPoint flow(const DepauwField &f, double t_from, double t_to, const TorusPoint &x) {
  return flow(f, FlowQuery{t_from, t_to}, x);
}

/// Times in (a, b) at which the curve through x (position at time a, stage k)
/// turns a loop corner.
inline std::vector<double> corner_times(const DepauwField &f, int k, double a, double b,
                                        const TorusPoint &x) {
  std::vector<double> out;
  if (k > f.max_depth) return out;
  auto loc = locate(k, x);
  if (!loc.cell.filled) return out;
  LoopState s = to_loop(loc.offset);
  if (s.radius == 0.0 || s.radius >= 0.5) return out;
  const double rate = 4.0 * s.radius * f.speed_factor * f.scale(k); // arc per unit time
  const double edge = 2.0 * s.radius;
  const double end_arc = s.arc + rate * (b - a);
  for (double m = std::floor(s.arc / edge) + 1.0; m * edge < end_arc; m += 1.0) {
    double t = a + (m * edge - s.arc) / rate;
    if (t > a && t < b) out.push_back(t);
  }
  return out;
}

/// Integral curve of the field starting at x at time 0, sampled on grid
/// (which must start at 0 and end at T). With include_kinks the stage
/// breakpoints and loop corners are added as nodes, making the linear
/// interpolation of the samples exact.
inline Path integral_curve(const DepauwField &f, const TorusPoint &x, std::vector<double> grid,
                           bool include_kinks = false) {
  if (grid.empty() || grid.front() != 0.0 || grid.back() != f.horizon)
    throw std::invalid_argument("integral_curve: grid must cover [0,T]");
  if (include_kinks) {
    const double cut = f.truncation_time();
    grid.push_back(cut);
    TorusPoint p = x;
    for (int k = f.max_depth; k >= 0; --k) {
      const double a = f.breakpoint(k + 1);
      const double b = f.breakpoint(k);
      grid.push_back(b);
      auto c = corner_times(f, k, a, b, p);
      grid.insert(grid.end(), c.begin(), c.end());
      p = flow_stage(f, k, a, b, p);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  }
  std::vector<TorusPoint> pts;
  pts.reserve(grid.size());
  TorusPoint p = x;
  double t = 0.0;
  for (double s : grid) {
    p = flow(f, t, s, p);
    t = s;
    pts.push_back(p);
  }
  return Path(std::move(grid), std::move(pts));
}

/// Phase flip between consecutive dyadic checkerboards.
inline constexpr int kRefinementFlip = 1;

/// Black density at the dyadic time T/2^j: the checkerboard with cells of
/// side 2^{-(j+1)}, phase alternating with j.
inline CheckerboardDensity dyadic_density(int j, int flip = kRefinementFlip) {
  return {j + 1, (j * flip) & 1};
}

/// Black density rho^B(t, x), transported by the flow from its dyadic value.
/// Below the truncation time the density is frozen at its value there.
inline int rho_B(const DepauwField &f, double t, const TorusPoint &x) {
  if (!(t > 0.0 && t <= f.horizon)) throw std::domain_error("rho_B: t outside (0,T]");
  auto k = stage_of(f, t);
  if (!k) return rho_bar(dyadic_density(f.max_depth + 1), x);
  return rho_bar(dyadic_density(*k), flow_stage(f, *k, t, f.breakpoint(*k), x));
}

inline int rho_W(const DepauwField &f, double t, const TorusPoint &x) { return 1 - rho_B(f, t, x); }

/// Outcome of checking that one stage map rotates filled cells by pi/2 and
/// fixes empty ones.
struct PermutationReport {
  int stage = 0;
  std::size_t filled_cells = 0;
  std::size_t empty_cells = 0;
  double max_filled_deviation = 0.0;
  double max_empty_deviation = 0.0;
  /// Cycle length of the subsquare permutation; -1 if it differs between cells.
  int filled_cycle_length = 0;
  int empty_cycle_length = 0;

  double max_deviation() const { return std::max(max_filled_deviation, max_empty_deviation); }
};

namespace detail {
inline int quadrant_of(const Vec2 &xi) {
  return (xi[0] >= 0.0 ? (xi[1] >= 0.0 ? 0 : 3) : (xi[1] >= 0.0 ? 1 : 2));
}
inline int cycle_length(const std::array<int, 4> &perm) {
  int order = 1;
  for (int i = 0; i < 4; ++i) {
    int len = 1;
    for (int j = perm[static_cast<std::size_t>(i)]; j != i; j = perm[static_cast<std::size_t>(j)]) {
      if (j < 0) return -1;
      ++len;
      if (len > 4) return -1;
    }
    order = std::lcm(order, len);
  }
  return order;
}
inline void merge_cycle(int &acc, int value) { acc = (acc == 0 || acc == value) ? value : -1; }
} // namespace detail

inline PermutationReport permutation_check(const DepauwField &f, int k,
                                           std::size_t points_per_subsquare = 1000,
                                           std::uint64_t seed = 7) {
  if (k < 0 || k > f.max_depth) throw std::domain_error("permutation_check: stage out of range");
  PermutationReport rep;
  rep.stage = k;
  const double s = f.scale(k);
  const auto n = static_cast<std::int64_t>(s);
  const double t0 = f.breakpoint(k + 1);
  const double t1 = f.breakpoint(k);
  const std::array<Vec2, 4> quad_sign{{{1, 1}, {-1, 1}, {-1, -1}, {1, -1}}};
  CounterRng rng(seed, static_cast<std::uint64_t>(k), Lane::sampling);

  for (std::int64_t ci = 0; ci < n; ++ci) {
    for (std::int64_t cj = 0; cj < n; ++cj) {
      const bool filled = in_lambda(ci, cj);
      const Vec2 c{static_cast<double>(ci), static_cast<double>(cj)};
      auto image_of = [&](const Vec2 &xi) {
        return flow_stage(f, k, t0, t1, TorusPoint((1.0 / s) * (c + xi)));
      };
      double &dev = filled ? rep.max_filled_deviation : rep.max_empty_deviation;
      std::array<int, 4> perm{};
      for (std::size_t q = 0; q < 4; ++q) {
        for (std::size_t i = 0; i < points_per_subsquare; ++i) {
          Vec2 xi{quad_sign[q][0] * 0.5 * rng.uniform(), quad_sign[q][1] * 0.5 * rng.uniform()};
          Vec2 expect = filled ? Vec2{-xi[1], xi[0]} : xi;
          TorusPoint want((1.0 / s) * (c + expect));
          dev = std::max(dev, torus_dist(image_of(xi), want));
        }
        Vec2 centre{0.25 * quad_sign[q][0], 0.25 * quad_sign[q][1]};
        auto img = locate(k, image_of(centre));
        bool same_cell = img.cell.center[0] == ci && img.cell.center[1] == cj;
        perm[q] = same_cell ? detail::quadrant_of(img.offset) : -1;
      }
      int len = detail::cycle_length(perm);
      if (filled) {
        ++rep.filled_cells;
        detail::merge_cycle(rep.filled_cycle_length, len);
      } else {
        ++rep.empty_cells;
        detail::merge_cycle(rep.empty_cycle_length, len);
      }
    }
  }
  return rep;
}

/// Mismatch counts of the refinement identity for stage k: the stage-(k+1)
/// checkerboard must equal the stage-k checkerboard pulled back along the
/// stage-k flow. Points within `margin` of a cell edge (before or after the
/// map) are skipped.
struct RefinementReport {
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::array<std::size_t, 2> mismatches{}; // indexed by candidate phase flip
  int calibrated_flip = -1;                // flip with zero mismatches, -1 if none
};

inline RefinementReport refinement_check(const DepauwField &f, int k, std::size_t samples,
                                         std::uint64_t seed = 11, double margin = 1e-9) {
  RefinementReport rep;
  CounterRng rng(seed, static_cast<std::uint64_t>(k), Lane::sampling);
  const double fine = std::ldexp(1.0, k + 2);
  auto edge_dist = [fine](const TorusPoint &p) {
    double d = 1.0;
    for (std::size_t i = 0; i < 2; ++i) {
      double y = fine * p[i];
      d = std::min(d, std::abs(y - std::round(y)) / fine);
    }
    return d;
  };
  for (std::size_t i = 0; i < samples; ++i) {
    TorusPoint x(rng.uniform(), rng.uniform());
    TorusPoint img = flow_stage(f, k, f.breakpoint(k + 1), f.breakpoint(k), x);
    if (edge_dist(x) < margin || edge_dist(img) < margin) {
      ++rep.skipped;
      continue;
    }
    ++rep.checked;
    for (int flip = 0; flip < 2; ++flip)
      if (rho_bar(dyadic_density(k + 1, flip), x) != rho_bar(dyadic_density(k, flip), img))
        ++rep.mismatches[static_cast<std::size_t>(flip)];
  }
  for (int flip = 0; flip < 2; ++flip)
    if (rep.mismatches[static_cast<std::size_t>(flip)] == 0) {
      rep.calibrated_flip = flip;
      break;
    }
  return rep;
}

} // namespace zeronoise
