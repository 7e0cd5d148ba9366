#pragma once

// The Depauw vector field on the unit torus.
//
// The base cell field w lives on the square (-1/2,1/2)^2 and turns every
// sup-norm circle |xi|_inf = r into a square loop traversed counterclockwise
// at speed 4r. Periodising w over the even lattice Lambda gives u, a
// checkerboard of "filled" (rotating) and "empty" (still) unit cells. u has
// period 2, so the unit torus carries u at half scale: on the time stage
// (T/2^{k+1}, T/2^k] the drift is
//
//     b(t, x) = speed_factor * w(2^{k+1} x - c),   c the Lambda cell centre,
//
// with speed_factor = 1/(2T), which makes each stage exactly a quarter turn
// of every filled cell. Below T/2^{K_max+1} the drift is switched off.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "zeronoise/torus.hpp"

namespace zeronoise {

/// Base cell field.
inline Vec2 eval_w(const Vec2 &xi) {
  const double a1 = std::abs(xi[0]);
  const double a2 = std::abs(xi[1]);
  if (a1 < 0.5 && a1 > a2) return {0.0, 4.0 * xi[0]};
  if (a2 < 0.5 && a2 > a1) return {-4.0 * xi[1], 0.0};
  return {0.0, 0.0};
}

/// Cell centre of y under half-open cells [c - 1/2, c + 1/2).
inline std::array<std::int64_t, 2> cell_center(const Vec2 &y) {
  return {static_cast<std::int64_t>(std::floor(y[0] + 0.5)),
          static_cast<std::int64_t>(std::floor(y[1] + 0.5))};
}

inline bool in_lambda(std::int64_t c1, std::int64_t c2) { return ((c1 + c2) & 1) == 0; }

/// Periodised field u(x) = (1/T) sum_{y in Lambda} w(x - y) on R^2.
inline Vec2 eval_u(const Vec2 &x, double horizon = 1.0) {
  auto c = cell_center(x);
  if (!in_lambda(c[0], c[1])) return {0.0, 0.0};
  Vec2 xi{x[0] - static_cast<double>(c[0]), x[1] - static_cast<double>(c[1])};
  return (1.0 / horizon) * eval_w(xi);
}

struct DepauwField {
  double horizon = 1.0;
  int max_depth = 12;
  double speed_factor = 0.5;

  DepauwField() = default;
  explicit DepauwField(double T, int K = 12)
      : horizon(T), max_depth(K), speed_factor(1.0 / (2.0 * T)) {
    if (!(T > 0.0)) throw std::invalid_argument("DepauwField: horizon must be positive");
    if (K < 0 || K > 50) throw std::invalid_argument("DepauwField: max_depth out of range");
  }

  /// Right end T/2^k of stage k.
  double breakpoint(int k) const { return std::ldexp(horizon, -k); }
  /// Below this time the field vanishes.
  double truncation_time() const { return breakpoint(max_depth + 1); }
  /// Number of cells per unit length at stage k.
  double scale(int k) const { return std::ldexp(1.0, k + 1); }
};

/// Stage k with T/2^{k+1} < t <= T/2^k; nullopt when t lies at or below the
/// truncation time.
inline std::optional<int> stage_of(const DepauwField &f, double t) {
  if (!(t > 0.0 && t <= f.horizon)) throw std::domain_error("stage_of: t outside (0,T]");
  for (int k = 0; k <= f.max_depth; ++k)
    if (t > f.breakpoint(k + 1)) return k;
  return std::nullopt;
}

struct CellAddress {
  int stage = 0;
  std::array<std::int64_t, 2> center{};
  bool filled = false;
  friend bool operator==(const CellAddress &, const CellAddress &) = default;
};

/// Cell of x at a stage together with the offset of x from the centre,
/// measured in cell units.
struct CellLocation {
  CellAddress cell;
  Vec2 offset;
};

inline CellLocation locate(int stage, const TorusPoint &x) {
  const double s = std::ldexp(1.0, stage + 1);
  Vec2 y{s * x[0], s * x[1]};
  auto c = cell_center(y);
  Vec2 xi{y[0] - static_cast<double>(c[0]), y[1] - static_cast<double>(c[1])};
  const auto n = static_cast<std::int64_t>(s);
  // Parity is preserved by the reduction because n is even.
  return {{stage, {c[0] % n, c[1] % n}, in_lambda(c[0], c[1])}, xi};
}

inline CellAddress cell_of(int stage, const TorusPoint &x) {
  if (stage < 0) throw std::domain_error("cell_of: negative stage");
  return locate(stage, x).cell;
}

inline Vec2 eval_bdp(const DepauwField &f, double t, const TorusPoint &x) {
  if (t == 0.0) return {0.0, 0.0};
  auto k = stage_of(f, t);
  if (!k) return {0.0, 0.0};
  auto loc = locate(*k, x);
  if (!loc.cell.filled) return {0.0, 0.0};
  return f.speed_factor * eval_w(loc.offset);
}

/// Checkerboard with cells of side 2^{-scale}: phase XOR parity of the cell.
struct CheckerboardDensity {
  int scale = 0;
  int phase = 0;
};

inline int rho_bar(const CheckerboardDensity &d, const Vec2 &x) {
  const double s = std::ldexp(1.0, d.scale);
  auto i = static_cast<std::int64_t>(std::floor(s * x[0]));
  auto j = static_cast<std::int64_t>(std::floor(s * x[1]));
  return static_cast<int>(((i + j) & 1) ^ (d.phase & 1));
}

inline int rho_bar(const CheckerboardDensity &d, const TorusPoint &x) {
  return rho_bar(d, x.coords());
}

inline int rho_bar_complement(const CheckerboardDensity &d, const TorusPoint &x) {
  return 1 - rho_bar(d, x);
}

} // namespace zeronoise
