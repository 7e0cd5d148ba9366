#pragma once

// Path-regularity seminorms, integral-curve residuals and mixed-norm checks
// on drift fields.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "zeronoise/sde.hpp"
#include "zeronoise/torus.hpp"

namespace zeronoise {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Exponents for b in L^q(0,T; L^p(T^d)).
struct ProdiSerrinParams {
  double p = kInf;
  double q = kInf;
  int d = 2;
};

struct ProdiSerrinResult {
  bool admissible = false;
  double margin = 0.0; // 1 - d/p - 2/q
};

inline ProdiSerrinResult prodi_serrin_check(const ProdiSerrinParams &ps) {
  if (!(ps.p > 1.0 && ps.q > 1.0)) throw std::domain_error("prodi_serrin_check: need p, q > 1");
  if (ps.d < 1) throw std::domain_error("prodi_serrin_check: need d >= 1");
  const double m = 1.0 - ps.d / ps.p - 2.0 / ps.q; // d/inf == 0
  return {m > 0.0, m};
}

struct SeminormParams {
  double alpha = 0.25;
  double p_exp = 8.0;
  double theta = 0.1;

  /// Whether W^{alpha,p} embeds into C^theta for these exponents.
  bool embedding_applies() const { return alpha >= theta + 1.0 / p_exp; }
};

/// Mixed norm (int_0^T (int |b|^p dx)^{q/p} dt)^{1/q} by midpoint sums on an
/// n_t x n_x x n_x grid; infinite exponents become maxima.
template <typename Sampler>
double lqlp_norm(Sampler &&b, double p, double q, double horizon, std::size_t n_t, std::size_t n_x) {
  if (n_t == 0 || n_x == 0) throw std::invalid_argument("lqlp_norm: empty grid");
  const double dt = horizon / static_cast<double>(n_t);
  const double dx = 1.0 / static_cast<double>(n_x);
  double outer = 0.0;
  for (std::size_t it = 0; it < n_t; ++it) {
    const double t = (static_cast<double>(it) + 0.5) * dt;
    double inner = 0.0;
    for (std::size_t i = 0; i < n_x; ++i)
      for (std::size_t j = 0; j < n_x; ++j) {
        TorusPoint x((static_cast<double>(i) + 0.5) * dx, (static_cast<double>(j) + 0.5) * dx);
        const double m = norm(b(t, x));
        if (std::isinf(p)) inner = std::max(inner, m);
        else inner += std::pow(m, p) * dx * dx;
      }
    const double space = std::isinf(p) ? inner : std::pow(inner, 1.0 / p);
    if (std::isinf(q)) outer = std::max(outer, space);
    else outer += std::pow(space, q) * dt;
  }
  return std::isinf(q) ? outer : std::pow(outer, 1.0 / q);
}

namespace detail {
inline std::vector<double> trapezoid_weights(const std::vector<double> &t) {
  const std::size_t n = t.size();
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = 0.5 * (t[i + 1] - t[i]);
    w[i] += h;
    w[i + 1] += h;
  }
  return w;
}
} // namespace detail

/// Discrete W^{alpha,p}(0,T) Gagliardo seminorm of the lifted path: the
/// double integral of |u(s)-u(t)|^p / |s-t|^{1+alpha p} by trapezoid weights
/// on the sample grid, diagonal left out.
inline double gagliardo_seminorm(const Path &path, double alpha, double p_exp) {
  if (path.size() < 2) throw std::invalid_argument("gagliardo_seminorm: need at least two samples");
  const auto &t = path.times();
  const auto &u = path.lift();
  const auto w = detail::trapezoid_weights(t);
  const double expo = 1.0 + alpha * p_exp;
  double sum = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = i + 1; j < t.size(); ++j) {
      const double du = norm(u[j] - u[i]);
      if (du == 0.0) continue;
      sum += w[i] * w[j] * std::pow(du, p_exp) / std::pow(t[j] - t[i], expo);
    }
  return std::pow(2.0 * sum, 1.0 / p_exp);
}

/// Largest |u(t)-u(s)| / |t-s|^theta over all sample pairs of the lift.
inline double holder_seminorm(const Path &path, double theta) {
  if (path.size() < 2) throw std::invalid_argument("holder_seminorm: need at least two samples");
  const auto &t = path.times();
  const auto &u = path.lift();
  double best = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = i + 1; j < t.size(); ++j)
      best = std::max(best, norm(u[j] - u[i]) / std::pow(t[j] - t[i], theta));
  return best;
}

/// sup over sample times of |gamma(t) - gamma(0) - int_0^t b(s, gamma(s)) ds|,
/// the integral taken along the interpolated lift by midpoint sub-steps that
/// never straddle a drift breakpoint.
template <DriftField F>
double integral_curve_residual(const Path &path, const F &field, std::size_t quad_substeps = 4) {
  if (quad_substeps == 0) throw std::invalid_argument("integral_curve_residual: need substeps >= 1");
  const auto bp = drift_breakpoints(field);
  const auto &t = path.times();
  const auto &u = path.lift();
  Vec2 integral{0.0, 0.0};
  double worst = 0.0;
  std::size_t seg = 0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double t0 = t[i], t1 = t[i + 1];
    const Vec2 du = u[i + 1] - u[i];
    double a = t0;
    while (a < t1) {
      while (seg + 2 < bp.size() && a >= bp[seg + 1]) ++seg;
      const double b = std::min(t1, bp[seg + 1]);
      const double h = (b - a) / static_cast<double>(quad_substeps);
      for (std::size_t j = 0; j < quad_substeps; ++j) {
        const double s = a + (static_cast<double>(j) + 0.5) * h;
        const Vec2 pos = u[i] + ((s - t0) / (t1 - t0)) * du;
        integral = integral + h * segment_velocity(field, seg, TorusPoint(pos));
      }
      if (b <= a) break;
      a = b;
    }
    worst = std::max(worst, norm(u[i + 1] - u[0] - integral));
  }
  return worst;
}

} // namespace zeronoise
