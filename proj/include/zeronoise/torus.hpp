#pragma once

// Flat torus R^d / Z^d, time-sampled paths on it and the path transforms
// used to freeze, reverse and truncate trajectories.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace zeronoise {

template <std::size_t D> using VecN = std::array<double, D>;
using Vec2 = VecN<2>;

template <std::size_t D> constexpr VecN<D> operator+(VecN<D> a, const VecN<D> &b) {
  for (std::size_t i = 0; i < D; ++i) a[i] += b[i];
  return a;
}
template <std::size_t D> constexpr VecN<D> operator-(VecN<D> a, const VecN<D> &b) {
  for (std::size_t i = 0; i < D; ++i) a[i] -= b[i];
  return a;
}
template <std::size_t D> constexpr VecN<D> operator*(double s, VecN<D> a) {
  for (auto &c : a) c *= s;
  return a;
}

template <std::size_t D> inline double norm(const VecN<D> &a) {
  double s = 0.0;
  for (double c : a) s += c * c;
  return std::sqrt(s);
}

/// Reduce a real to [0, 1).
inline double wrap_unit(double x) {
  double r = x - std::floor(x);
  // x slightly below an integer can round up to exactly 1.
  return r >= 1.0 ? 0.0 : r;
}

/// Representative of x mod 1 in (-1/2, 1/2]; a +-1/2 tie resolves to +1/2.
inline double minimal_offset(double x) { return x - std::ceil(x - 0.5); }

/// A point of the d-torus, stored by its unique representative in [0,1)^d.
template <std::size_t D> class TorusPointN {
public:
  constexpr TorusPointN() = default;
  explicit TorusPointN(const VecN<D> &lifted) {
    for (std::size_t i = 0; i < D; ++i) c_[i] = wrap_unit(lifted[i]);
  }
  template <typename... R>
    requires(sizeof...(R) == D && (std::is_convertible_v<R, double> && ...))
  TorusPointN(R... coords) : TorusPointN(VecN<D>{static_cast<double>(coords)...}) {}

  double operator[](std::size_t i) const { return c_[i]; }
  const VecN<D> &coords() const { return c_; }

  friend bool operator==(const TorusPointN &, const TorusPointN &) = default;

private:
  VecN<D> c_{};
};

using TorusPoint = TorusPointN<2>;

/// Minimal-displacement lift of b - a.
template <std::size_t D>
VecN<D> displacement(const TorusPointN<D> &a, const TorusPointN<D> &b) {
  VecN<D> d{};
  for (std::size_t i = 0; i < D; ++i) d[i] = minimal_offset(b[i] - a[i]);
  return d;
}

template <std::size_t D> double torus_dist(const TorusPointN<D> &a, const TorusPointN<D> &b) {
  return norm(displacement(a, b));
}

template <std::size_t D>
TorusPointN<D> translate(const TorusPointN<D> &p, const VecN<D> &v) {
  return TorusPointN<D>(p.coords() + v);
}

/// Continuous path on the torus sampled at strictly increasing times
/// 0 = t_0 < ... < t_n = T. The lift to R^d is reconstructed by joining
/// consecutive samples with their minimal displacement.
class Path {
public:
  Path(std::vector<double> times, std::vector<TorusPoint> points)
      : times_(std::move(times)), points_(std::move(points)) {
    if (times_.empty() || times_.size() != points_.size())
      throw std::invalid_argument("Path: times and points must be non-empty and equally long");
    if (times_.front() != 0.0) throw std::invalid_argument("Path: first time must be 0");
    for (std::size_t i = 1; i < times_.size(); ++i)
      if (!(times_[i] > times_[i - 1]))
        throw std::invalid_argument("Path: times must be strictly increasing");
    lift_.resize(points_.size());
    lift_[0] = points_[0].coords();
    for (std::size_t i = 1; i < points_.size(); ++i)
      lift_[i] = lift_[i - 1] + displacement(points_[i - 1], points_[i]);
  }

  static Path constant(const TorusPoint &x, double horizon) {
    if (horizon > 0.0) return Path({0.0, horizon}, {x, x});
    return Path({0.0}, {x});
  }

  double horizon() const { return times_.back(); }
  std::size_t size() const { return times_.size(); }
  const std::vector<double> &times() const { return times_; }
  const std::vector<TorusPoint> &points() const { return points_; }
  const std::vector<Vec2> &lift() const { return lift_; }

  /// Position at time t by linear interpolation of the lift.
  TorusPoint at(double t) const { return TorusPoint(lift_at(t)); }

  Vec2 lift_at(double t) const {
    if (!(t >= 0.0 && t <= horizon())) throw std::domain_error("Path: time outside [0,T]");
    auto it = std::lower_bound(times_.begin(), times_.end(), t);
    std::size_t j = static_cast<std::size_t>(it - times_.begin());
    if (times_[j] == t) return lift_[j];
    double a = (t - times_[j - 1]) / (times_[j] - times_[j - 1]);
    return lift_[j - 1] + a * (lift_[j] - lift_[j - 1]);
  }

private:
  std::vector<double> times_;
  std::vector<TorusPoint> points_;
  std::vector<Vec2> lift_;
};

/// e_t: evaluation of a path at time t.
inline TorusPoint evaluate(const Path &path, double t) {
  auto it = std::lower_bound(path.times().begin(), path.times().end(), t);
  if (it != path.times().end() && *it == t)
    return path.points()[static_cast<std::size_t>(it - path.times().begin())];
  return path.at(t);
}

/// t -> path(max(tau, t)): the path frozen at its time-tau value before tau.
inline Path stop_before(const Path &path, double tau) {
  const double T = path.horizon();
  if (!(tau >= 0.0 && tau <= T)) throw std::domain_error("stop_before: tau outside [0,T]");
  if (tau == 0.0) return path;
  const TorusPoint frozen = evaluate(path, tau);
  std::vector<double> times;
  std::vector<TorusPoint> points;
  for (std::size_t i = 0; i < path.size() && path.times()[i] < tau; ++i) {
    times.push_back(path.times()[i]);
    points.push_back(frozen);
  }
  times.push_back(tau);
  points.push_back(frozen);
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (path.times()[i] > tau) {
      times.push_back(path.times()[i]);
      points.push_back(path.points()[i]);
    }
  }
  return Path(std::move(times), std::move(points));
}

/// t -> path(T - min(tau, t)): runs the final stretch of length tau backwards
/// from path(T), then stays put.
inline Path reverse_head(const Path &path, double tau) {
  const double T = path.horizon();
  if (!(tau >= 0.0 && tau <= T)) throw std::domain_error("reverse_head: tau outside [0,T]");
  std::vector<double> times{0.0};
  std::vector<TorusPoint> points{path.points().back()};
  for (std::size_t i = path.size(); i-- > 0;) {
    double s = T - path.times()[i];
    if (s > 0.0 && s < tau) {
      times.push_back(s);
      points.push_back(path.points()[i]);
    }
  }
  const TorusPoint tail = evaluate(path, T - tau);
  if (tau > 0.0) {
    times.push_back(tau);
    points.push_back(tail);
  }
  if (tau < T) {
    times.push_back(T);
    points.push_back(tail);
  }
  return Path(std::move(times), std::move(points));
}

/// t -> path(T - t).
inline Path time_reverse(const Path &path) {
  const double T = path.horizon();
  std::vector<double> times(path.size());
  std::vector<TorusPoint> points(path.points().rbegin(), path.points().rend());
  for (std::size_t i = 0; i < path.size(); ++i) times[i] = T - path.times()[path.size() - 1 - i];
  times.front() = 0.0;
  times.back() = T;
  return Path(std::move(times), std::move(points));
}

} // namespace zeronoise
