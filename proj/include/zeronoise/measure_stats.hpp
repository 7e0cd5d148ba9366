#pragma once

// Empirical measures on the torus: uniformity tests, circle and sliced
// Wasserstein distances, binned disintegrations and the spread statistics
// used to tell Dirac from non-Dirac conditionals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "zeronoise/depauw_field.hpp"
#include "zeronoise/rng.hpp"
#include "zeronoise/torus.hpp"

namespace zeronoise {

class EmpiricalMeasure {
public:
  EmpiricalMeasure(std::vector<TorusPoint> support, std::vector<double> weights)
      : support_(std::move(support)), weights_(std::move(weights)) {
    if (support_.empty() || support_.size() != weights_.size())
      throw std::invalid_argument("EmpiricalMeasure: support and weights must match and be non-empty");
    double sum = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0)) throw std::invalid_argument("EmpiricalMeasure: negative weight");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("EmpiricalMeasure: weights must sum to 1");
  }

  /// Equal weights 1/n.
  static EmpiricalMeasure uniform(std::vector<TorusPoint> support) {
    const std::size_t n = support.size();
    if (n == 0) throw std::invalid_argument("EmpiricalMeasure: empty support");
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    return EmpiricalMeasure(std::move(support), std::move(w), Unchecked{});
  }

  std::size_t size() const { return support_.size(); }
  const std::vector<TorusPoint> &support() const { return support_; }
  const std::vector<double> &weights() const { return weights_; }

private:
  struct Unchecked {};
  EmpiricalMeasure(std::vector<TorusPoint> s, std::vector<double> w, Unchecked)
      : support_(std::move(s)), weights_(std::move(w)) {}

  std::vector<TorusPoint> support_;
  std::vector<double> weights_;
};

template <typename Map> EmpiricalMeasure pushforward(const EmpiricalMeasure &m, Map &&f) {
  std::vector<TorusPoint> s;
  s.reserve(m.size());
  for (const auto &p : m.support()) s.push_back(f(p));
  return EmpiricalMeasure(std::move(s), m.weights());
}

/// Bin index of a coordinate in [0,1) on k half-open bins.
inline std::size_t bin_index(double x, std::size_t k) {
  auto i = static_cast<std::size_t>(x * static_cast<double>(k));
  return std::min(i, k - 1);
}

inline std::size_t grid_bin(const TorusPoint &p, std::size_t k) {
  return bin_index(p[0], k) * k + bin_index(p[1], k);
}

struct ChiSquareResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t dof = 0;
};

/// p-value of a chi-square statistic with dof degrees of freedom.
inline double chi_square_sf(double statistic, std::size_t dof) {
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * static_cast<double>(dof), 0.5 * statistic);
}

/// Pearson test of the k x k histogram against the uniform law.
inline ChiSquareResult chi_square_uniformity(const std::vector<TorusPoint> &samples, std::size_t k) {
  if (k < 1) throw std::invalid_argument("chi_square_uniformity: k must be >= 1");
  const std::size_t cells = k * k;
  if (samples.size() < 5 * cells)
    throw std::invalid_argument("chi_square_uniformity: need at least 5 samples per bin");
  std::vector<std::size_t> counts(cells, 0);
  for (const auto &p : samples) ++counts[grid_bin(p, k)];
  const double expected = static_cast<double>(samples.size()) / static_cast<double>(cells);
  double stat = 0.0;
  for (std::size_t c : counts) {
    double d = static_cast<double>(c) - expected;
    stat += d * d / expected;
  }
  ChiSquareResult r;
  r.statistic = stat;
  r.dof = cells - 1;
  r.p_value = cells > 1 ? chi_square_sf(stat, r.dof) : 1.0;
  return r;
}

/// Weighted atoms on the circle R/Z, positions in [0,1).
struct CircleMeasure {
  std::vector<double> points;
  std::vector<double> weights;
};

/// Exact W1 on the circle: min over c of the integral of |F_a - F_b - c|,
/// attained at a weighted median of F_a - F_b (smallest one on ties).
inline double circular_w1(const CircleMeasure &a, const CircleMeasure &b) {
  struct Event {
    double x;
    double dw;
  };
  std::vector<Event> ev;
  ev.reserve(a.points.size() + b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) ev.push_back({wrap_unit(a.points[i]), a.weights[i]});
  for (std::size_t i = 0; i < b.points.size(); ++i) ev.push_back({wrap_unit(b.points[i]), -b.weights[i]});
  std::sort(ev.begin(), ev.end(), [](const Event &l, const Event &r) { return l.x < r.x; });

  // Piecewise-constant difference of CDFs: value on [x_j, x_{j+1}).
  std::vector<std::pair<double, double>> pieces; // (value, length)
  double diff = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < ev.size();) {
    const double x = ev[i].x;
    if (x > prev) pieces.emplace_back(diff, x - prev);
    while (i < ev.size() && ev[i].x == x) diff += ev[i++].dw;
    prev = x;
  }
  if (prev < 1.0) pieces.emplace_back(diff, 1.0 - prev);

  std::vector<std::pair<double, double>> sorted = pieces;
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (const auto &p : sorted) total += p.second;
  double acc = 0.0;
  double median = sorted.empty() ? 0.0 : sorted.back().first;
  for (const auto &p : sorted) {
    acc += p.second;
    if (acc >= 0.5 * total) {
      median = p.first;
      break;
    }
  }
  double w1 = 0.0;
  for (const auto &p : pieces) w1 += std::abs(p.first - median) * p.second;
  return w1;
}

/// Closed geodesic direction (a, b) with gcd(a, b) = 1; projects x to
/// a x_1 + b x_2 mod 1.
struct Direction {
  int a = 1;
  int b = 0;
  friend bool operator==(const Direction &, const Direction &) = default;
};

/// Axes first, then (1,1), (1,-1), (2,1), (1,2), (2,-1), (1,-2), (3,1), ...
inline std::vector<Direction> sliced_directions(std::size_t n) {
  std::vector<Direction> out{{1, 0}, {0, 1}};
  for (int m = 1; out.size() < n; ++m) {
    if (m == 1) {
      out.push_back({1, 1});
      out.push_back({1, -1});
      continue;
    }
    for (int j = 1; j < m && out.size() < n + 4; ++j) {
      if (std::gcd(m, j) != 1) continue;
      out.push_back({m, j});
      out.push_back({j, m});
      out.push_back({m, -j});
      out.push_back({j, -m});
    }
  }
  out.resize(n);
  return out;
}

inline CircleMeasure project(const EmpiricalMeasure &m, const Direction &d) {
  CircleMeasure c;
  c.points.reserve(m.size());
  for (const auto &p : m.support()) c.points.push_back(wrap_unit(d.a * p[0] + d.b * p[1]));
  c.weights = m.weights();
  return c;
}

/// Mean circular W1 of the projections on the first n_directions directions
/// against a reference given directly by its projections.
template <typename Reference>
double sliced_w1_to(const EmpiricalMeasure &a, Reference &&reference_projection,
                    std::size_t n_directions) {
  if (n_directions < 1) throw std::invalid_argument("sliced_w1: need at least one direction");
  double sum = 0.0;
  for (const auto &d : sliced_directions(n_directions))
    sum += circular_w1(project(a, d), reference_projection(d));
  return sum / static_cast<double>(n_directions);
}

inline double sliced_w1(const EmpiricalMeasure &a, const EmpiricalMeasure &b,
                        std::size_t n_directions) {
  return sliced_w1_to(a, [&b](const Direction &d) { return project(b, d); }, n_directions);
}

enum class ConditionOn { first, second };

/// Binned disintegration of a joint sample of pairs along one coordinate.
struct ConditionalFamily {
  std::size_t k = 0;
  ConditionOn condition_on = ConditionOn::first;
  std::vector<std::vector<TorusPoint>> members; // other coordinate, per bin

  std::size_t bins() const { return members.size(); }
  std::size_t count(std::size_t bin) const { return members[bin].size(); }
  bool empty(std::size_t bin) const { return members[bin].empty(); }

  /// Conditional law in a bin; empty bins have none.
  EmpiricalMeasure conditional(std::size_t bin) const {
    if (empty(bin)) throw std::out_of_range("ConditionalFamily: empty bin");
    return EmpiricalMeasure::uniform(members[bin]);
  }
};

using SamplePair = std::pair<TorusPoint, TorusPoint>;

inline ConditionalFamily disintegrate(const std::vector<SamplePair> &pairs, ConditionOn on,
                                      std::size_t k) {
  if (pairs.empty()) throw std::invalid_argument("disintegrate: no samples");
  if (k < 1) throw std::invalid_argument("disintegrate: k must be >= 1");
  ConditionalFamily fam;
  fam.k = k;
  fam.condition_on = on;
  fam.members.resize(k * k);
  for (const auto &[first, second] : pairs) {
    const TorusPoint &key = on == ConditionOn::first ? first : second;
    const TorusPoint &other = on == ConditionOn::first ? second : first;
    fam.members[grid_bin(key, k)].push_back(other);
  }
  return fam;
}

/// Fraction of samples in the black region of the checkerboard.
inline double branching_fraction(const std::vector<TorusPoint> &samples,
                                 const CheckerboardDensity &region) {
  if (samples.empty()) throw std::invalid_argument("branching_fraction: no samples");
  std::size_t black = 0;
  for (const auto &p : samples) black += static_cast<std::size_t>(rho_bar(region, p));
  return static_cast<double>(black) / static_cast<double>(samples.size());
}

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval for a binomial proportion at normal quantile z.
inline Interval wilson_interval(double fraction, std::size_t n, double z = 1.959963984540054) {
  const double nn = static_cast<double>(n);
  const double denom = 1.0 + z * z / nn;
  const double centre = (fraction + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(fraction * (1.0 - fraction) / nn + z * z / (4.0 * nn * nn)) / denom;
  return {centre - half, centre + half};
}

struct SpreadResult {
  double value = 0.0;
  bool degenerate = false; // single atom
  std::size_t pairs = 0;
};

/// Weighted mean torus distance over distinct unordered pairs of atoms.
/// Above max_pairs pairs, a fixed pseudo-random subsample of pairs is used.
inline SpreadResult spread(const EmpiricalMeasure &m, std::size_t max_pairs = 10000,
                           std::uint64_t seed = 0x5eed) {
  const std::size_t n = m.size();
  SpreadResult r;
  if (n < 2) {
    r.degenerate = true;
    return r;
  }
  const auto &pts = m.support();
  const auto &w = m.weights();
  double num = 0.0, den = 0.0;
  const double all_pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  if (all_pairs <= static_cast<double>(max_pairs)) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        double ww = w[i] * w[j];
        num += ww * torus_dist(pts[i], pts[j]);
        den += ww;
      }
    r.pairs = static_cast<std::size_t>(all_pairs);
  } else {
    CounterRng rng(seed, n, Lane::subsample);
    for (std::size_t p = 0; p < max_pairs; ++p) {
      auto i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
      auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n - 1));
      if (j >= i) ++j;
      double ww = w[i] * w[j];
      num += ww * torus_dist(pts[i], pts[j]);
      den += ww;
    }
    r.pairs = max_pairs;
  }
  r.value = den > 0.0 ? num / den : 0.0;
  return r;
}

} // namespace zeronoise
