#include <gtest/gtest.h>

#include <cmath>

#include "zeronoise/rng.hpp"
#include "zeronoise/torus.hpp"

using namespace zeronoise;

namespace {

// (t mod 1, 0) sampled on a uniform grid over [0, 1].
Path linear_path(std::size_t n) {
  std::vector<double> ts;
  std::vector<TorusPoint> xs;
  for (std::size_t i = 0; i <= n; ++i) {
    double t = static_cast<double>(i) / static_cast<double>(n);
    ts.push_back(t);
    xs.emplace_back(t, 0.0);
  }
  return Path(ts, xs);
}

} // namespace

TEST(TorusPoint, WrapsIntoUnitSquare) {
  TorusPoint p(1.25, -0.25);
  EXPECT_DOUBLE_EQ(p[0], 0.25);
  EXPECT_DOUBLE_EQ(p[1], 0.75);
  TorusPoint q(-1e-18, 3.0);
  EXPECT_GE(q[0], 0.0);
  EXPECT_LT(q[0], 1.0);
  EXPECT_EQ(q[1], 0.0);
}

TEST(TorusPoint, IntegerShiftInvariance) {
  CounterRng rng(5, 0, Lane::sampling);
  for (int i = 0; i < 1000; ++i) {
    Vec2 v{rng.uniform(), rng.uniform()};
    double m = std::floor(20.0 * rng.uniform()) - 10.0;
    double n = std::floor(20.0 * rng.uniform()) - 10.0;
    TorusPoint a(v), b(Vec2{v[0] + m, v[1] + n});
    EXPECT_NEAR(torus_dist(a, b), 0.0, 1e-12);
  }
}

TEST(TorusDist, Examples) {
  EXPECT_EQ(torus_dist(TorusPoint(0.0, 0.0), TorusPoint(0.0, 0.0)), 0.0);
  EXPECT_NEAR(torus_dist(TorusPoint(0.1, 0.0), TorusPoint(0.9, 0.0)), 0.2, 1e-15);
  EXPECT_NEAR(torus_dist(TorusPoint(0.0, 0.0), TorusPoint(0.5, 0.5)), std::sqrt(2.0) / 2.0, 1e-15);
}

TEST(TorusDist, MetricProperties) {
  CounterRng rng(1, 0, Lane::sampling);
  for (int i = 0; i < 10000; ++i) {
    TorusPoint a(rng.uniform(), rng.uniform()), b(rng.uniform(), rng.uniform()),
        c(rng.uniform(), rng.uniform());
    EXPECT_LE(torus_dist(a, c), torus_dist(a, b) + torus_dist(b, c) + 1e-12);
    EXPECT_EQ(torus_dist(a, b), torus_dist(b, a));
    EXPECT_LE(torus_dist(a, b), std::sqrt(2.0) / 2.0 + 1e-15);
  }
}

TEST(TorusDist, GenericDimension) {
  TorusPointN<3> a(0.1, 0.2, 0.95), b(0.9, 0.2, 0.05);
  EXPECT_NEAR(torus_dist(a, b), std::sqrt(0.04 + 0.01), 1e-15);
}

TEST(MinimalOffset, HalfTieGoesPositive) {
  EXPECT_EQ(minimal_offset(0.5), 0.5);
  EXPECT_EQ(minimal_offset(-0.5), 0.5);
  EXPECT_EQ(minimal_offset(0.25), 0.25);
  EXPECT_EQ(minimal_offset(-0.75), 0.25);
}

TEST(PathTest, RejectsBadGrids) {
  EXPECT_THROW(Path({0.0, 0.5, 0.5}, {{}, {}, {}}), std::invalid_argument);
  EXPECT_THROW(Path({0.1, 0.5}, {{}, {}}), std::invalid_argument);
  EXPECT_THROW(Path({0.0, 0.5}, {{}}), std::invalid_argument);
}

TEST(PathTest, LiftIsContinuous) {
  Path p = linear_path(10);
  EXPECT_DOUBLE_EQ(p.lift().back()[0], 1.0);
  EXPECT_EQ(p.points().back()[0], 0.0);
}

TEST(Evaluate, InterpolatesAndReproducesNodes) {
  Path p({0.0, 1.0}, {TorusPoint(0.0, 0.0), TorusPoint(0.5, 0.0)});
  // A half-period jump resolves to +1/2, so the lift is (0,0) -> (0.5,0).
  TorusPoint mid = evaluate(p, 0.5);
  EXPECT_DOUBLE_EQ(mid[0], 0.25);
  EXPECT_DOUBLE_EQ(mid[1], 0.0);

  Path q = linear_path(7);
  for (std::size_t j = 0; j < q.size(); ++j) EXPECT_EQ(evaluate(q, q.times()[j]), q.points()[j]);

  Path c = Path::constant(TorusPoint(0.3, 0.7), 1.0);
  EXPECT_EQ(evaluate(c, 0.42), TorusPoint(0.3, 0.7));
  EXPECT_THROW(evaluate(q, 1.5), std::domain_error);
  EXPECT_THROW(evaluate(q, -0.1), std::domain_error);
}

TEST(StopBefore, Examples) {
  Path p = linear_path(8);
  Path same = stop_before(p, 0.0);
  EXPECT_EQ(same.times(), p.times());
  Path frozen = stop_before(p, 1.0);
  for (double t : {0.0, 0.3, 0.99, 1.0}) EXPECT_NEAR(torus_dist(evaluate(frozen, t), evaluate(p, 1.0)), 0.0, 1e-15);
  Path s = stop_before(p, 0.5);
  TorusPoint v = evaluate(s, 0.25);
  EXPECT_NEAR(v[0], 0.5, 1e-15);
  EXPECT_NEAR(v[1], 0.0, 1e-15);
  EXPECT_NEAR(torus_dist(evaluate(s, 0.75), evaluate(p, 0.75)), 0.0, 1e-15);
}

TEST(ReverseHead, Examples) {
  Path p = linear_path(8);
  Path r = reverse_head(p, 0.5);
  TorusPoint v = evaluate(r, 0.25);
  EXPECT_NEAR(v[0], 0.75, 1e-15);
  EXPECT_NEAR(v[1], 0.0, 1e-15);
  EXPECT_NEAR(torus_dist(evaluate(r, 0.9), evaluate(p, 0.5)), 0.0, 1e-15);

  Path r0 = reverse_head(p, 0.0);
  for (double t : {0.0, 0.5, 1.0}) EXPECT_EQ(evaluate(r0, t), p.points().back());

  Path full = reverse_head(p, 1.0);
  Path beta = time_reverse(p);
  for (double t : {0.0, 0.1, 0.37, 0.8, 1.0})
    EXPECT_NEAR(torus_dist(evaluate(full, t), evaluate(beta, t)), 0.0, 1e-14);
}

TEST(TimeReverse, ExampleAndInvolution) {
  Path p = linear_path(10);
  TorusPoint v = evaluate(time_reverse(p), 0.3);
  EXPECT_NEAR(v[0], 0.7, 1e-14);
  Path c = Path::constant(TorusPoint(0.2, 0.4), 1.0);
  EXPECT_EQ(time_reverse(c).points(), c.points());

  CounterRng rng(9, 0, Lane::sampling);
  std::vector<double> ts{0.0};
  std::vector<TorusPoint> xs{TorusPoint(rng.uniform(), rng.uniform())};
  for (int i = 0; i < 50; ++i) {
    ts.push_back(ts.back() + 0.01 + rng.uniform());
    xs.emplace_back(rng.uniform(), rng.uniform());
  }
  Path q(ts, xs);
  Path qq = time_reverse(time_reverse(q));
  EXPECT_EQ(qq.points(), q.points());
  for (std::size_t i = 0; i < q.size(); ++i) EXPECT_NEAR(qq.times()[i], q.times()[i], 1e-13);
}

TEST(PathTransforms, StartPointProperty) {
  CounterRng rng(3, 0, Lane::sampling);
  std::vector<double> ts{0.0};
  std::vector<TorusPoint> xs{TorusPoint(0.5, 0.5)};
  for (int i = 0; i < 40; ++i) {
    ts.push_back(ts.back() + 0.025);
    xs.push_back(translate(xs.back(), Vec2{0.1 * (rng.uniform() - 0.5), 0.1 * (rng.uniform() - 0.5)}));
  }
  Path p(ts, xs);
  for (int i = 0; i < 200; ++i) {
    double tau = p.horizon() * rng.uniform();
    EXPECT_NEAR(torus_dist(evaluate(stop_before(p, tau), 0.0), evaluate(p, tau)), 0.0, 1e-14);
    EXPECT_EQ(evaluate(reverse_head(p, tau), 0.0), evaluate(p, p.horizon()));
  }
}
