#include <gtest/gtest.h>

#include <cmath>

#include "zeronoise/depauw_field.hpp"
#include "zeronoise/rng.hpp"

using namespace zeronoise;

namespace {
void expect_vec(const Vec2 &got, double a, double b, double tol = 1e-15) {
  EXPECT_NEAR(got[0], a, tol);
  EXPECT_NEAR(got[1], b, tol);
}
} // namespace

TEST(EvalW, RegionsAndTies) {
  expect_vec(eval_w({0.25, 0.10}), 0.0, 1.0);
  expect_vec(eval_w({0.10, 0.25}), -1.0, 0.0);
  expect_vec(eval_w({0.30, 0.30}), 0.0, 0.0);
  expect_vec(eval_w({0.60, 0.10}), 0.0, 0.0);
  expect_vec(eval_w({-0.25, 0.10}), 0.0, -1.0);
  expect_vec(eval_w({0.10, -0.25}), 1.0, 0.0);
  expect_vec(eval_w({0.5, 0.1}), 0.0, 0.0);
}

TEST(EvalW, DivergenceFreeInsideRegions) {
  CounterRng rng(17, 0, Lane::sampling);
  const double h = 1e-5;
  int tested = 0;
  while (tested < 10000) {
    Vec2 x{rng.uniform() - 0.5, rng.uniform() - 0.5};
    double a1 = std::abs(x[0]), a2 = std::abs(x[1]);
    if (std::abs(a1 - a2) < 1e-3 || std::max(a1, a2) > 0.5 - 1e-3) continue;
    double div = (eval_w({x[0] + h, x[1]})[0] - eval_w({x[0] - h, x[1]})[0]) / (2 * h) +
                 (eval_w({x[0], x[1] + h})[1] - eval_w({x[0], x[1] - h})[1]) / (2 * h);
    ASSERT_LT(std::abs(div), 1e-6);
    ++tested;
  }
}

TEST(EvalU, PeriodisationOverEvenLattice) {
  expect_vec(eval_u({1.25, 1.10}), 0.0, 1.0, 1e-14);
  expect_vec(eval_u({1.25, 0.10}), 0.0, 0.0);
  expect_vec(eval_u({0.25, 0.10}), 0.0, 1.0);
  expect_vec(eval_u({0.25, 0.10}, 2.0), 0.0, 0.5);
  // Shifting by a Lambda vector leaves u unchanged; by an odd vector it empties.
  CounterRng rng(2, 0, Lane::sampling);
  for (int i = 0; i < 1000; ++i) {
    Vec2 x{4.0 * rng.uniform(), 4.0 * rng.uniform()};
    Vec2 a = eval_u(x), b = eval_u({x[0] + 1.0, x[1] + 1.0}), c = eval_u({x[0] + 2.0, x[1]});
    EXPECT_NEAR(a[0], b[0], 1e-12);
    EXPECT_NEAR(a[1], b[1], 1e-12);
    EXPECT_NEAR(a[0], c[0], 1e-12);
    EXPECT_NEAR(a[1], c[1], 1e-12);
  }
}

TEST(StageOf, HalfOpenIntervals) {
  DepauwField f(1.0, 12);
  EXPECT_EQ(stage_of(f, 0.6), 0);
  EXPECT_EQ(stage_of(f, 1.0), 0);
  EXPECT_EQ(stage_of(f, 0.5), 1);
  EXPECT_EQ(stage_of(f, 0.3), 1);
  EXPECT_EQ(stage_of(f, 0.25), 2);
  EXPECT_EQ(stage_of(f, 0.2), 2);
  EXPECT_EQ(stage_of(f, std::ldexp(1.0, -13) * 1.5), 12);
  EXPECT_FALSE(stage_of(f, std::ldexp(1.0, -13)).has_value());
  EXPECT_FALSE(stage_of(f, 1e-9).has_value());
  EXPECT_THROW(stage_of(f, 0.0), std::domain_error);
  EXPECT_THROW(stage_of(f, 1.5), std::domain_error);
  DepauwField g(3.0, 4);
  EXPECT_EQ(stage_of(g, 2.0), 0);
  EXPECT_EQ(stage_of(g, 0.5), 2);
}

TEST(EvalBdp, StagesOnTheUnitTorus) {
  DepauwField f(1.0, 12);
  // Stage k uses the cell coordinate y = 2^{k+1} x and speed 1/(2T).
  expect_vec(eval_bdp(f, 0.6, TorusPoint(0.125, 0.05)), 0.0, 0.5);
  expect_vec(eval_bdp(f, 0.3, TorusPoint(0.0625, 0.025)), 0.0, 0.5);
  expect_vec(eval_bdp(f, 1e-9, TorusPoint(0.0625, 0.025)), 0.0, 0.0);
  expect_vec(eval_bdp(f, 0.0, TorusPoint(0.125, 0.05)), 0.0, 0.0);
  // Empty cell centred at y = (1, 0).
  expect_vec(eval_bdp(f, 0.6, TorusPoint(0.375, 0.05)), 0.0, 0.0);
  // Filled cell straddling the seam x1 = 0.
  expect_vec(eval_bdp(f, 0.6, TorusPoint(0.95, 0.01)), 0.0, -0.2, 1e-14);
}

TEST(EvalBdp, BoundedAndStagePeriodic) {
  DepauwField f(1.0, 12);
  CounterRng rng(4, 0, Lane::sampling);
  for (int i = 0; i < 20000; ++i) {
    double t = rng.uniform();
    TorusPoint x(rng.uniform(), rng.uniform());
    Vec2 b = eval_bdp(f, t, x);
    ASSERT_LE(norm(b), 2.0 * f.speed_factor * std::sqrt(2.0));
    ASSERT_LE(std::max(std::abs(b[0]), std::abs(b[1])), 2.0 * f.speed_factor);
    if (t <= f.truncation_time()) continue;
    int k = *stage_of(f, t);
    double step = std::ldexp(1.0, -k);
    double m = std::floor(4.0 * rng.uniform()), n = std::floor(4.0 * rng.uniform());
    Vec2 c = eval_bdp(f, t, translate(x, Vec2{m * step, n * step}));
    Vec2 d = eval_bdp(f, t, translate(x, Vec2{0.5 * step, 0.5 * step}));
    ASSERT_NEAR(b[0], c[0], 1e-9);
    ASSERT_NEAR(b[1], c[1], 1e-9);
    ASSERT_NEAR(b[0], d[0], 1e-9);
    ASSERT_NEAR(b[1], d[1], 1e-9);
  }
}

TEST(CellOf, Examples) {
  auto a = cell_of(0, TorusPoint(0.125, 0.05));
  EXPECT_EQ(a.center, (std::array<std::int64_t, 2>{0, 0}));
  EXPECT_TRUE(a.filled);
  auto b = cell_of(0, TorusPoint(0.375, 0.05));
  EXPECT_EQ(b.center, (std::array<std::int64_t, 2>{1, 0}));
  EXPECT_FALSE(b.filled);
  auto c = cell_of(1, TorusPoint(0.15, 0.025));
  EXPECT_EQ(c.center, (std::array<std::int64_t, 2>{1, 0}));
  EXPECT_FALSE(c.filled);
  // y = (1.8, 0.2) rounds to the centre (2, 0) == (0, 0) on the stage-0 torus.
  auto d = cell_of(0, TorusPoint(0.9, 0.1));
  EXPECT_EQ(d.center, (std::array<std::int64_t, 2>{0, 0}));
  EXPECT_TRUE(d.filled);
  EXPECT_THROW(cell_of(-1, TorusPoint(0.1, 0.1)), std::domain_error);
}

TEST(RhoBar, CheckerboardValues) {
  EXPECT_EQ(rho_bar(CheckerboardDensity{0, 0}, TorusPoint(0.5, 0.5)), 0);
  EXPECT_EQ(rho_bar(CheckerboardDensity{0, 0}, Vec2{1.5, 0.5}), 1);
  EXPECT_EQ(rho_bar(CheckerboardDensity{1, 1}, TorusPoint(0.1, 0.1)), 1);
  EXPECT_EQ(rho_bar(CheckerboardDensity{1, 0}, TorusPoint(0.6, 0.1)), 1);
  CounterRng rng(8, 0, Lane::sampling);
  for (int i = 0; i < 1000; ++i) {
    CheckerboardDensity d{static_cast<int>(8 * rng.uniform()), rng.uniform() < 0.5 ? 0 : 1};
    TorusPoint x(rng.uniform(), rng.uniform());
    EXPECT_EQ(rho_bar(d, x) + rho_bar_complement(d, x), 1);
  }
}
