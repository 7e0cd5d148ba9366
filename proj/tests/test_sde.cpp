#include <gtest/gtest.h>

#include <cmath>

#include "zeronoise/exact_flow.hpp"
#include "zeronoise/measure_stats.hpp"
#include "zeronoise/sde.hpp"

using namespace zeronoise;

TEST(Brownian, VarianceAndIndependence) {
  CounterRng rng(5, 0, Lane::noise);
  const double dt = 0.01, nu = 0.5;
  const int n = 200000;
  double s11 = 0, s22 = 0, s12 = 0, m1 = 0;
  for (int i = 0; i < n; ++i) {
    Vec2 d = brownian_increment(rng, dt, nu);
    s11 += d[0] * d[0];
    s22 += d[1] * d[1];
    s12 += d[0] * d[1];
    m1 += d[0];
  }
  const double var = nu * nu * dt;
  EXPECT_NEAR(s11 / n, var, 0.02 * var);
  EXPECT_NEAR(s22 / n, var, 0.02 * var);
  EXPECT_NEAR(s12 / n, 0.0, 0.02 * var);
  EXPECT_NEAR(m1 / n, 0.0, 5.0 * std::sqrt(var / n));
  EXPECT_THROW(brownian_increment(rng, 0.0, nu), std::domain_error);
}

TEST(Step, DriftOnlyExamples) {
  DepauwField f(1.0, 12);
  TorusPoint x(0.125, 0.05);
  for (auto integ : {Integrator::euler_maruyama, Integrator::drift_splitting}) {
    TorusPoint y = step(f, 0.6, 1e-3, x, {0.0, 0.0}, integ);
    EXPECT_NEAR(y[0], 0.125, 1e-15);
    EXPECT_NEAR(y[1], 0.0505, 1e-15);
  }
  TorusPoint z = step(ZeroField{1.0}, 0.3, 0.1, TorusPoint(0.95, 0.5), {0.1, -0.6}, Integrator::euler_maruyama);
  EXPECT_NEAR(z[0], 0.05, 1e-15);
  EXPECT_NEAR(z[1], 0.9, 1e-15);
}

TEST(Step, RejectsBreakpointCrossing) {
  DepauwField f(1.0, 12);
  TorusPoint x(0.3, 0.3);
  EXPECT_THROW(step(f, 0.499, 0.002, x, {0.0, 0.0}, Integrator::drift_splitting), std::logic_error);
  EXPECT_NO_THROW(step(f, 0.499, 0.001, x, {0.0, 0.0}, Integrator::drift_splitting));
  EXPECT_THROW(step(f, 0.999, 0.01, x, {0.0, 0.0}, Integrator::drift_splitting), std::domain_error);
}

TEST(TimeGrid, RespectsBreakpointsAndSaveTimes) {
  DepauwField f(1.0, 12);
  SdeConfig cfg;
  cfg.save_times = {0.0, 0.3, 0.5, 1.0};
  cfg.dt_base = 1.0 / 64.0;
  TimeGrid g = build_time_grid(f, cfg);
  ASSERT_EQ(g.segment.size() + 1, g.nodes.size());
  for (std::size_t i = 0; i < cfg.save_times.size(); ++i) EXPECT_EQ(g.nodes[g.save_nodes[i]], cfg.save_times[i]);
  const auto bp = drift_breakpoints(f);
  for (double b : bp) EXPECT_TRUE(std::binary_search(g.nodes.begin(), g.nodes.end(), b)) << b;
  std::vector<std::size_t> per_segment(bp.size() - 1, 0);
  for (std::size_t n = 0; n + 1 < g.nodes.size(); ++n) {
    const auto s = g.segment[n];
    EXPECT_GE(g.nodes[n], bp[s]);
    EXPECT_LE(g.nodes[n + 1], bp[s + 1]);
    EXPECT_LE(g.nodes[n + 1] - g.nodes[n], cfg.dt_base * (1 + 1e-12));
    ++per_segment[s];
  }
  for (auto c : per_segment) EXPECT_GE(c, cfg.steps_per_stage_min);
}

TEST(Simulate, DeterministicAcrossThreadCounts) {
  DepauwField f(1.0, 12);
  SdeConfig cfg;
  cfg.nu = 0.05;
  cfg.n_paths = 200;
  cfg.dt_base = 1.0 / 256.0;
  cfg.save_times = {0.25, 1.0};
  cfg.seed = 99;
  cfg.threads = 1;
  auto a = simulate(f, cfg);
  cfg.threads = 3;
  auto b = simulate(f, cfg);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_EQ(a.samples[i], b.samples[i]);
  cfg.seed = 100;
  auto c = simulate(f, cfg);
  EXPECT_NE(a.samples[0], c.samples[0]);
}

TEST(Simulate, ZeroNoiseFollowsTheFlow) {
  DepauwField f(1.0, 12);
  SdeConfig cfg;
  cfg.nu = 0.0;
  cfg.n_paths = 500;
  cfg.dt_base = 1.0 / 128.0;
  cfg.save_times = {0.3, 1.0};
  auto ens = simulate(f, cfg);
  for (std::size_t i = 0; i < ens.n_paths; ++i) {
    ASSERT_LT(torus_dist(ens.at(i, 0), flow(f, 0.0, 0.3, ens.initial[i])), 1e-12);
    ASSERT_LT(torus_dist(ens.at(i, 1), flow(f, 0.0, 1.0, ens.initial[i])), 1e-12);
  }
}

TEST(Simulate, RecordedPathsMatchSamples) {
  DepauwField f(1.0, 12);
  SdeConfig cfg;
  cfg.nu = 0.1;
  cfg.n_paths = 20;
  cfg.dt_base = 1.0 / 128.0;
  cfg.save_times = {0.5, 1.0};
  cfg.record_paths = true;
  cfg.initial = InitialLaw::at(TorusPoint(0.2, 0.7));
  auto ens = simulate(f, cfg);
  ASSERT_EQ(ens.paths.size(), cfg.n_paths);
  for (std::size_t i = 0; i < cfg.n_paths; ++i) {
    EXPECT_EQ(ens.initial[i], TorusPoint(0.2, 0.7));
    EXPECT_EQ(evaluate(ens.paths[i], 0.5), ens.at(i, 0));
    EXPECT_EQ(ens.paths[i].points().back(), ens.at(i, 1));
  }
}

TEST(Simulate, UniformLawIsInvariant) {
  DepauwField f(1.0, 12);
  SdeConfig cfg;
  cfg.nu = 0.05;
  cfg.n_paths = 20000;
  cfg.dt_base = 1.0 / 256.0;
  cfg.save_times = {0.5, 1.0};
  auto ens = simulate(f, cfg);
  EXPECT_GT(chi_square_uniformity(ens.marginal(0), 16).p_value, 0.001);
  EXPECT_GT(chi_square_uniformity(ens.marginal(1), 16).p_value, 0.001);
}

TEST(Simulate, InputValidation) {
  DepauwField f(1.0, 12);
  SdeConfig cfg;
  cfg.n_paths = 0;
  EXPECT_THROW(simulate(f, cfg), std::invalid_argument);
  cfg.n_paths = 10;
  cfg.nu = -1.0;
  EXPECT_THROW(simulate(f, cfg), std::invalid_argument);
  cfg.nu = 0.1;
  cfg.save_times = {1.0, 0.5};
  EXPECT_THROW(simulate(f, cfg), std::invalid_argument);
  cfg.save_times = {1.0};
  cfg.initial = InitialLaw::list({TorusPoint(0.1, 0.1)});
  EXPECT_THROW(simulate(f, cfg), std::invalid_argument);
  cfg.initial = InitialLaw::uniform();
  cfg.record_paths = true;
  cfg.n_paths = 100000;
  cfg.memory_limit_bytes = 1 << 20;
  EXPECT_THROW(simulate(f, cfg), std::length_error);
}
