#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "kpzlab/errors.hpp"
#include "kpzlab/she.hpp"
#include "kpzlab/stats.hpp"

using namespace kpzlab;

namespace {

SheConfig small_config(double beta, double t, double dt, std::size_t replicas) {
  SheConfig cfg;
  cfg.beta = beta;
  cfg.eps = 0.1;
  cfg.t_final = t;
  cfg.dt = dt;
  cfg.grid = TorusGrid(0.8, 32);
  cfg.replicas = replicas;
  cfg.base_seed = 21;
  cfg.threads = 1;
  return cfg;
}

}  // namespace

TEST(HeatStep, ConstantFieldUnchanged) {
  auto s = FieldState::flat(TorusGrid(1.0, 16));
  for (double& v : s.u) v = 2.5;
  heat_halfstep(s, 0.1);
  for (double v : s.u) EXPECT_EQ(v, 2.5);
}

TEST(HeatStep, FourierModeDecaysExactly) {
  const TorusGrid grid(1.0, 32);
  auto s = FieldState::flat(grid);
  const double k = 2.0 * std::numbers::pi * 3.0;
  for (int iy = 0; iy < 32; ++iy) {
    for (int ix = 0; ix < 32; ++ix) s.u[grid.index(ix, iy)] = std::cos(k * grid.position(ix, iy).x);
  }
  const double dt = 0.01;
  heat_halfstep(s, dt);
  const double decay = std::exp(-0.5 * k * k * dt);
  for (int ix = 0; ix < 32; ++ix) {
    EXPECT_NEAR(s.u[grid.index(ix, 5)], decay * std::cos(k * grid.position(ix, 5).x), 1e-13);
  }
}

TEST(NoiseStep, ZeroCouplingLeavesFieldUnchanged) {
  SheConfig cfg = small_config(0.0, 0.05, 1e-3, 1);
  const auto s = simulate(cfg, SeedStream{1, 0});
  for (double v : s.u) EXPECT_EQ(v, 1.0);
  EXPECT_NEAR(s.time, 0.05, 1e-12);
}

TEST(NoiseStep, UpdateFactorHasUnitMeanAndLognormalVariance) {
  const TorusGrid grid(0.4, 16);
  const double dt = 1e-3, beta_eps = 0.5;
  const MollificationOperator op(grid, Mollifier::smooth_bump(), 0.1);
  std::vector<double> f, sq;
  for (std::size_t r = 0; r < 100000; ++r) {
    auto s = FieldState::flat(grid);
    noise_multiply_step(s, op(sample_increment_slice(grid, dt, SeedStream{2, r})), beta_eps);
    f.push_back(s.u[37]);
    sq.push_back((s.u[37] - 1.0) * (s.u[37] - 1.0));
  }
  const double v = dt * op.variance_rate();
  EXPECT_NEAR(mean(f), 1.0, 3.0 * standard_error(f));
  EXPECT_NEAR(mean(sq), std::expm1(beta_eps * beta_eps * v), 3.0 * standard_error(sq));
}

TEST(SheConfig, DefaultStepDividesHorizon) {
  SheConfig cfg = small_config(0.5, 0.3, 7e-4, 1);
  const double dt = cfg.time_step();
  EXPECT_LE(dt, 7e-4);
  EXPECT_NEAR(dt * cfg.steps(), 0.3, 1e-12);
  cfg.dt.reset();
  EXPECT_LE(cfg.time_step(), cfg.grid.cell_area() / 4.0 + 1e-15);
}

TEST(SheConfig, RejectsBadInputs) {
  SheConfig cfg = small_config(0.5, 0.1, 1e-3, 1);
  cfg.eps = 0.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small_config(0.5, 0.1, 1e-3, 1);
  cfg.grid = TorusGrid(1.6, 16);
  EXPECT_THROW(SheSolver{cfg}, ConfigError);
  cfg = small_config(3.0, 0.1, 1e-3, 1);
  EXPECT_THROW(cfg.validate(), DomainError);
}

TEST(She, MeanOneAtTwoProbeLocations) {
  const SheConfig cfg = small_config(0.5, 0.25, 5e-3, 1000);
  const SheSolver solver(cfg);
  std::vector<double> avg, center, corner;
  for (std::size_t r = 0; r < cfg.replicas; ++r) {
    const auto s = solver.run(SeedStream{cfg.base_seed, r});
    double sum = 0.0;
    for (double v : s.u) sum += v;
    avg.push_back(sum / static_cast<double>(s.u.size()));
    center.push_back(probe_value(s));
    corner.push_back(s.u[cfg.grid.index(3, 7)]);
  }
  EXPECT_NEAR(mean(avg), 1.0, 3.0 * standard_error(avg));
  EXPECT_NEAR(mean(center), mean(corner),
              4.0 * std::hypot(standard_error(center), standard_error(corner)));
}

TEST(She, ObservableRefinementKeepsTheLaw) {
  const auto g = TestFunction::gaussian(0.1, Vec2{0.4, 0.4});
  SheConfig coarse = small_config(0.5, 0.05, 1e-3, 500);
  SheConfig fine = coarse;
  fine.grid = TorusGrid(0.8, 64);
  fine.base_seed = 22;
  const auto a = sample_ensemble(coarse, &g).observable;
  const auto b = sample_ensemble(fine, &g).observable;
  EXPECT_LT(ks_two_sample(a, b), 0.1);
}

TEST(Observable, FlatFieldsAndShifts) {
  const TorusGrid grid(0.8, 32);
  const auto g = TestFunction::gaussian(0.1, Vec2{0.4, 0.4});
  auto s = FieldState::flat(grid);
  EXPECT_EQ(observable_X(s, g), 0.0);
  for (double& v : s.u) v = std::exp(1.0);
  EXPECT_NEAR(observable_X(s, g), 1.0, 1e-3);

  auto field = simulate(small_config(0.5, 0.02, 1e-3, 1), SeedStream{3, 0});
  auto shifted = field;
  for (int iy = 0; iy < 32; ++iy) {
    for (int ix = 0; ix < 32; ++ix) {
      shifted.u[grid.index(ix + 5, iy - 2)] = field.u[grid.index(ix, iy)];
    }
  }
  const auto g_shift = g.recentered(Vec2{0.4 + 5 * grid.spacing(), 0.4 - 2 * grid.spacing()});
  EXPECT_EQ(observable_X(shifted, g_shift), observable_X(field, g));

  field.u[100] = 0.0;
  EXPECT_THROW(static_cast<void>(observable_X(field, g)), NumericalFailure);
}

TEST(Variance, ZeroCouplingAndTooFewReplicas) {
  const auto g = TestFunction::gaussian(0.1, Vec2{0.4, 0.4});
  EXPECT_EQ(ensemble_variance(small_config(0.0, 0.01, 1e-3, 5), g).value, 0.0);
  EXPECT_THROW(static_cast<void>(ensemble_variance(small_config(0.5, 0.01, 1e-3, 1), g)),
               ConfigError);
}

TEST(Gaussianity, DegenerateAndUndersized) {
  const auto g = TestFunction::gaussian(0.1, Vec2{0.4, 0.4});
  EXPECT_TRUE(gaussianity_sample(small_config(0.0, 0.01, 1e-3, 100), g).degenerate);
  EXPECT_THROW(static_cast<void>(gaussianity_sample(small_config(0.5, 0.01, 1e-3, 50), g)),
               ConfigError);
}

TEST(NegativeMoments, ZeroCouplingJensenAndLimits) {
  const auto zero = negative_moment_estimates(small_config(0.0, 0.05, 1e-3, 10), {1, 2});
  EXPECT_EQ(zero[0].value, 1.0);
  EXPECT_EQ(zero[1].value, 1.0);
  const auto r = negative_moment_estimates(small_config(0.3, 0.1, 2e-3, 300), {1, 2});
  EXPECT_GE(r[0].value, 1.0 - 3.0 * r[0].std_error);
  EXPECT_GE(r[1].value, r[0].value * r[0].value);
  EXPECT_THROW(static_cast<void>(negative_moment_estimate(small_config(0.3, 0.1, 2e-3, 10), 5)),
               ConfigError);
  EXPECT_THROW(static_cast<void>(negative_moment_estimate(small_config(0.6, 0.1, 2e-3, 10), 1)),
               ConfigError);
}

TEST(SecondMoment, PathFormulaAtZeroCoupling) {
  EXPECT_EQ(second_moment_path_estimate(small_config(0.0, 0.05, 1e-3, 1), 20, 4).value, 1.0);
}

TEST(FeynmanKac, ZeroCouplingIsOne) {
  const SheConfig cfg = small_config(0.0, 0.05, 1e-3, 1);
  NoiseHistory noise;
  const SheSolver solver(cfg);
  static_cast<void>(solver.run(SeedStream{5, 0}, &noise));
  const auto fk = fk_partition_estimate(cfg, noise, 50, SeedStream{6, 0});
  EXPECT_EQ(fk.report.value, 1.0);
}

TEST(FeynmanKac, AgreesWithGridSolution) {
  SheConfig cfg;
  cfg.beta = 0.3;
  cfg.eps = 0.1;
  cfg.t_final = 0.25;
  cfg.dt = 2.5e-3;
  cfg.grid = TorusGrid(1.6, 64);
  NoiseHistory noise;
  const SheSolver solver(cfg);
  const auto state = solver.run(SeedStream{7, 0}, &noise);
  const auto fk = fk_partition_estimate(cfg, noise, 10000, SeedStream{8, 0});
  // The grid value is exact for this noise history; only the path average is random.
  EXPECT_NEAR(fk.report.value, probe_value(state), 3.0 * fk.report.std_error);
  EXPECT_NEAR(fk.diagnostics.k_boundary, 1.0 / std::log(10.0), 1e-12);
}

TEST(FeynmanKac, StandardErrorScalesWithPaths) {
  SheConfig cfg = small_config(0.5, 0.1, 2e-3, 1);
  NoiseHistory noise;
  static_cast<void>(SheSolver(cfg).run(SeedStream{9, 0}, &noise));
  const auto a = fk_partition_estimate(cfg, noise, 4000, SeedStream{10, 0});
  const auto b = fk_partition_estimate(cfg, noise, 8000, SeedStream{11, 0});
  const double ratio = std::pow(a.report.std_error / b.report.std_error, 2);
  EXPECT_NEAR(ratio, 2.0, 0.6);
}

TEST(FeynmanKac, RejectsShortHistory) {
  SheConfig cfg = small_config(0.5, 0.1, 2e-3, 1);
  NoiseHistory noise;
  static_cast<void>(SheSolver(small_config(0.5, 0.05, 2e-3, 1)).run(SeedStream{9, 0}, &noise));
  EXPECT_THROW(static_cast<void>(fk_partition_estimate(cfg, noise, 10, SeedStream{})),
               ConfigError);
}
