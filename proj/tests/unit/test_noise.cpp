#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "kpzlab/errors.hpp"
#include "kpzlab/noise.hpp"
#include "kpzlab/stats.hpp"

using namespace kpzlab;

TEST(NoiseSlice, CellVarianceAndIndependence) {
  const TorusGrid grid(0.8, 16);
  const double dt = 1e-3;
  std::vector<double> sq, cross, total;
  for (std::size_t r = 0; r < 10000; ++r) {
    const auto s = sample_increment_slice(grid, dt, SeedStream{1, r});
    sq.push_back(s.raw[17] * s.raw[17]);
    cross.push_back(s.raw[17] * s.raw[18]);
    double sum = 0.0;
    for (double v : s.raw) sum += v;
    total.push_back(sum * sum);
  }
  const double cell = dt * grid.cell_area();
  EXPECT_NEAR(mean(sq), cell, 3.0 * standard_error(sq));
  EXPECT_NEAR(mean(cross), 0.0, 3.0 * standard_error(cross));
  EXPECT_NEAR(mean(total), dt * 0.8 * 0.8, 3.0 * standard_error(total));
}

TEST(NoiseSlice, RejectsNonpositiveStep) {
  EXPECT_THROW(sample_increment_slice(TorusGrid(1.0, 8), 0.0, SeedStream{}), ConfigError);
}

TEST(NoiseSlice, DeterministicPerStream) {
  const TorusGrid grid(1.0, 8);
  EXPECT_EQ(sample_increment_slice(grid, 0.1, SeedStream{3, 4}).raw,
            sample_increment_slice(grid, 0.1, SeedStream{3, 4}).raw);
}

TEST(Mollification, RejectsUnresolvedScale) {
  EXPECT_THROW(MollificationOperator(TorusGrid(1.6, 32), Mollifier::smooth_bump(), 0.1),
               ConfigError);
  EXPECT_THROW(MollificationOperator(TorusGrid(1.6, 32), Mollifier::grid_box(0.5), 0.05),
               ConfigError);
  EXPECT_THROW(MollificationOperator(TorusGrid(0.8, 64), Mollifier::smooth_bump(), 0.5),
               ConfigError);
}

TEST(Mollification, SingleCellBoxRescalesRaw) {
  const TorusGrid grid(0.8, 16);
  const double w = std::sqrt(0.5);
  const MollificationOperator op(grid, Mollifier::grid_box(w), grid.spacing() / w);
  const auto raw = sample_increment_slice(grid, 1e-3, SeedStream{2, 0});
  const auto out = op(raw);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_NEAR(out.values[i], raw.raw[i] / grid.cell_area(), 1e-12 * std::abs(raw.raw[i]) /
                                                                      grid.cell_area() + 1e-14);
  }
  EXPECT_NEAR(op.variance_rate(), 1.0 / grid.cell_area(), 1e-9 / grid.cell_area());
}

TEST(Mollification, StencilHasUnitMassAndMatchesVariance) {
  const TorusGrid grid(0.8, 64);
  const MollificationOperator op(grid, Mollifier::smooth_bump(), 0.1);
  double mass = 0.0, sq = 0.0;
  for (double w : op.stencil()) {
    mass += w;
    sq += w * w;
  }
  EXPECT_NEAR(mass, 1.0, 1e-12);
  EXPECT_NEAR(op.raw_mass(), 1.0, 1e-2);
  EXPECT_NEAR(op.variance_rate(), sq / grid.cell_area(), 1e-12 * op.variance_rate());
  EXPECT_NEAR(op.covariance_rate_cells(0, 0), op.variance_rate(), 1e-9 * op.variance_rate());
  // Continuum value eps^-2 R(0) within 5% at dx = eps / 8.
  EXPECT_NEAR(op.variance_rate() / (default_covariance().r0() / 0.01), 1.0, 0.05);
}

TEST(Mollification, LinearUpToRounding) {
  const TorusGrid grid(0.8, 32);
  const MollificationOperator op(grid, Mollifier::smooth_bump(), 0.1);
  const auto s1 = sample_increment_slice(grid, 1e-3, SeedStream{4, 0});
  const auto s2 = sample_increment_slice(grid, 1e-3, SeedStream{4, 1});
  const double a = 0.7, b = -1.3;
  Field combo(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) combo[i] = a * s1.raw[i] + b * s2.raw[i];
  Field m1(grid.size()), m2(grid.size()), mc(grid.size());
  op.apply(s1.raw, m1);
  op.apply(s2.raw, m2);
  op.apply(combo, mc);
  double scale = 0.0;
  for (double v : mc) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_NEAR(mc[i], a * m1[i] + b * m2[i], 1e-13 * scale);
  }
}

TEST(Mollification, StationaryLagCovariance) {
  const TorusGrid grid(0.8, 32);
  const double dt = 1e-3;
  const MollificationOperator op(grid, Mollifier::smooth_bump(), 0.1);
  std::vector<double> a, b;
  for (std::size_t r = 0; r < 20000; ++r) {
    const auto m = op(sample_increment_slice(grid, dt, SeedStream{5, r}));
    a.push_back(m.values[grid.index(3, 3)] * m.values[grid.index(5, 3)]);
    b.push_back(m.values[grid.index(20, 11)] * m.values[grid.index(22, 11)]);
  }
  const double se = std::hypot(standard_error(a), standard_error(b));
  EXPECT_NEAR(mean(a), mean(b), 4.0 * se);
  EXPECT_NEAR(mean(a), dt * op.covariance_rate_cells(2, 0), 3.0 * standard_error(a));
}

TEST(Mollification, SelfTestMatchesKernel) {
  const TorusGrid grid(0.8, 64);
  const auto st = covariance_selftest(grid, Mollifier::smooth_bump(), 0.1, 1e-3, 2000, 6, 1);
  ASSERT_EQ(st.spatial.size(), 5u);
  for (const auto& row : st.spatial) {
    EXPECT_FALSE(row.flagged) << "lag " << row.lag;
    EXPECT_FALSE(row.flagged_discrete) << "lag " << row.lag;
  }
  EXPECT_NEAR(st.spatial.back().empirical, 0.0, 4.0 * st.spatial.back().std_error);
  EXPECT_NEAR(st.temporal.empirical, 0.0, 4.0 * st.temporal.std_error);
  EXPECT_FALSE(st.any_flagged());
}

TEST(GridExport, BinaryAndCsvRoundTrip) {
  const TorusGrid grid(0.8, 8);
  const auto s = sample_increment_slice(grid, 1e-3, SeedStream{7, 0});
  const GridHeader h{8, 0.8, 1e-3, 0.1, 77};
  {
    std::stringstream ss;
    write_grid_binary(ss, h, s.raw);
    GridHeader back;
    EXPECT_EQ(read_grid_binary(ss, back), s.raw);
    EXPECT_EQ(back.n, 8);
    EXPECT_EQ(back.seed, 77u);
    EXPECT_EQ(back.eps, 0.1);
  }
  {
    std::stringstream ss;
    write_grid_csv(ss, h, s.raw);
    GridHeader back;
    EXPECT_EQ(read_grid_csv(ss, back), s.raw);
    EXPECT_EQ(back.side, 0.8);
  }
}
