#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <gtest/gtest.h>

#include "kpzlab/brownian.hpp"
#include "kpzlab/errors.hpp"
#include "kpzlab/stats.hpp"

using namespace kpzlab;

namespace {

constexpr double kPi = std::numbers::pi;

// E int_0^T R(Y_s) ds for Y with per-coordinate variance D s, started at 0:
// int_0^T G_{Ds}(z) ds = E1(|z|^2 / (2 D T)) / (2 pi D).
double mean_occupation(double T, double D) {
  const auto& R = default_covariance();
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double r) {
        if (r == 0.0) return 0.0;
        return 2.0 * kPi * r * R.radial(r) * boost::math::expint(1, r * r / (2.0 * D * T)) /
               (2.0 * kPi * D);
      },
      0.0, 1.0, 20, 1e-12);
}

// Mean and standard error of f applied to the first coordinate at the horizon.
template <class Sampler, class F>
std::pair<double, double> endpoint_moment(Sampler&& sample, std::size_t n, F&& f) {
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = f(sample(SeedStream{42, i}).positions.back());
  return {mean(xs), standard_error(xs)};
}

}  // namespace

TEST(BrownianPath, GridShape) {
  const PathConfig cfg{1.0, 0.01};
  const auto p = sample_path(cfg, SeedStream{1, 0});
  ASSERT_EQ(p.times.size(), 101u);
  ASSERT_EQ(p.positions.size(), 101u);
  EXPECT_EQ(p.positions.front(), Vec2{});
  EXPECT_DOUBLE_EQ(p.horizon(), 1.0);
}

TEST(BrownianPath, RejectsBadConfig) {
  EXPECT_THROW(sample_path(PathConfig{1.0, 0.0}, SeedStream{}), ConfigError);
  EXPECT_THROW(sample_path(PathConfig{1.0, 0.3}, SeedStream{}), ConfigError);
  EXPECT_THROW(sample_path(PathConfig{-1.0, 0.1}, SeedStream{}), ConfigError);
}

TEST(BrownianPath, SameStreamSamePath) {
  const PathConfig cfg{1.0, 0.01};
  const auto a = sample_path(cfg, SeedStream{5, 3});
  const auto b = sample_path(cfg, SeedStream{5, 3});
  const auto c = sample_path(cfg, SeedStream{5, 4});
  EXPECT_EQ(a.positions, b.positions);
  EXPECT_NE(a.positions, c.positions);
}

TEST(BrownianPath, EndpointVarianceEqualsHorizon) {
  const PathConfig cfg{1.0, 0.01};
  const auto [m, se] = endpoint_moment([&](const SeedStream& s) { return sample_path(cfg, s); },
                                       100000, [](Vec2 x) { return x.x * x.x; });
  EXPECT_NEAR(m, 1.0, 3.0 * se);
}

TEST(BrownianPath, RelativePathVarianceIsDoubled) {
  const PathConfig cfg{1.0, 0.01};
  const auto [m, se] =
      endpoint_moment([&](const SeedStream& s) { return sample_relative_path(cfg, s); }, 100000,
                      [](Vec2 x) { return x.y * x.y; });
  EXPECT_NEAR(m, 2.0, 3.0 * se);
}

TEST(BrownianPath, HalvingTheStepKeepsTheLaw) {
  std::vector<double> a, b;
  for (std::size_t i = 0; i < 10000; ++i) {
    a.push_back(sample_path(PathConfig{1.0, 0.01}, SeedStream{7, i}).positions.back().x);
    b.push_back(sample_path(PathConfig{1.0, 0.005}, SeedStream{8, i}).positions.back().x);
  }
  EXPECT_LT(ks_two_sample(a, b), 0.05);
}

TEST(BrownianPath, InterpolatesBetweenGridTimes) {
  const auto p = sample_path(PathConfig{1.0, 0.1}, SeedStream{2, 0});
  const Vec2 mid = p.at(0.05);
  EXPECT_DOUBLE_EQ(mid.x, 0.5 * (p.positions[0].x + p.positions[1].x));
  EXPECT_EQ(p.at(1.0), p.positions.back());
}

TEST(BrownianBridge, PinnedAtEndpoint) {
  const Vec2 end{0.7, -1.2};
  const auto p = sample_bridge(PathConfig{1.0, 0.01}, end, SeedStream{3, 0});
  EXPECT_EQ(p.positions.front(), Vec2{});
  EXPECT_NEAR(p.positions.back().x, end.x, 1e-14);
  EXPECT_NEAR(p.positions.back().y, end.y, 1e-14);
}

TEST(BrownianBridge, MidpointLaw) {
  const Vec2 end{1.0, 0.0};
  const PathConfig cfg{1.0, 0.01};
  std::vector<double> mids, sq;
  for (std::size_t i = 0; i < 100000; ++i) {
    const double x = sample_bridge(cfg, end, SeedStream{9, i}).positions[50].x;
    mids.push_back(x);
    sq.push_back((x - 0.5) * (x - 0.5));
  }
  EXPECT_NEAR(mean(mids), 0.5, 3.0 * standard_error(mids));
  EXPECT_NEAR(mean(sq), 0.25, 3.0 * standard_error(sq));
}

TEST(Occupation, FrozenPathIntegratesConstant) {
  const auto p = BrownianPath::frozen(PathConfig{2.0, 0.01});
  const double v = occupation_functional(p, OccupationQuery{Vec2{}, 0.0, 2.0});
  EXPECT_NEAR(v, 2.0 * default_covariance().r0(), 1e-12);
}

TEST(Occupation, OutOfReachOffsetGivesZero) {
  const auto p = sample_path(PathConfig{0.01, 0.001}, SeedStream{4, 0});
  EXPECT_EQ(occupation_functional(p, OccupationQuery{Vec2{3.0, 0.0}, 0.0, 0.01}), 0.0);
}

TEST(Occupation, EmptyIntervalGivesZero) {
  const auto p = sample_path(PathConfig{1.0, 0.01}, SeedStream{4, 1});
  EXPECT_EQ(occupation_functional(p, OccupationQuery{Vec2{}, 0.4, 0.4}), 0.0);
}

TEST(Occupation, IntervalOutsideHorizonIsRejected) {
  const auto p = sample_path(PathConfig{1.0, 0.01}, SeedStream{4, 2});
  EXPECT_THROW(static_cast<void>(occupation_functional(p, OccupationQuery{Vec2{}, 0.5, 1.5})),
               QueryError);
  EXPECT_THROW(static_cast<void>(occupation_functional(p, OccupationQuery{Vec2{}, 0.6, 0.5})),
               QueryError);
}

TEST(Occupation, AdditiveOverSplitIntervals) {
  const auto p = sample_relative_path(PathConfig{1.0, 0.01}, SeedStream{5, 0});
  const Vec2 x{0.2, 0.1};
  for (double b : {0.5, 0.437}) {
    const double whole = occupation_functional(p, {x, 0.0, 1.0});
    const double parts =
        occupation_functional(p, {x, 0.0, b}) + occupation_functional(p, {x, b, 1.0});
    EXPECT_NEAR(parts, whole, 1e-13 * std::max(1.0, whole)) << "split at " << b;
  }
}

TEST(Occupation, MirrorSymmetry) {
  auto p = sample_relative_path(PathConfig{1.0, 0.01}, SeedStream{6, 0});
  const Vec2 x{0.3, -0.1};
  const double v = occupation_functional(p, {x, 0.0, 1.0});
  for (auto& q : p.positions) q = -q;
  EXPECT_EQ(occupation_functional(p, {-x, 0.0, 1.0}), v);
}

TEST(Occupation, MeanMatchesExponentialIntegralOracle) {
  const PathConfig cfg{1.0, 0.01};
  std::vector<double> xs;
  for (std::size_t i = 0; i < 10000; ++i) {
    xs.push_back(occupation_functional(sample_relative_path(cfg, SeedStream{10, i}),
                                       {Vec2{}, 0.0, 1.0}));
  }
  EXPECT_NEAR(mean(xs), mean_occupation(1.0, 2.0), 3.0 * standard_error(xs));
}

TEST(AdaptiveWalker, FrozenPathIsExact) {
  Rng rng(SeedStream{1, 0});
  const double v = adaptive_occupation(3.0, Vec2{}, 0.0, default_covariance(), rng);
  EXPECT_NEAR(v, 3.0 * default_covariance().r0(), 1e-12);
  Rng rng2(SeedStream{1, 0});
  EXPECT_EQ(adaptive_occupation(3.0, Vec2{2.0, 0.0}, 0.0, default_covariance(), rng2), 0.0);
}

TEST(AdaptiveWalker, LongHorizonMeanMatchesOracle) {
  // kr at eps = 1e-2 reaches horizon 1e4, far beyond a uniform grid.
  const double eps = 1e-2;
  McOptions opts;
  opts.replicas = 2000;
  opts.base_seed = 11;
  opts.threads = 1;
  const auto xs = kr_samples(eps, 1.0, Vec2{}, opts);
  const double oracle = mean_occupation(1.0 / (eps * eps), 2.0) / -std::log(eps);
  EXPECT_NEAR(mean(xs), oracle, 3.0 * standard_error(xs));
}

TEST(AdaptiveWalker, BridgeReweightingRecoversFreeLaw) {
  // Averaging bridge functionals over endpoints drawn from the free endpoint law
  // reproduces the free-path expectation.
  const double T = 100.0, beta2 = 0.25 / -std::log(0.1);
  std::vector<double> free, bridged;
  for (std::size_t i = 0; i < 4000; ++i) {
    Rng a(SeedStream{12, i});
    free.push_back(std::exp(beta2 * adaptive_occupation(T, Vec2{}, 1.0, default_covariance(), a)));
    Rng b(SeedStream{13, i});
    const Vec2 end{std::sqrt(T) * b.normal(), std::sqrt(T) * b.normal()};
    bridged.push_back(
        std::exp(beta2 * adaptive_occupation(T, Vec2{}, 1.0, default_covariance(), b, {}, end)));
  }
  const double se = std::hypot(standard_error(free), standard_error(bridged));
  EXPECT_NEAR(mean(bridged), mean(free), 3.0 * se);
}

TEST(KrSample, DomainChecks) {
  EXPECT_THROW(static_cast<void>(kr_sample(1.0, 1.0, Vec2{}, SeedStream{})), DomainError);
  EXPECT_THROW(static_cast<void>(kr_sample(0.1, 0.0, Vec2{}, SeedStream{})), DomainError);
}

TEST(FEstimate, ZeroCouplingIsExactlyOne) {
  McOptions opts;
  opts.replicas = 50;
  const auto r = f_estimate(0.0, 1e-2, 1.0, Vec2{}, opts);
  EXPECT_EQ(r.value, 1.0);
  EXPECT_EQ(r.std_error, 0.0);
}

TEST(FEstimate, MonotoneInCouplingWithSharedSeeds) {
  McOptions opts;
  opts.replicas = 500;
  opts.base_seed = 14;
  const auto lo = f_estimate(0.5, 1e-2, 1.0, Vec2{}, opts);
  const auto hi = f_estimate(1.0, 1e-2, 1.0, Vec2{}, opts);
  EXPECT_GT(lo.value, 1.0);
  EXPECT_GT(hi.value, lo.value);
  EXPECT_THROW(static_cast<void>(f_estimate(2.6, 1e-2, 1.0, Vec2{}, opts)), DomainError);
}

TEST(ExpMoment, ZeroCouplingIsOne) {
  McOptions opts;
  opts.replicas = 20;
  EXPECT_EQ(exp_moment_estimate(0.0, 0.1, 1.0, Vec2{}, std::nullopt, opts).value, 1.0);
}

TEST(ExpMoment, BoundedAsEpsShrinks) {
  McOptions opts;
  opts.replicas = 2000;
  opts.base_seed = 15;
  std::vector<double> vals;
  for (double eps : {0.1, 0.05, 0.02}) {
    vals.push_back(exp_moment_estimate(0.5, eps, 1.0, Vec2{}, std::nullopt, opts).value);
  }
  EXPECT_LT(*std::max_element(vals.begin(), vals.end()) /
                *std::min_element(vals.begin(), vals.end()),
            2.0);
}

TEST(ExpMoment, FarBridgeDoesNotExceedFreePaths) {
  McOptions opts;
  opts.replicas = 2000;
  opts.base_seed = 16;
  const auto free = exp_moment_estimate(0.5, 0.1, 1.0, Vec2{}, std::nullopt, opts);
  const auto far = exp_moment_estimate(0.5, 0.1, 1.0, Vec2{}, Vec2{40.0, 0.0}, opts);
  EXPECT_LE(far.value, free.value + 3.0 * std::hypot(free.std_error, far.std_error));
}

TEST(OccupationMoment, OrderRange) {
  McOptions opts;
  opts.replicas = 10;
  EXPECT_THROW(static_cast<void>(occupation_moment_estimate(4, 0.1, 1.0, Vec2{}, opts)),
               ConfigError);
  EXPECT_THROW(static_cast<void>(occupation_moment_estimate(0, 0.1, 1.0, Vec2{}, opts)),
               ConfigError);
}

TEST(OccupationMoment, FirstMomentMatchesOracle) {
  McOptions opts;
  opts.replicas = 4000;
  opts.base_seed = 17;
  const double eps = 0.1, t = 1.0;
  const auto r = occupation_moment_estimate(1, eps, t, Vec2{}, opts);
  EXPECT_NEAR(r.value, mean_occupation(t / (eps * eps), 1.0), 3.0 * r.std_error);
}

TEST(OccupationMoment, FirstMomentOffDiagonalBounded) {
  McOptions opts;
  opts.replicas = 2000;
  opts.base_seed = 18;
  std::vector<double> vals;
  for (double eps : {0.1, 0.03, 0.01}) {
    vals.push_back(occupation_moment_estimate(1, eps, 1.0, Vec2{0.5, 0.0}, opts).value /
                   -std::log(eps));
  }
  EXPECT_LT(*std::max_element(vals.begin(), vals.end()) /
                *std::min_element(vals.begin(), vals.end()),
            3.0);
}
