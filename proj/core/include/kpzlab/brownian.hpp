#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "kpzlab/kernels.hpp"
#include "kpzlab/rng.hpp"
#include "kpzlab/stats.hpp"
#include "kpzlab/vec2.hpp"

namespace kpzlab {

struct PathConfig {
  double horizon = 1.0;
  double step = 0.01;

  /// Throws ConfigError unless horizon > 0, step > 0 and step divides horizon.
  void validate() const;
  [[nodiscard]] std::size_t steps() const;
};

/// Time-gridded planar path started at the origin.
struct BrownianPath {
  std::vector<double> times;
  std::vector<Vec2> positions;

  [[nodiscard]] double horizon() const { return times.empty() ? 0.0 : times.back(); }
  /// Piecewise linear position at time s in [0, horizon].
  [[nodiscard]] Vec2 at(double s) const;
  /// A path that stays at the origin on the uniform grid of `cfg`.
  static BrownianPath frozen(const PathConfig& cfg);
};

/// int_[begin,end] R(offset + path_s) ds.
struct OccupationQuery {
  Vec2 offset;
  double begin = 0.0;
  double end = 0.0;
  std::reference_wrapper<const CovarianceKernel> kernel = default_covariance();
};

BrownianPath sample_path(const PathConfig& cfg, const SeedStream& stream);
/// Law of B^1 - B^2: one path with per-step variance 2 * step per coordinate.
BrownianPath sample_relative_path(const PathConfig& cfg, const SeedStream& stream);
/// Brownian bridge from the origin to `endpoint` over [0, horizon].
BrownianPath sample_bridge(const PathConfig& cfg, Vec2 endpoint, const SeedStream& stream);

/// Trapezoidal occupation integral along a stored path. Interval endpoints that
/// fall between grid times use the linearly interpolated position.
double occupation_functional(const BrownianPath& path, const OccupationQuery& q);

/// Step control for occupation integrals over horizons far beyond what a
/// uniform grid can reach. Within `safety` fine-step deviations of the support
/// of R the walker uses `fine_step`; further out the step grows so that its
/// standard deviation stays below gap / safety, where gap is the distance to
/// the support. The integrand vanishes on the coarse steps, so the stepping
/// only changes how finely the zero region is resolved.
struct AdaptiveStepping {
  double fine_step = 0.01;
  double safety = 6.0;
  double max_step = std::numeric_limits<double>::infinity();
};

/// int_0^horizon R(offset + Y_s) ds for one sample of Y, a planar Brownian
/// motion with per-coordinate variance `diffusivity * s`. With `bridge_end` set
/// the path is pinned at Y_horizon = bridge_end. Exactly two normals are drawn
/// per step, so runs with equal seeds and different horizons share their
/// common prefix.
double adaptive_occupation(double horizon, Vec2 offset, double diffusivity,
                           const CovarianceKernel& kernel, Rng& rng,
                           const AdaptiveStepping& stepping = {},
                           std::optional<Vec2> bridge_end = std::nullopt);

/// Replica count, seeding and threading for the path estimators.
struct McOptions {
  std::size_t replicas = 1000;
  std::uint64_t base_seed = 1;
  int threads = 0;  ///< 0 selects default_thread_count()
  AdaptiveStepping stepping{};
};

/// |log eps|^{-1} int_0^{ell/eps^2} R(w + B^1_s - B^2_s) ds for one relative path.
double kr_sample(double eps, double ell, Vec2 w, const SeedStream& stream,
                 const AdaptiveStepping& stepping = {});

/// kr_sample for replicas 0..n-1 of opts.base_seed, in replica order.
std::vector<double> kr_samples(double eps, double ell, Vec2 w, const McOptions& opts);

/// Monte Carlo estimate of F(ell/eps^2, w) = E exp(beta^2 |log eps|^{-1} int R(w + B^1 - B^2)).
EstimateReport f_estimate(double beta, double eps, double ell, Vec2 w, const McOptions& opts);

/// E_B exp(beta_eps^2 int_0^{t/eps^2} R(x + B_s) ds) over free paths, or over
/// bridges with B_{t/eps^2} = bridge_endpoint.
EstimateReport exp_moment_estimate(double beta, double eps, double t, Vec2 x,
                                   std::optional<Vec2> bridge_endpoint, const McOptions& opts);

/// E_B (int_0^{t/eps^2} R(x/eps + B_s) ds)^n for n in {1, 2, 3}.
EstimateReport occupation_moment_estimate(int n, double eps, double t, Vec2 x,
                                          const McOptions& opts);

}  // namespace kpzlab
