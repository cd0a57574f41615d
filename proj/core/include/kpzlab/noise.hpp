#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "kpzlab/grid.hpp"
#include "kpzlab/kernels.hpp"
#include "kpzlab/rng.hpp"

namespace kpzlab {

/// Space-time white noise integrated over one time slice and one grid cell.
struct NoiseIncrementSlice {
  TorusGrid grid;
  double dt = 0.0;
  Field raw;  ///< iid N(0, dt * dx^2) per cell
};

NoiseIncrementSlice sample_increment_slice(const TorusGrid& grid, double dt, Rng& rng);
NoiseIncrementSlice sample_increment_slice(const TorusGrid& grid, double dt,
                                           const SeedStream& stream);

struct MollifiedSlice {
  TorusGrid grid;
  double eps = 0.0;
  double dt = 0.0;
  Field values;
  double variance = 0.0;  ///< exact per-cell Var(values[i])
};

/// Circular convolution with the discretized phi_eps. The stencil weights
/// phi_eps(x_j) dx^2 are rescaled to sum to one so the discrete kernel keeps
/// unit mass at every resolution; all variances below refer to this stencil.
class MollificationOperator {
 public:
  /// The smooth bump requires dx <= eps/4; the grid box requires its scaled
  /// width eps * w to cover at least one cell. Throws ConfigError otherwise.
  MollificationOperator(const TorusGrid& grid, const Mollifier& m, double eps);

  [[nodiscard]] const TorusGrid& grid() const { return grid_; }
  [[nodiscard]] double eps() const { return eps_; }
  [[nodiscard]] const Mollifier& mollifier() const { return mollifier_; }
  /// Normalized weights indexed like a field, by offset from cell 0.
  [[nodiscard]] const Field& stencil() const { return stencil_; }
  /// Sum of the unnormalized weights phi_eps(x_j) dx^2.
  [[nodiscard]] double raw_mass() const { return raw_mass_; }

  /// Var(values[i]) / dt = sum_j w_j^2 / dx^2, summed directly.
  [[nodiscard]] double variance_rate() const { return variance_rate_; }
  /// Cov(values[i], values[i + (dx, dy)]) / dt for a lag in cells.
  [[nodiscard]] double covariance_rate_cells(int dx, int dy) const;
  /// Periodic bilinear interpolation of covariance_rate_cells at a physical lag.
  [[nodiscard]] double covariance_rate(Vec2 lag) const;
  [[nodiscard]] const Field& covariance_table() const { return covariance_; }

  void apply(std::span<const double> raw, std::span<double> out) const;
  [[nodiscard]] MollifiedSlice operator()(const NoiseIncrementSlice& slice) const;

 private:
  TorusGrid grid_;
  Mollifier mollifier_;
  double eps_;
  Field stencil_;
  Spectrum multiplier_;
  Field covariance_;
  double raw_mass_ = 0.0;
  double variance_rate_ = 0.0;
};

MollifiedSlice mollify_slice(const NoiseIncrementSlice& slice, const Mollifier& m, double eps);

struct CovarianceRow {
  double lag = 0.0;          ///< requested lag
  int lag_cells = 0;         ///< lag snapped to the grid
  double theoretical = 0.0;  ///< dt * eps^-2 * R(snapped lag / eps)
  double discrete = 0.0;     ///< dt * discrete stencil covariance
  double empirical = 0.0;
  double std_error = 0.0;
  bool flagged = false;           ///< |emp - theoretical| > 5% |theoretical| + 4 SE
  bool flagged_discrete = false;  ///< |emp - discrete| > 4 SE
};

struct CovarianceSelfTest {
  std::vector<CovarianceRow> spatial;  ///< lags {0, eps/4, eps/2, eps, 2 eps}
  CovarianceRow temporal;              ///< same cell, consecutive slices
  [[nodiscard]] bool any_flagged() const;
};

/// Empirical lag covariances of mollified slices, each replica averaging the
/// lag products over all cells and both axes.
CovarianceSelfTest covariance_selftest(const TorusGrid& grid, const Mollifier& m, double eps,
                                       double dt, std::size_t replicas, std::uint64_t base_seed,
                                       int threads = 0);

struct GridHeader {
  int n = 0;
  double side = 0.0;
  double dt = 0.0;
  double eps = 0.0;
  std::uint64_t seed = 0;
};

/// One comment header line, then n rows of n comma-separated values (row = y).
void write_grid_csv(std::ostream& os, const GridHeader& h, std::span<const double> values);
/// "KPZG", u32 version, u32 n, f64 L, f64 dt, f64 eps, u64 seed, n*n f64 (host order).
void write_grid_binary(std::ostream& os, const GridHeader& h, std::span<const double> values);
std::vector<double> read_grid_binary(std::istream& is, GridHeader& h);
std::vector<double> read_grid_csv(std::istream& is, GridHeader& h);

}  // namespace kpzlab
