#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "kpzlab/vec2.hpp"

namespace kpzlab {

/// Periodic n x n grid on the torus [0, L)^2. Cell (ix, iy) sits at
/// (ix * dx, iy * dx); fields are stored row-major with x fastest.
class TorusGrid {
 public:
  TorusGrid() = default;
  /// Throws ConfigError unless L > 0 and n is a power of two >= 4.
  TorusGrid(double side, int n);

  [[nodiscard]] double side() const { return side_; }
  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] double spacing() const { return side_ / n_; }
  [[nodiscard]] double cell_area() const { return spacing() * spacing(); }
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }
  /// Number of complex modes of a real-to-complex transform.
  [[nodiscard]] std::size_t spectral_size() const {
    return static_cast<std::size_t>(n_) * (n_ / 2 + 1);
  }

  [[nodiscard]] std::size_t index(int ix, int iy) const;
  [[nodiscard]] Vec2 position(int ix, int iy) const { return {ix * spacing(), iy * spacing()}; }
  /// Shortest periodic representative of a displacement.
  [[nodiscard]] Vec2 wrap(Vec2 d) const;
  /// Minimal-image offset of cell index i from cell 0, in [-n/2, n/2).
  [[nodiscard]] int signed_offset(int i) const { return i < n_ / 2 ? i : i - n_; }
  [[nodiscard]] int wrap_index(int i) const { return ((i % n_) + n_) % n_; }
  /// Squared wavenumber of spectral mode (kx, ky), kx in [0, n/2].
  [[nodiscard]] double wavenumber2(int kx, int ky) const;

  friend bool operator==(const TorusGrid&, const TorusGrid&) = default;

 private:
  double side_ = 1.0;
  int n_ = 4;
};

using Field = std::vector<double>;
using Spectrum = std::vector<std::complex<double>>;

/// Real-to-complex FFT pair for one grid size. Plans are built with
/// FFTW_ESTIMATE, so transforms are deterministic, and plan creation is
/// serialized. One instance must not be shared between threads.
class SpectralWorkspace {
 public:
  explicit SpectralWorkspace(int n);
  ~SpectralWorkspace();
  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

  [[nodiscard]] int n() const { return n_; }

  /// Unnormalized forward transform of `in` (n*n values) into `out`.
  void forward(std::span<const double> in, Spectrum& out);
  /// Inverse transform scaled by 1/n^2, so inverse(forward(f)) == f.
  void inverse(const Spectrum& in, std::span<double> out);

  /// f <- F^{-1}(m * F f) for a real multiplier over the spectral modes.
  void apply(std::span<double> f, std::span<const double> multiplier);
  /// f <- F^{-1}(m * F f) for a complex multiplier.
  void apply(std::span<double> f, std::span<const std::complex<double>> multiplier);

 private:
  struct Impl;
  int n_;
  std::unique_ptr<Impl> impl_;
};

/// Per-thread workspace for grids of size n.
SpectralWorkspace& thread_workspace(int n);

/// Spectral multiplier exp(-|k|^2 * rate) of the semigroup e^{rate * Laplacian}.
std::vector<double> heat_multiplier(const TorusGrid& grid, double rate);

/// Value of a periodic field at an arbitrary point by bilinear interpolation.
double interpolate_periodic(const TorusGrid& grid, std::span<const double> f, Vec2 x);

}  // namespace kpzlab
