#include "kpzlab/grid.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "kpzlab/errors.hpp"

namespace kpzlab {
namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

TorusGrid::TorusGrid(double side, int n) : side_(side), n_(n) {
  if (!(side > 0.0) || !std::isfinite(side)) throw ConfigError("torus side must be positive");
  if (n < 4 || (n & (n - 1)) != 0) throw ConfigError("grid size must be a power of two >= 4");
}

std::size_t TorusGrid::index(int ix, int iy) const {
  return static_cast<std::size_t>(wrap_index(iy)) * n_ + wrap_index(ix);
}

Vec2 TorusGrid::wrap(Vec2 d) const {
  d.x -= side_ * std::round(d.x / side_);
  d.y -= side_ * std::round(d.y / side_);
  return d;
}

double TorusGrid::wavenumber2(int kx, int ky) const {
  const double k0 = 2.0 * std::numbers::pi / side_;
  const double a = k0 * kx;
  const double b = k0 * signed_offset(ky);
  return a * a + b * b;
}

struct SpectralWorkspace::Impl {
  double* real = nullptr;
  fftw_complex* cplx = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  std::size_t real_size = 0;
  std::size_t cplx_size = 0;
};

SpectralWorkspace::SpectralWorkspace(int n) : n_(n), impl_(std::make_unique<Impl>()) {
  if (n < 2) throw ConfigError("workspace size must be >= 2");
  impl_->real_size = static_cast<std::size_t>(n) * n;
  impl_->cplx_size = static_cast<std::size_t>(n) * (n / 2 + 1);
  impl_->real = fftw_alloc_real(impl_->real_size);
  impl_->cplx = fftw_alloc_complex(impl_->cplx_size);
  if (!impl_->real || !impl_->cplx) throw NumericalFailure("fftw allocation failed");
  std::lock_guard lock(plan_mutex());
  impl_->fwd = fftw_plan_dft_r2c_2d(n, n, impl_->real, impl_->cplx, FFTW_ESTIMATE);
  impl_->bwd = fftw_plan_dft_c2r_2d(n, n, impl_->cplx, impl_->real, FFTW_ESTIMATE);
  if (!impl_->fwd || !impl_->bwd) throw NumericalFailure("fftw plan creation failed");
}

SpectralWorkspace::~SpectralWorkspace() {
  std::lock_guard lock(plan_mutex());
  if (impl_->fwd) fftw_destroy_plan(impl_->fwd);
  if (impl_->bwd) fftw_destroy_plan(impl_->bwd);
  fftw_free(impl_->real);
  fftw_free(impl_->cplx);
}

void SpectralWorkspace::forward(std::span<const double> in, Spectrum& out) {
  if (in.size() != impl_->real_size) throw ConfigError("field size does not match workspace");
  std::memcpy(impl_->real, in.data(), impl_->real_size * sizeof(double));
  fftw_execute(impl_->fwd);
  out.resize(impl_->cplx_size);
  for (std::size_t k = 0; k < impl_->cplx_size; ++k) {
    out[k] = {impl_->cplx[k][0], impl_->cplx[k][1]};
  }
}

void SpectralWorkspace::inverse(const Spectrum& in, std::span<double> out) {
  if (in.size() != impl_->cplx_size || out.size() != impl_->real_size) {
    throw ConfigError("spectrum size does not match workspace");
  }
  for (std::size_t k = 0; k < impl_->cplx_size; ++k) {
    impl_->cplx[k][0] = in[k].real();
    impl_->cplx[k][1] = in[k].imag();
  }
  fftw_execute(impl_->bwd);
  const double scale = 1.0 / static_cast<double>(impl_->real_size);
  for (std::size_t i = 0; i < impl_->real_size; ++i) out[i] = impl_->real[i] * scale;
}

void SpectralWorkspace::apply(std::span<double> f, std::span<const double> multiplier) {
  if (f.size() != impl_->real_size || multiplier.size() != impl_->cplx_size) {
    throw ConfigError("field or multiplier size does not match workspace");
  }
  std::memcpy(impl_->real, f.data(), impl_->real_size * sizeof(double));
  fftw_execute(impl_->fwd);
  const double scale = 1.0 / static_cast<double>(impl_->real_size);
  for (std::size_t k = 0; k < impl_->cplx_size; ++k) {
    const double m = multiplier[k] * scale;
    impl_->cplx[k][0] *= m;
    impl_->cplx[k][1] *= m;
  }
  fftw_execute(impl_->bwd);
  std::memcpy(f.data(), impl_->real, impl_->real_size * sizeof(double));
}

void SpectralWorkspace::apply(std::span<double> f,
                              std::span<const std::complex<double>> multiplier) {
  if (f.size() != impl_->real_size || multiplier.size() != impl_->cplx_size) {
    throw ConfigError("field or multiplier size does not match workspace");
  }
  std::memcpy(impl_->real, f.data(), impl_->real_size * sizeof(double));
  fftw_execute(impl_->fwd);
  const double scale = 1.0 / static_cast<double>(impl_->real_size);
  for (std::size_t k = 0; k < impl_->cplx_size; ++k) {
    const std::complex<double> z{impl_->cplx[k][0], impl_->cplx[k][1]};
    const std::complex<double> w = z * multiplier[k] * scale;
    impl_->cplx[k][0] = w.real();
    impl_->cplx[k][1] = w.imag();
  }
  fftw_execute(impl_->bwd);
  std::memcpy(f.data(), impl_->real, impl_->real_size * sizeof(double));
}

SpectralWorkspace& thread_workspace(int n) {
  thread_local std::map<int, std::unique_ptr<SpectralWorkspace>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<SpectralWorkspace>(n);
  return *slot;
}

std::vector<double> heat_multiplier(const TorusGrid& grid, double rate) {
  const int n = grid.n();
  const int half = n / 2 + 1;
  std::vector<double> m(grid.spectral_size());
  for (int ky = 0; ky < n; ++ky) {
    for (int kx = 0; kx < half; ++kx) {
      m[static_cast<std::size_t>(ky) * half + kx] = std::exp(-grid.wavenumber2(kx, ky) * rate);
    }
  }
  return m;
}

double interpolate_periodic(const TorusGrid& grid, std::span<const double> f, Vec2 x) {
  if (f.size() != grid.size()) throw ConfigError("field size does not match grid");
  const double h = grid.spacing();
  const double gx = x.x / h, gy = x.y / h;
  const double fx = std::floor(gx), fy = std::floor(gy);
  const double ax = gx - fx, ay = gy - fy;
  const int ix = static_cast<int>(fx), iy = static_cast<int>(fy);
  const double f00 = f[grid.index(ix, iy)];
  const double f10 = f[grid.index(ix + 1, iy)];
  const double f01 = f[grid.index(ix, iy + 1)];
  const double f11 = f[grid.index(ix + 1, iy + 1)];
  return (1 - ax) * (1 - ay) * f00 + ax * (1 - ay) * f10 + (1 - ax) * ay * f01 + ax * ay * f11;
}

}  // namespace kpzlab
