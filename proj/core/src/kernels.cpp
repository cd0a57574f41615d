#include "kpzlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include "kpzlab/errors.hpp"

namespace kpzlab {
namespace {

constexpr double kPi = std::numbers::pi;

// exp(-1 / (1 - rho^2)) on the unit disc, zero outside.
double unit_bump_profile(double rho) {
  if (rho >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - rho * rho));
}

// int_{|x|<1} unit_bump_profile(|x|) dx
double unit_bump_mass() {
  static const double mass = [] {
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 61>::integrate(
        [](double r) { return 2.0 * kPi * r * unit_bump_profile(r); }, 0.0, 1.0, 15, 1e-15);
  }();
  return mass;
}

// Scale-free Fourier transform of the unit-mass bump of radius one,
// ghat(q) = 2 pi int_0^1 g(rho) J0(q rho) rho d rho, tabulated on [0, kBumpQMax].
constexpr double kBumpQMax = 400.0;
constexpr double kBumpDq = 0.05;

struct BumpFourier {
  std::vector<double> values;
  boost::math::interpolators::cardinal_cubic_b_spline<double> spline;
};

const BumpFourier& bump_fourier() {
  static const BumpFourier table = [] {
    const double norm = 1.0 / unit_bump_mass();
    const int count = static_cast<int>(std::lround(kBumpQMax / kBumpDq)) + 1;
    std::vector<double> v(static_cast<std::size_t>(count));
    constexpr int kPanels = 40;
    for (int i = 0; i < count; ++i) {
      const double q = i * kBumpDq;
      double acc = 0.0;
      for (int p = 0; p < kPanels; ++p) {
        const double a = static_cast<double>(p) / kPanels;
        const double b = static_cast<double>(p + 1) / kPanels;
        acc += boost::math::quadrature::gauss<double, 20>::integrate(
            [&](double r) {
              return r * unit_bump_profile(r) * boost::math::cyl_bessel_j(0, q * r);
            },
            a, b);
      }
      v[static_cast<std::size_t>(i)] = 2.0 * kPi * norm * acc;
    }
    boost::math::interpolators::cardinal_cubic_b_spline<double> s(v.begin(), v.end(), 0.0,
                                                                  kBumpDq, 0.0, 0.0);
    return BumpFourier{std::move(v), std::move(s)};
  }();
  return table;
}

}  // namespace

// ---------------------------------------------------------------------------
// Mollifier

Mollifier Mollifier::smooth_bump() {
  // phi(x) = c exp(-1/(1-(2|x|)^2)); substituting rho = 2|x| gives mass c * m / 4.
  return Mollifier(Kind::SmoothBump, 4.0 / unit_bump_mass(), 0.0);
}

Mollifier Mollifier::grid_box(double width) {
  if (!(width > 0.0) || width > std::numbers::sqrt2 / 2.0 + 1e-15) {
    throw ConfigError("grid-box mollifier width must lie in (0, 1/sqrt(2)]");
  }
  return Mollifier(Kind::GridBox, 1.0 / (width * width), width);
}

double Mollifier::radial(double r) const { return normalization_ * unit_bump_profile(2.0 * r); }

double Mollifier::operator()(Vec2 x) const {
  if (kind_ == Kind::SmoothBump) return radial(x.norm());
  const double h = 0.5 * box_width_;
  const bool inside = x.x >= -h && x.x < h && x.y >= -h && x.y < h;
  return inside ? normalization_ : 0.0;
}

// ---------------------------------------------------------------------------
// CovarianceKernel

CovarianceKernel::CovarianceKernel(const Mollifier& m, int table_size) : mollifier_(m) {
  if (m.kind() == Mollifier::Kind::GridBox) {
    r0_ = m.normalization();  // int phi^2 = 1 / w^2
    return;
  }
  if (table_size < 8) throw ConfigError("covariance table needs at least 8 points");

  // R(r) = int phi(y) phi(y + r e1) dy in polar coordinates about the origin:
  // Gauss-Legendre in |y| and the midpoint rule in the angle, which is spectrally
  // accurate for the smooth periodic integrand.
  constexpr int kAngles = 160;
  using Gauss = boost::math::quadrature::gauss<double, 80>;
  const auto& nodes = Gauss::abscissa();
  const auto& weights = Gauss::weights();
  std::vector<double> rho, wrho;
  // Gauss<> stores nonnegative abscissae of a symmetric rule on [-1, 1].
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double w = (i == 0 && nodes[0] == 0.0) ? weights[0] : weights[i];
    for (const double sgn : {1.0, -1.0}) {
      if (nodes[i] == 0.0 && sgn < 0.0) continue;
      const double r = 0.25 * (1.0 + sgn * nodes[i]);
      rho.push_back(r);
      wrho.push_back(0.25 * w * r * m.radial(r));
    }
  }
  std::vector<double> cos_theta(kAngles);
  for (int j = 0; j < kAngles; ++j) cos_theta[j] = std::cos((j + 0.5) * kPi / kAngles);

  spacing_ = 1.0 / table_size;
  table_.assign(static_cast<std::size_t>(table_size) + 1, 0.0);
  for (int k = 0; k < table_size; ++k) {
    const double r = k * spacing_;
    double acc = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
      if (wrho[i] == 0.0) continue;
      double inner = 0.0;
      for (int j = 0; j < kAngles; ++j) {
        const double d2 = rho[i] * rho[i] + r * r + 2.0 * rho[i] * r * cos_theta[j];
        if (d2 < 0.25) inner += m.radial(std::sqrt(d2));
      }
      acc += wrho[i] * inner * (2.0 * kPi / kAngles);
    }
    table_[static_cast<std::size_t>(k)] = acc;
  }
  r0_ = table_.front();
}

double CovarianceKernel::radial(double r) const {
  if (mollifier_.kind() == Mollifier::Kind::GridBox) return (*this)(Vec2{r, 0.0});
  if (r >= 1.0) return 0.0;
  // Catmull-Rom cubic on the uniform table, reflected at r = 0 (R is even).
  const double u = r / spacing_;
  const auto k = static_cast<std::ptrdiff_t>(u);
  const double f = u - static_cast<double>(k);
  const auto n = static_cast<std::ptrdiff_t>(table_.size()) - 1;
  auto at = [&](std::ptrdiff_t i) {
    if (i < 0) i = -i;
    if (i > n) return 0.0;
    return table_[static_cast<std::size_t>(i)];
  };
  const double p0 = at(k - 1), p1 = at(k), p2 = at(k + 1), p3 = at(k + 2);
  const double v = p1 + 0.5 * f *
                            (p2 - p0 +
                             f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                                  f * (3.0 * (p1 - p2) + p3 - p0)));
  return std::clamp(v, 0.0, r0_);
}

double CovarianceKernel::operator()(Vec2 x) const {
  if (mollifier_.kind() == Mollifier::Kind::GridBox) {
    const double w = mollifier_.box_width();
    const double ox = std::max(0.0, w - std::abs(x.x));
    const double oy = std::max(0.0, w - std::abs(x.y));
    return ox * oy * mollifier_.normalization() * mollifier_.normalization();
  }
  const double r2 = x.norm2();
  if (r2 >= 1.0) return 0.0;
  return radial(std::sqrt(r2));
}

void CovarianceKernel::write_csv(std::ostream& os) const {
  os << "radius,value\n";
  os.precision(17);
  for (std::size_t k = 0; k < table_.size(); ++k) {
    os << static_cast<double>(k) * spacing_ << ',' << table_[k] << '\n';
  }
}

const CovarianceKernel& default_covariance() {
  static const CovarianceKernel kernel(Mollifier::smooth_bump());
  return kernel;
}

// ---------------------------------------------------------------------------
// TestFunction

TestFunction::TestFunction(Kind kind, double scale, Vec2 center)
    : kind_(kind), scale_(scale), center_(center) {
  if (!(scale > 0.0)) throw ConfigError("test function scale must be positive");
  if (kind == Kind::Gaussian) {
    normalization_ = 1.0 / (2.0 * kPi * scale * scale);
  } else {
    normalization_ = 1.0 / (scale * scale * unit_bump_mass());
  }
}

TestFunction TestFunction::gaussian(double scale, Vec2 center) {
  return TestFunction(Kind::Gaussian, scale, center);
}

TestFunction TestFunction::bump(double scale, Vec2 center) {
  return TestFunction(Kind::Bump, scale, center);
}

TestFunction TestFunction::recentered(Vec2 c) const {
  TestFunction g = *this;
  g.center_ = c;
  return g;
}

double TestFunction::radial(double r) const {
  if (kind_ == Kind::Gaussian) {
    return normalization_ * std::exp(-0.5 * r * r / (scale_ * scale_));
  }
  return normalization_ * unit_bump_profile(r / scale_);
}

double TestFunction::operator()(Vec2 x) const { return radial((x - center_).norm()); }

double TestFunction::fourier_sq(double k) const {
  const double q = k * scale_;
  if (kind_ == Kind::Gaussian) return std::exp(-q * q);
  if (q >= kBumpQMax) return 0.0;
  const double v = bump_fourier().spline(q);
  return v * v;
}

// ---------------------------------------------------------------------------
// Free functions

double heat_kernel(double t, Vec2 x) {
  if (!(t > 0.0)) throw DomainError("heat kernel requires t > 0");
  return std::exp(-0.5 * x.norm2() / t) / (2.0 * kPi * t);
}

double effective_variance(double beta) {
  const double b2 = beta * beta;
  // Compare beta itself as well: sqrt(2 pi)^2 rounds to just below 2 pi.
  if (!std::isfinite(b2) || b2 >= 2.0 * kPi || std::abs(beta) >= std::sqrt(2.0 * kPi)) {
    throw DomainError("supercritical coupling: beta^2 must be below 2 pi");
  }
  return 2.0 * kPi / (2.0 * kPi - b2);
}

double coupling_at_scale(double beta, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("mollification scale must lie in (0, 1)");
  return beta / std::sqrt(-std::log(eps));
}

namespace {

// (1/2pi) int_0^inf |ghat(k)|^2 w(k) k dk over the numerically relevant range.
template <class Weight>
double radial_spectral_integral(const TestFunction& g, Weight&& weight) {
  using boost::math::quadrature::gauss_kronrod;
  auto f = [&](double k) { return g.fourier_sq(k) * weight(k); };
  if (g.kind() == TestFunction::Kind::Gaussian) {
    // |ghat|^2 = exp(-(k s)^2) is negligible beyond k s = 40.
    const double kmax = 40.0 / g.scale();
    return gauss_kronrod<double, 61>::integrate(f, 0.0, kmax, 30, 1e-13) / (2.0 * kPi);
  }
  // Split at the first few zeros of the oscillating bump transform.
  double acc = 0.0;
  const double kmax = kBumpQMax / g.scale();
  const double panel = 8.0 / g.scale();
  for (double a = 0.0; a < kmax; a += panel) {
    acc += gauss_kronrod<double, 61>::integrate(f, a, std::min(a + panel, kmax), 15, 1e-13);
  }
  return acc / (2.0 * kPi);
}

}  // namespace

double pair_heat_overlap(const TestFunction& g, double s) {
  if (s < 0.0) throw DomainError("pair_heat_overlap requires s >= 0");
  return radial_spectral_integral(g, [s](double k) { return k * std::exp(-k * k * s); });
}

double sigma_t_squared(const TestFunction& g, double t, double beta) {
  const double nu2 = effective_variance(beta);
  if (t < 0.0) throw DomainError("sigma_t_squared requires t >= 0");
  if (t == 0.0) return 0.0;
  // int_0^t e^{-k^2 s} ds = -expm1(-k^2 t) / k^2, so the time integral is done in closed form.
  const double spatial = radial_spectral_integral(g, [t](double k) {
    if (k == 0.0) return 0.0;
    return -std::expm1(-k * k * t) / k;
  });
  return nu2 * spatial;
}

}  // namespace kpzlab
