#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <boost/math/quadrature/gauss.hpp>

#include "kpzlab/errors.hpp"
#include "kpzlab/limit.hpp"

namespace kpzlab {
namespace {

constexpr double kPi = std::numbers::pi;

struct RadialMesh {
  std::vector<double> faces;    // faces[0] = 0
  std::vector<double> centers;  // midpoints
  std::vector<double> areas;    // pi (r_out^2 - r_in^2)
  std::vector<double> source;   // cell average of R
};

RadialMesh build_mesh(double r_max, const RadialFOptions& o) {
  if (!(o.inner_spacing > 0.0) || !(o.inner_radius > 0.0) || !(o.growth > 1.0)) {
    throw ConfigError("radial mesh needs positive spacing and growth > 1");
  }
  RadialMesh m;
  m.faces.push_back(0.0);
  double h = o.inner_spacing;
  while (m.faces.back() < r_max) {
    const double r = m.faces.back();
    if (r >= o.inner_radius) h *= o.growth;
    m.faces.push_back(r + h);
  }
  const auto& R = default_covariance();
  using Gauss = boost::math::quadrature::gauss<double, 8>;
  for (std::size_t i = 0; i + 1 < m.faces.size(); ++i) {
    const double a = m.faces[i], b = m.faces[i + 1];
    m.centers.push_back(0.5 * (a + b));
    const double area = kPi * (b * b - a * a);
    m.areas.push_back(area);
    double avg = 0.0;
    if (a < R.support_radius()) {
      const double hi = std::min(b, R.support_radius());
      avg = Gauss::integrate([&](double r) { return 2.0 * kPi * r * R.radial(r); }, a, hi) / area;
    }
    m.source.push_back(avg);
  }
  return m;
}

// Solves (diag + lower/upper) x = rhs in place for a symmetric tridiagonal system.
void solve_tridiagonal(const std::vector<double>& diag, const std::vector<double>& off,
                       std::vector<double>& rhs, std::vector<double>& work) {
  const std::size_t n = diag.size();
  work.resize(n);
  double b = diag[0];
  rhs[0] /= b;
  for (std::size_t i = 1; i < n; ++i) {
    work[i] = off[i - 1] / b;
    b = diag[i] - off[i - 1] * work[i];
    rhs[i] = (rhs[i] - off[i - 1] * rhs[i - 1]) / b;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= work[i + 1] * rhs[i + 1];
}

}  // namespace

RadialFSolution solve_F_radial(double beta, double eps, double t_micro,
                               const RadialFOptions& o) {
  effective_variance(beta);
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  if (t_micro < 0.0) throw ConfigError("T_micro must be nonnegative");
  if (!(o.dt0 > 0.0) || !(o.change_tol > 0.0) || !(o.dt_growth > 1.0)) {
    throw ConfigError("radial time stepping needs positive dt0, change_tol and growth");
  }
  const double kappa = beta * beta / (-std::log(eps));
  const RadialMesh mesh = build_mesh(diffusive_reach(t_micro), o);
  const std::size_t n = mesh.centers.size();
  const auto stored = static_cast<std::size_t>(
      std::upper_bound(mesh.centers.begin(), mesh.centers.end(), o.store_radius) -
      mesh.centers.begin());

  RadialFSolution sol;
  sol.beta = beta;
  sol.eps = eps;
  sol.kappa = kappa;
  sol.radii = mesh.centers;
  std::vector<double> f(n, 1.0);
  sol.times.push_back(0.0);
  sol.values.emplace_back(f.begin(), f.begin() + static_cast<long>(stored));
  if (t_micro == 0.0 || kappa == 0.0) {
    if (t_micro > 0.0) {
      sol.times.push_back(t_micro);
      sol.values.push_back(sol.values.front());
    }
    sol.final_profile = f;
    return sol;
  }

  // Semi-discrete system A dF/dt = K F with K symmetric tridiagonal.
  std::vector<double> kdiag(n), koff(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double c = 2.0 * kPi * mesh.faces[i + 1] / (mesh.centers[i + 1] - mesh.centers[i]);
    koff[i] = c;
    kdiag[i] -= c;
    kdiag[i + 1] -= c;
  }
  for (std::size_t i = 0; i < n; ++i) kdiag[i] += kappa * mesh.areas[i] * mesh.source[i];

  const double gamma = 2.0 - std::sqrt(2.0);
  const double w2 = (1.0 - gamma) / (2.0 - gamma);
  const double c1 = 1.0 / (gamma * (2.0 - gamma));
  const double c0 = (1.0 - gamma) * (1.0 - gamma) / (gamma * (2.0 - gamma));
  std::vector<double> diag(n), off(n - 1), rhs(n), stage(n), next(n), work;

  auto apply_k = [&](const std::vector<double>& x, double scale, std::vector<double>& out) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = kdiag[i] * x[i];
      if (i > 0) v += koff[i - 1] * x[i - 1];
      if (i + 1 < n) v += koff[i] * x[i + 1];
      out[i] = mesh.areas[i] * x[i] + scale * v;
    }
  };
  auto implicit = [&](double scale, std::vector<double>& b) {
    for (std::size_t i = 0; i < n; ++i) diag[i] = mesh.areas[i] - scale * kdiag[i];
    for (std::size_t i = 0; i + 1 < n; ++i) off[i] = -scale * koff[i];
    solve_tridiagonal(diag, off, b, work);
  };

  double t = 0.0;
  double dt = std::min(o.dt0, t_micro);
  double last_store_t = 0.0;
  double last_store_f = f[0];
  while (t < t_micro) {
    const bool last = t + dt >= t_micro * (1.0 - 1e-14);
    const double h = last ? t_micro - t : dt;
    apply_k(f, 0.5 * gamma * h, stage);
    implicit(0.5 * gamma * h, stage);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = mesh.areas[i] * (c1 * stage[i] - c0 * f[i]);
    implicit(w2 * h, rhs);
    next.swap(rhs);

    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(next[i] - f[i]) / f[i]);
    if (change > 2.0 * o.change_tol && h > o.dt0 && !last) {
      dt = std::max(o.dt0, dt / o.dt_growth);  // reject and retry with a smaller step
      continue;
    }
    f.swap(next);
    t = last ? t_micro : t + h;
    ++sol.steps;
    if (change < o.change_tol) dt *= o.dt_growth;

    if (last || t >= 1.01 * last_store_t || std::abs(f[0] - last_store_f) > 1e-4) {
      sol.times.push_back(t);
      sol.values.emplace_back(f.begin(), f.begin() + static_cast<long>(stored));
      last_store_t = t;
      last_store_f = f[0];
    }
  }
  sol.final_profile = f;
  return sol;
}

double RadialFSolution::value_at(double t, double r) const {
  if (t < 0.0 || t > final_time() * (1.0 + 1e-12)) throw QueryError("time outside the solution");
  if (r < 0.0) throw QueryError("radius must be nonnegative");
  auto profile_value = [&](const std::vector<double>& p) {
    if (r > radii[p.size() - 1]) {
      if (p.size() < radii.size() && r > radii[p.size() - 1]) {
        throw QueryError("radius beyond the stored profile");
      }
      return p.back();
    }
    if (r <= radii[0]) {
      // F = a + b r^2 through the two innermost cells respects F'(0) = 0.
      const double r0 = radii[0], r1 = radii[1];
      const double b = (p[1] - p[0]) / (r1 * r1 - r0 * r0);
      return p[0] + b * (r * r - r0 * r0);
    }
    const auto it = std::upper_bound(radii.begin(), radii.begin() + static_cast<long>(p.size()), r);
    const auto k = static_cast<std::size_t>(it - radii.begin());
    const double f = (r - radii[k - 1]) / (radii[k] - radii[k - 1]);
    return (1.0 - f) * p[k - 1] + f * p[k];
  };
  if (t >= final_time() && r > radii[values.back().size() - 1]) {
    return profile_value(final_profile);
  }
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return profile_value(values.front());
  if (it == times.end()) return profile_value(values.back());
  const auto k = static_cast<std::size_t>(it - times.begin());
  const double f = (t - times[k - 1]) / (times[k] - times[k - 1]);
  return (1.0 - f) * profile_value(values[k - 1]) + f * profile_value(values[k]);
}

void RadialFSolution::write_csv(std::ostream& os) const {
  os << "time,radius,F\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (std::size_t i = 0; i < values[k].size(); ++i) {
      os << times[k] << ',' << radii[i] << ',' << values[k][i] << '\n';
    }
  }
}

RadialFEstimate radial_center_estimate(double beta, double eps, double t_micro,
                                       const RadialFOptions& options) {
  RadialFOptions fine = options;
  fine.inner_spacing *= 0.5;
  fine.growth = 1.0 + 0.5 * (options.growth - 1.0);
  fine.change_tol *= 0.25;
  const double coarse = solve_F_radial(beta, eps, t_micro, options).center_value(t_micro);
  const double value = solve_F_radial(beta, eps, t_micro, fine).center_value(t_micro);
  return {value, std::abs(value - coarse)};
}

}  // namespace kpzlab
