#include "kpzlab/limit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kpzlab/errors.hpp"

namespace kpzlab {
namespace {

constexpr double kPi = std::numbers::pi;

double source_rate(double beta, double eps) {
  effective_variance(beta);
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  return beta * beta / (-std::log(eps));
}

Field covariance_on_grid(const TorusGrid& grid) {
  const auto& R = default_covariance();
  const double h = grid.spacing();
  Field out(grid.size());
  for (int iy = 0; iy < grid.n(); ++iy) {
    for (int ix = 0; ix < grid.n(); ++ix) {
      out[grid.index(ix, iy)] =
          R(Vec2{grid.signed_offset(ix) * h, grid.signed_offset(iy) * h});
    }
  }
  return out;
}

}  // namespace

double FSolution::value_at(std::size_t k, Vec2 w) const {
  if (k >= values.size()) throw QueryError("checkpoint index out of range");
  return interpolate_periodic(grid, values[k], w);
}

double FSolution::value_at_time(double t, Vec2 w) const {
  if (t < 0.0 || t > final_time() * (1.0 + 1e-12)) throw QueryError("time outside the solution");
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return value_at(0, w);
  if (it == times.end()) return value_at(times.size() - 1, w);
  const auto k = static_cast<std::size_t>(it - times.begin());
  const double a = times[k - 1], b = times[k];
  const double f = (t - a) / (b - a);
  return (1.0 - f) * value_at(k - 1, w) + f * value_at(k, w);
}

void FSolution::write_csv(std::ostream& os) const {
  os << "time,radius,F\n";
  const double h = grid.spacing();
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (int i = 0; i < grid.n() / 2; ++i) {
      os << times[k] << ',' << i * h << ',' << values[k][grid.index(i, 0)] << '\n';
    }
  }
}

double diffusive_reach(double t_micro) { return 6.0 * std::sqrt(2.0 * t_micro) + 2.0; }

FSolution solve_F(double beta, double eps, double t_micro, const TorusGrid& grid,
                  const FSolveOptions& options) {
  const double kappa = source_rate(beta, eps);
  if (t_micro < 0.0) throw ConfigError("T_micro must be nonnegative");
  if (options.checkpoint_every < 1) throw ConfigError("checkpoint_every must be positive");
  const double reach = diffusive_reach(t_micro);
  if (grid.side() < reach) {
    throw ConfigError("torus too small for the diffusive reach of T_micro; use L >= " +
                      std::to_string(reach));
  }
  FSolution sol{grid, beta, eps, kappa, 0.0, {0.0}, {Field(grid.size(), 1.0)}};
  if (t_micro == 0.0) return sol;
  const double requested = options.dt.value_or(std::min(0.05, t_micro / 200.0));
  if (!(requested > 0.0)) throw ConfigError("dt must be positive");
  const auto steps = static_cast<long>(std::ceil(t_micro / requested - 1e-9));
  const double dt = t_micro / static_cast<double>(steps);
  sol.dt = dt;

  Field half_source = covariance_on_grid(grid);
  for (double& v : half_source) v = std::exp(0.5 * dt * kappa * v);
  const auto heat = heat_multiplier(grid, dt);
  auto& ws = thread_workspace(grid.n());
  Field f(grid.size(), 1.0);
  for (long s = 1; s <= steps; ++s) {
    if (kappa != 0.0) {
      for (std::size_t i = 0; i < f.size(); ++i) f[i] *= half_source[i];
      ws.apply(f, std::span<const double>(heat));
      for (std::size_t i = 0; i < f.size(); ++i) f[i] *= half_source[i];
    }
    if (s % options.checkpoint_every == 0 || s == steps) {
      sol.times.push_back(s == steps ? t_micro : static_cast<double>(s) * dt);
      sol.values.push_back(f);
    }
  }
  return sol;
}

MildResidual mild_residual(const FSolution& sol, std::size_t checkpoint) {
  if (checkpoint >= sol.times.size()) throw QueryError("checkpoint index out of range");
  MildResidual out;
  out.accuracy_warning = checkpoint > 0 && checkpoint < 7;
  if (checkpoint == 0 || sol.kappa == 0.0) {
    double r = 0.0;
    for (double v : sol.values[checkpoint]) r = std::max(r, std::abs(v - 1.0));
    out.residual = r;
    return out;
  }
  const auto& grid = sol.grid;
  const int n = grid.n();
  const int half = n / 2 + 1;
  const double t = sol.times[checkpoint];
  const Field R = covariance_on_grid(grid);
  auto& ws = thread_workspace(n);
  Spectrum acc(grid.spectral_size(), 0.0), spec;
  Field rf(grid.size());
  for (std::size_t i = 0; i <= checkpoint; ++i) {
    const double left = i > 0 ? sol.times[i] - sol.times[i - 1] : 0.0;
    const double right = i < checkpoint ? sol.times[i + 1] - sol.times[i] : 0.0;
    const double w = 0.5 * (left + right);
    for (std::size_t j = 0; j < rf.size(); ++j) rf[j] = R[j] * sol.values[i][j];
    ws.forward(rf, spec);
    const double lag = t - sol.times[i];
    for (int ky = 0; ky < n; ++ky) {
      for (int kx = 0; kx < half; ++kx) {
        const auto k = static_cast<std::size_t>(ky) * half + kx;
        acc[k] += w * std::exp(-grid.wavenumber2(kx, ky) * lag) * spec[k];
      }
    }
  }
  Field integral(grid.size());
  ws.inverse(acc, integral);
  double r = 0.0;
  for (std::size_t j = 0; j < integral.size(); ++j) {
    r = std::max(r, std::abs(sol.values[checkpoint][j] - 1.0 - sol.kappa * integral[j]));
  }
  out.residual = r;
  return out;
}

double pair_heat_profile(const TestFunction& g, double s, double z) {
  if (s < 0.0) throw DomainError("pair_heat_profile requires s >= 0");
  if (g.kind() == TestFunction::Kind::Gaussian) {
    const double v = 2.0 * g.scale() * g.scale() + 2.0 * s;
    return std::exp(-0.5 * z * z / v) / (2.0 * kPi * v);
  }
  using boost::math::quadrature::gauss_kronrod;
  auto f = [&](double k) {
    return g.fourier_sq(k) * std::exp(-k * k * s) * std::cyl_bessel_j(0.0, k * z) * k;
  };
  const double kmax = 400.0 / g.scale();
  const double panel = 8.0 / g.scale();
  double acc = 0.0;
  for (double a = 0.0; a < kmax; a += panel) {
    acc += gauss_kronrod<double, 31>::integrate(f, a, std::min(a + panel, kmax), 10, 1e-12);
  }
  return acc / (2.0 * kPi);
}

PredictionReport variance_prediction(const TestFunction& g, double t, double beta, double eps,
                                     const FLookup& f) {
  effective_variance(beta);
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  if (!(t > 0.0)) throw DomainError("t must be positive");
  const double horizon = t / (eps * eps);
  if (f.horizon < horizon * (1.0 - 1e-9)) {
    throw ConfigError("F solution does not reach the horizon t / eps^2");
  }

  // Gauss-Legendre in |w| over the support of R.
  using Gauss = boost::math::quadrature::gauss<double, 48>;
  std::vector<double> rs, ws;
  const auto& R = default_covariance();
  for (std::size_t i = 0; i < Gauss::abscissa().size(); ++i) {
    const double x = Gauss::abscissa()[i];
    for (const double sgn : {1.0, -1.0}) {
      if (x == 0.0 && sgn < 0.0) continue;
      const double r = 0.5 * (1.0 + sgn * x);
      rs.push_back(r);
      ws.push_back(0.5 * Gauss::weights()[i] * 2.0 * kPi * r * R.radial(r));
    }
  }
  auto inner = [&](double ell) {
    const double micro = std::min(ell / (eps * eps), f.horizon);
    double acc = 0.0;
    for (std::size_t i = 0; i < rs.size(); ++i) {
      acc += ws[i] * f.value(micro, rs[i]) * pair_heat_profile(g, t - ell, eps * rs[i]);
    }
    return acc;
  };
  // F varies on the microscopic time scale eps^2, so panels are geometric in l.
  using boost::math::quadrature::gauss_kronrod;
  std::vector<double> cuts{0.0};
  for (double c = 0.01 * eps * eps; c < t; c *= 4.0) cuts.push_back(c);
  cuts.push_back(t);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    total += gauss_kronrod<double, 15>::integrate(inner, cuts[k], cuts[k + 1], 8, 1e-10);
  }
  PredictionReport rep;
  rep.epsilon = eps;
  rep.beta = beta;
  rep.t = t;
  rep.predicted_variance = total;
  rep.limit_variance = sigma_t_squared(g, t, beta);
  rep.relative_gap = std::abs(total - rep.limit_variance) / rep.limit_variance;
  return rep;
}

PredictionReport variance_prediction(const TestFunction& g, double t, double beta, double eps,
                                     const RadialFSolution& sol) {
  if (sol.beta != beta || sol.eps != eps) {
    throw ConfigError("F solution was computed for different beta or eps");
  }
  return variance_prediction(
      g, t, beta, eps,
      FLookup{[&sol](double tm, double r) { return sol.value_at(tm, r); }, sol.final_time()});
}

PredictionReport variance_prediction(const TestFunction& g, double t, double beta, double eps,
                                     const FSolution& sol) {
  if (sol.beta != beta || sol.eps != eps) {
    throw ConfigError("F solution was computed for different beta or eps");
  }
  return variance_prediction(
      g, t, beta, eps,
      FLookup{[&sol](double tm, double r) { return sol.value_at_time(tm, Vec2{r, 0.0}); },
              sol.final_time()});
}

}  // namespace kpzlab
