#include "kpzlab/brownian.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "kpzlab/errors.hpp"
#include "kpzlab/parallel.hpp"

namespace kpzlab {
namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void check_scale(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
}

BrownianPath gaussian_walk(const PathConfig& cfg, double variance_per_step,
                           const SeedStream& stream) {
  cfg.validate();
  const std::size_t n = cfg.steps();
  Rng rng(stream);
  BrownianPath path;
  path.times.resize(n + 1);
  path.positions.resize(n + 1);
  const double sd = std::sqrt(variance_per_step);
  Vec2 p{};
  for (std::size_t k = 0; k <= n; ++k) {
    if (k > 0) {
      const double dx = rng.normal();
      const double dy = rng.normal();
      p += Vec2{sd * dx, sd * dy};
    }
    path.times[k] = k == n ? cfg.horizon : static_cast<double>(k) * cfg.step;
    path.positions[k] = p;
  }
  return path;
}

}  // namespace

void PathConfig::validate() const {
  if (!(step > 0.0)) throw ConfigError("path step must be positive");
  if (!(horizon > 0.0)) throw ConfigError("path horizon must be positive");
  const double ratio = horizon / step;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("path step must divide the horizon");
  }
}

std::size_t PathConfig::steps() const {
  return static_cast<std::size_t>(std::llround(horizon / step));
}

Vec2 BrownianPath::at(double s) const {
  if (times.empty()) throw QueryError("empty path");
  if (s <= times.front()) return positions.front();
  if (s >= times.back()) return positions.back();
  const auto it = std::upper_bound(times.begin(), times.end(), s);
  const auto k = static_cast<std::size_t>(it - times.begin());
  const double a = times[k - 1], b = times[k];
  const double f = (s - a) / (b - a);
  return positions[k - 1] + f * (positions[k] - positions[k - 1]);
}

BrownianPath BrownianPath::frozen(const PathConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.steps();
  BrownianPath path;
  path.times.resize(n + 1);
  path.positions.assign(n + 1, Vec2{});
  for (std::size_t k = 0; k <= n; ++k) {
    path.times[k] = k == n ? cfg.horizon : static_cast<double>(k) * cfg.step;
  }
  return path;
}

BrownianPath sample_path(const PathConfig& cfg, const SeedStream& stream) {
  return gaussian_walk(cfg, cfg.step, stream);
}

BrownianPath sample_relative_path(const PathConfig& cfg, const SeedStream& stream) {
  return gaussian_walk(cfg, 2.0 * cfg.step, stream);
}

BrownianPath sample_bridge(const PathConfig& cfg, Vec2 endpoint, const SeedStream& stream) {
  BrownianPath path = gaussian_walk(cfg, cfg.step, stream);
  const Vec2 miss = path.positions.back() - endpoint;
  const double horizon = cfg.horizon;
  for (std::size_t k = 0; k < path.times.size(); ++k) {
    path.positions[k] -= (path.times[k] / horizon) * miss;
  }
  path.positions.back() = endpoint;
  return path;
}

double occupation_functional(const BrownianPath& path, const OccupationQuery& q) {
  if (path.times.size() < 2) throw QueryError("path has no steps");
  const double tol = 1e-12 * std::max(1.0, path.horizon());
  if (q.begin < -tol || q.end > path.horizon() + tol || q.begin > q.end) {
    throw QueryError("occupation interval must satisfy 0 <= begin <= end <= horizon");
  }
  const CovarianceKernel& R = q.kernel.get();
  const double a = std::max(q.begin, 0.0);
  const double b = std::min(q.end, path.horizon());
  if (a == b) return 0.0;

  auto first = std::upper_bound(path.times.begin(), path.times.end(), a);
  auto k = static_cast<std::size_t>(first - path.times.begin());
  double s_prev = a;
  double r_prev = R(q.offset + path.at(a));
  double acc = 0.0;
  for (; k < path.times.size() && path.times[k] < b; ++k) {
    const double r = R(q.offset + path.positions[k]);
    acc += 0.5 * (path.times[k] - s_prev) * (r_prev + r);
    s_prev = path.times[k];
    r_prev = r;
  }
  const double r_end = R(q.offset + path.at(b));
  acc += 0.5 * (b - s_prev) * (r_prev + r_end);
  return acc;
}

double adaptive_occupation(double horizon, Vec2 offset, double diffusivity,
                           const CovarianceKernel& kernel, Rng& rng,
                           const AdaptiveStepping& stepping, std::optional<Vec2> bridge_end) {
  if (!(horizon > 0.0)) throw ConfigError("occupation horizon must be positive");
  if (diffusivity < 0.0) throw ConfigError("diffusivity must be nonnegative");
  if (!(stepping.fine_step > 0.0) || !(stepping.safety > 0.0)) {
    throw ConfigError("adaptive stepping needs positive fine step and safety factor");
  }
  const double support = kernel.support_radius();
  const double fine_sd = std::sqrt(diffusivity * stepping.fine_step);

  Vec2 y{};  // path position; R is evaluated at offset + y
  double s = 0.0;
  double r_prev = kernel(offset);
  double acc = 0.0;
  while (s < horizon) {
    const double remaining = horizon - s;
    const double gap = (offset + y).norm() - support;
    double dt = stepping.fine_step;
    if (diffusivity > 0.0 && gap > stepping.safety * fine_sd) {
      const double sd = gap / stepping.safety;
      dt = std::max(stepping.fine_step, sd * sd / diffusivity);
    } else if (diffusivity == 0.0) {
      dt = remaining;
    }
    dt = std::min(dt, stepping.max_step);

    Vec2 drift{};
    double var = diffusivity * dt;
    if (bridge_end) {
      // Sequential bridge sampling; shrink coarse steps whose drift would
      // carry the path across the gap.
      for (;;) {
        const double step = std::min(dt, remaining);
        const double frac = step / remaining;
        drift = frac * (*bridge_end - y);
        var = diffusivity * step * (1.0 - frac);
        if (dt <= stepping.fine_step ||
            drift.norm() + stepping.safety * std::sqrt(var) <= std::max(gap, 0.0)) {
          break;
        }
        dt = std::max(stepping.fine_step, 0.5 * dt);
      }
    }
    bool last = false;
    if (dt >= remaining) {
      dt = remaining;
      last = true;
    }
    if (!bridge_end) var = diffusivity * dt;
    const double zx = rng.normal();
    const double zy = rng.normal();
    const double sd = std::sqrt(std::max(var, 0.0));
    y += drift + Vec2{sd * zx, sd * zy};
    if (last && bridge_end) y = *bridge_end;

    const double r = kernel(offset + y);
    acc += 0.5 * dt * (r_prev + r);
    r_prev = r;
    s = last ? horizon : s + dt;
  }
  return acc;
}

double kr_sample(double eps, double ell, Vec2 w, const SeedStream& stream,
                 const AdaptiveStepping& stepping) {
  check_scale(eps);
  if (!(ell > 0.0)) throw DomainError("ell must be positive");
  Rng rng(stream);
  const double horizon = ell / (eps * eps);
  return adaptive_occupation(horizon, w, 2.0, default_covariance(), rng, stepping) /
         (-std::log(eps));
}

std::vector<double> kr_samples(double eps, double ell, Vec2 w, const McOptions& opts) {
  check_scale(eps);
  const SeedStream base{opts.base_seed, 0};
  return map_replicas<double>(opts.replicas, opts.threads, [&](std::size_t i) {
    return kr_sample(eps, ell, w, base.with_replica(i), opts.stepping);
  });
}

EstimateReport f_estimate(double beta, double eps, double ell, Vec2 w, const McOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  effective_variance(beta);  // domain check
  check_scale(eps);
  if (opts.replicas < 2) throw ConfigError("f_estimate needs at least two replicas");
  std::vector<double> values(opts.replicas, 1.0);
  if (beta != 0.0) {
    values = kr_samples(eps, ell, w, opts);
    for (double& v : values) v = std::exp(beta * beta * v);
  }
  EstimateReport r = report_from_sample(
      values, {{"beta", beta}, {"eps", eps}, {"ell", ell}, {"w", {w.x, w.y}},
               {"seed", opts.base_seed}, {"replicas", opts.replicas}});
  r.wall_time = seconds_since(t0);
  return r;
}

EstimateReport exp_moment_estimate(double beta, double eps, double t, Vec2 x,
                                   std::optional<Vec2> bridge_endpoint, const McOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const double beta_eps = coupling_at_scale(beta, eps);
  if (!(t > 0.0)) throw DomainError("t must be positive");
  if (opts.replicas < 2) throw ConfigError("exp_moment_estimate needs at least two replicas");
  const double horizon = t / (eps * eps);
  const SeedStream base{opts.base_seed, 0};
  std::vector<double> values(opts.replicas, 1.0);
  if (beta != 0.0) {
    values = map_replicas<double>(opts.replicas, opts.threads, [&](std::size_t i) {
      Rng rng(base.with_replica(i));
      const double occ = adaptive_occupation(horizon, x, 1.0, default_covariance(), rng,
                                             opts.stepping, bridge_endpoint);
      return std::exp(beta_eps * beta_eps * occ);
    });
  }
  nlohmann::json params{{"beta", beta}, {"eps", eps}, {"t", t}, {"x", {x.x, x.y}},
                        {"seed", opts.base_seed}, {"replicas", opts.replicas}};
  if (bridge_endpoint) params["bridge_endpoint"] = {bridge_endpoint->x, bridge_endpoint->y};
  EstimateReport r = report_from_sample(values, std::move(params));
  r.wall_time = seconds_since(t0);
  return r;
}

EstimateReport occupation_moment_estimate(int n, double eps, double t, Vec2 x,
                                          const McOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  if (n < 1 || n > 3) throw ConfigError("occupation moment order must be 1, 2 or 3");
  check_scale(eps);
  if (!(t > 0.0)) throw DomainError("t must be positive");
  if (opts.replicas < 2) throw ConfigError("occupation_moment_estimate needs two replicas");
  const double horizon = t / (eps * eps);
  const Vec2 offset = (1.0 / eps) * x;
  const SeedStream base{opts.base_seed, 0};
  auto values = map_replicas<double>(opts.replicas, opts.threads, [&](std::size_t i) {
    Rng rng(base.with_replica(i));
    const double occ =
        adaptive_occupation(horizon, offset, 1.0, default_covariance(), rng, opts.stepping);
    return std::pow(occ, n);
  });
  EstimateReport r = report_from_sample(
      values, {{"n", n}, {"eps", eps}, {"t", t}, {"x", {x.x, x.y}},
               {"seed", opts.base_seed}, {"replicas", opts.replicas}});
  r.wall_time = seconds_since(t0);
  return r;
}

}  // namespace kpzlab
