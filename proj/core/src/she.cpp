#include "kpzlab/she.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>

#include "kpzlab/errors.hpp"
#include "kpzlab/parallel.hpp"

namespace kpzlab {
namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool is_constant(const Field& u) {
  return std::all_of(u.begin(), u.end(), [&](double v) { return v == u.front(); });
}

// Cumulative law of one coordinate step of the lattice walk whose transition
// is the solver's spectral heat multiplier exp(-k^2 dt / 2). The 2D multiplier
// factorizes, so the two coordinates step independently. Offsets are listed
// as 0, 1, ..., n/2 - 1, -n/2, ..., -1; rounding-level negative weights are
// dropped.
std::vector<double> lattice_step_cdf(const TorusGrid& grid, double dt) {
  const int n = grid.n();
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    double acc = 0.0;
    for (int m = 0; m < n; ++m) {
      const double k = two_pi * grid.signed_offset(m) / grid.side();
      acc += std::exp(-0.5 * k * k * dt) * std::cos(two_pi * m * j / n);
    }
    w[static_cast<std::size_t>(j)] = std::max(0.0, acc / n);
  }
  std::partial_sum(w.begin(), w.end(), w.begin());
  for (double& c : w) c /= w.back();
  return w;
}

}  // namespace

double SheConfig::time_step() const {
  if (!(t_final > 0.0)) throw ConfigError("t_final must be positive");
  const double h = grid.spacing();
  const double requested = dt.value_or(std::min(0.25 * h * h, 1e-3 * t_final));
  if (!(requested > 0.0)) throw ConfigError("time step must be positive");
  const double n = std::ceil(t_final / requested - 1e-9);
  return t_final / n;
}

int SheConfig::steps() const {
  return static_cast<int>(std::llround(t_final / time_step()));
}

void SheConfig::validate() const {
  effective_variance(beta);
  coupling_at_scale(beta, eps);
  static_cast<void>(time_step());
  if (replicas < 1) throw ConfigError("replicas must be positive");
  MollificationOperator(grid, mollifier, eps);
}

nlohmann::json SheConfig::to_json() const {
  return {{"beta", beta},           {"eps", eps},           {"t", t_final},
          {"dt", time_step()},      {"L", grid.side()},     {"n", grid.n()},
          {"replicas", replicas},   {"seed", base_seed}};
}

FieldState FieldState::flat(const TorusGrid& grid) {
  return {grid, 0.0, Field(grid.size(), 1.0)};
}

void heat_halfstep(FieldState& state, double dt) {
  if (dt < 0.0) throw ConfigError("heat step needs dt >= 0");
  state.time += dt;
  if (dt == 0.0 || is_constant(state.u)) return;
  const auto m = heat_multiplier(state.grid, 0.5 * dt);
  thread_workspace(state.grid.n()).apply(state.u, std::span<const double>(m));
}

void noise_multiply_step(FieldState& state, const MollifiedSlice& slice, double beta_eps) {
  if (!(slice.grid == state.grid)) throw ConfigError("noise slice grid does not match the field");
  if (beta_eps == 0.0) return;
  const double correction = 0.5 * beta_eps * beta_eps * slice.variance;
  for (std::size_t i = 0; i < state.u.size(); ++i) {
    state.u[i] *= std::exp(beta_eps * slice.values[i] - correction);
  }
}

SheSolver::SheSolver(const SheConfig& cfg)
    : cfg_(cfg),
      beta_eps_(cfg.beta_eps()),
      dt_(cfg.time_step()),
      steps_(cfg.steps()),
      heat_(heat_multiplier(cfg.grid, 0.5 * cfg.time_step())),
      mollify_(cfg.grid, cfg.mollifier, cfg.eps) {
  effective_variance(cfg.beta);
}

void SheSolver::step(FieldState& state, Rng& rng, NoiseHistory* record) const {
  const auto& grid = cfg_.grid;
  if (!(state.grid == grid)) throw ConfigError("field grid does not match the solver");
  state.time += dt_;
  if (!is_constant(state.u)) {
    thread_workspace(grid.n()).apply(state.u, std::span<const double>(heat_));
  }
  thread_local Field dv;
  dv.resize(grid.size());
  const double sd = std::sqrt(dt_) * grid.spacing();
  for (double& v : dv) v = sd * rng.normal();
  mollify_.apply(dv, dv);
  const double variance = dt_ * mollify_.variance_rate();
  if (record) record->slices.push_back(dv);
  if (beta_eps_ == 0.0) return;
  const double correction = 0.5 * beta_eps_ * beta_eps_ * variance;
  for (std::size_t i = 0; i < state.u.size(); ++i) {
    state.u[i] *= std::exp(beta_eps_ * dv[i] - correction);
  }
}

FieldState SheSolver::run(const SeedStream& stream, NoiseHistory* record) const {
  Rng rng(stream);
  FieldState state = FieldState::flat(cfg_.grid);
  if (record) {
    *record = NoiseHistory{cfg_.grid, dt_, dt_ * mollify_.variance_rate(), {}};
    record->slices.reserve(static_cast<std::size_t>(steps_));
  }
  for (int k = 0; k < steps_; ++k) step(state, rng, record);
  state.time = cfg_.t_final;
  return state;
}

FieldState simulate(const SheConfig& cfg, const SeedStream& stream) {
  return SheSolver(cfg).run(stream);
}

double observable_X(const FieldState& state, const TestFunction& g) {
  const auto& grid = state.grid;
  const int n = grid.n();
  const double h = grid.spacing();
  const Vec2 c = g.center();
  const int cx = static_cast<int>(std::lround(c.x / h));
  const int cy = static_cast<int>(std::lround(c.y / h));
  const double sx = cx * h - c.x, sy = cy * h - c.y;
  double acc = 0.0;
  for (int oy = -n / 2; oy < n / 2; ++oy) {
    for (int ox = -n / 2; ox < n / 2; ++ox) {
      const double u = state.u[grid.index(cx + ox, cy + oy)];
      if (!(u > 0.0)) throw NumericalFailure("nonpositive field value; parameters are unstable");
      const double w = g.radial(std::hypot(ox * h + sx, oy * h + sy));
      acc += std::log(u) * w;
    }
  }
  return acc * h * h;
}

double probe_value(const FieldState& state) {
  const int c = state.grid.n() / 2;
  return state.u[state.grid.index(c, c)];
}

EnsembleSample sample_ensemble(const SheConfig& cfg, const TestFunction* g) {
  const SheSolver solver(cfg);
  const SeedStream base{cfg.base_seed, 0};
  struct Pair {
    double x = 0.0, p = 0.0;
  };
  auto rows = map_replicas<Pair>(cfg.replicas, cfg.threads, [&](std::size_t r) {
    const FieldState s = solver.run(base.with_replica(r));
    return Pair{g ? observable_X(s, *g) : 0.0, probe_value(s)};
  });
  EnsembleSample out;
  out.probe.reserve(rows.size());
  if (g) out.observable.reserve(rows.size());
  for (const auto& r : rows) {
    out.probe.push_back(r.p);
    if (g) out.observable.push_back(r.x);
  }
  return out;
}

EstimateReport variance_from_observables(std::span<const double> xs, double beta_eps,
                                         nlohmann::json parameters) {
  if (xs.size() < 2) throw ConfigError("variance needs at least two replicas");
  EstimateReport r;
  r.replicas = xs.size();
  r.parameters = std::move(parameters);
  if (beta_eps == 0.0) return r;
  const auto jk = jackknife_variance(xs);
  const double scale = 1.0 / (beta_eps * beta_eps);
  r.value = jk.value * scale;
  r.std_error = jk.std_error * scale;
  return r;
}

EstimateReport ensemble_variance(const SheConfig& cfg, const TestFunction& g) {
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.replicas < 2) throw ConfigError("ensemble variance needs at least two replicas");
  const auto sample = sample_ensemble(cfg, &g);
  auto r = variance_from_observables(sample.observable, cfg.beta_eps(), cfg.to_json());
  r.wall_time = seconds_since(t0);
  return r;
}

GaussianitySample standardized_sample(std::span<const double> xs) {
  if (xs.size() < 100) throw ConfigError("gaussianity sample needs at least 100 replicas");
  GaussianitySample out;
  if (sample_variance(xs) == 0.0) {
    out.degenerate = true;
    out.standardized.assign(xs.size(), 0.0);
    return out;
  }
  out.standardized = standardize(xs);
  return out;
}

GaussianitySample gaussianity_sample(const SheConfig& cfg, const TestFunction& g) {
  if (cfg.replicas < 100) throw ConfigError("gaussianity sample needs at least 100 replicas");
  return standardized_sample(sample_ensemble(cfg, &g).observable);
}

std::vector<EstimateReport> negative_moment_estimates(const SheConfig& cfg,
                                                      const std::vector<int>& orders) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int n : orders) {
    if (n < 1 || n > 4) throw ConfigError("negative moment order must be in 1..4");
  }
  if (std::abs(cfg.beta) > 0.5) throw ConfigError("negative moments are only supported for beta <= 0.5");
  if (cfg.replicas < 2) throw ConfigError("negative moments need at least two replicas");
  const auto probe = sample_ensemble(cfg).probe;
  std::vector<EstimateReport> out;
  for (int n : orders) {
    std::vector<double> xs(probe.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!(probe[i] > 0.0)) throw NumericalFailure("nonpositive field value at the probe");
      xs[i] = std::pow(probe[i], -n);
    }
    auto params = cfg.to_json();
    params["n"] = n;
    out.push_back(report_from_sample(xs, std::move(params)));
    out.back().wall_time = seconds_since(t0);
  }
  return out;
}

EstimateReport negative_moment_estimate(const SheConfig& cfg, int n) {
  return negative_moment_estimates(cfg, {n}).front();
}

EstimateReport second_moment_estimate(const SheConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.replicas < 2) throw ConfigError("second moment needs at least two replicas");
  auto probe = sample_ensemble(cfg).probe;
  for (double& v : probe) v *= v;
  auto r = report_from_sample(probe, cfg.to_json());
  r.wall_time = seconds_since(t0);
  return r;
}

EstimateReport second_moment_path_estimate(const SheConfig& cfg, std::size_t n_paths,
                                           std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  if (n_paths < 2) throw ConfigError("path estimator needs at least two paths");
  const MollificationOperator op(cfg.grid, cfg.mollifier, cfg.eps);
  const double beta_eps = cfg.beta_eps();
  const double dt = cfg.time_step();
  const int steps = cfg.steps();
  const double sd = std::sqrt(2.0 * dt);
  const SeedStream base{seed, 0};
  std::vector<double> values(n_paths, 1.0);
  if (beta_eps != 0.0) {
    values = map_replicas<double>(n_paths, cfg.threads, [&](std::size_t i) {
      Rng rng(base.with_replica(i));
      Vec2 y{};
      double acc = 0.0;
      for (int m = 0; m < steps; ++m) {
        acc += dt * op.covariance_rate(y);
        const double zx = rng.normal();
        const double zy = rng.normal();
        y += Vec2{sd * zx, sd * zy};
      }
      return std::exp(beta_eps * beta_eps * acc);
    });
  }
  auto params = cfg.to_json();
  params["paths"] = n_paths;
  params["path_seed"] = seed;
  auto r = report_from_sample(values, std::move(params));
  r.wall_time = seconds_since(t0);
  return r;
}

FkEstimate fk_partition_estimate(const SheConfig& cfg, const NoiseHistory& noise,
                                 std::size_t n_paths, const SeedStream& stream, double alpha) {
  const auto t0 = std::chrono::steady_clock::now();
  if (n_paths < 2) throw ConfigError("Feynman-Kac estimate needs at least two paths");
  const int steps = cfg.steps();
  const double dt = cfg.time_step();
  if (!(noise.grid == cfg.grid) || std::abs(noise.dt - dt) > 1e-12 * dt ||
      noise.slices.size() < static_cast<std::size_t>(steps)) {
    throw ConfigError("stored noise does not cover the configured run");
  }
  const double beta_eps = cfg.beta_eps();
  const double correction = 0.5 * beta_eps * beta_eps * noise.variance;
  const TorusGrid& grid = cfg.grid;
  const int c = grid.n() / 2;
  const auto cdf = lattice_step_cdf(grid, dt);
  auto lattice_step = [&](Rng& rng) {
    const auto j = std::upper_bound(cdf.begin(), cdf.end() - 1, rng.uniform()) - cdf.begin();
    return static_cast<int>(j);
  };
  const double boundary = std::pow(-std::log(cfg.eps), -alpha);

  struct PathResult {
    double weight = 1.0, before = 0.0, after = 0.0;
  };
  auto rows = map_replicas<PathResult>(n_paths, cfg.threads, [&](std::size_t i) {
    PathResult out;
    if (beta_eps == 0.0) return out;
    Rng rng(stream.with_replica(i));
    int ix = c, iy = c;
    for (int m = 0; m < steps; ++m) {
      const auto& dv = noise.slices[static_cast<std::size_t>(steps - 1 - m)];
      const double e = beta_eps * dv[grid.index(ix, iy)] - correction;
      (m * dt < boundary ? out.before : out.after) += e;
      ix = grid.wrap_index(ix + lattice_step(rng));
      iy = grid.wrap_index(iy + lattice_step(rng));
    }
    out.weight = std::exp(out.before + out.after);
    return out;
  });

  std::vector<double> weights(n_paths);
  FkDiagnostics diag{alpha, boundary, 0.0, 0.0};
  for (std::size_t i = 0; i < n_paths; ++i) {
    weights[i] = rows[i].weight;
    diag.exponent_before += rows[i].before;
    diag.exponent_after += rows[i].after;
  }
  diag.exponent_before /= static_cast<double>(n_paths);
  diag.exponent_after /= static_cast<double>(n_paths);
  auto params = cfg.to_json();
  params["paths"] = n_paths;
  FkEstimate out{report_from_sample(weights, std::move(params)), diag};
  out.report.wall_time = seconds_since(t0);
  return out;
}

}  // namespace kpzlab
