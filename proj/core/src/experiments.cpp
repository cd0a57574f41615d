#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kpzlab/brownian.hpp"
#include "kpzlab/errors.hpp"
#include "kpzlab/harness.hpp"
#include "kpzlab/kernels.hpp"
#include "kpzlab/limit.hpp"
#include "kpzlab/she.hpp"
#include "kpzlab/stats.hpp"

namespace kpzlab {
namespace {

constexpr double kPi = std::numbers::pi;

class Runner {
 public:
  Runner(const ExperimentSpec& spec, RunManifest& m) : spec_(spec), m_(m) {}

  ResultRow row(const std::string& quantity, double eps) const {
    ResultRow r;
    r.kind = spec_.kind;
    r.quantity = quantity;
    r.beta = spec_.beta;
    r.eps = eps;
    r.t = spec_.t;
    r.replicas = spec_.replicas;
    r.seed = spec_.seed;
    return r;
  }

  void info(ResultRow r, double estimate, double se, double target = 0.0) {
    r.estimate = estimate;
    r.std_error = se;
    r.target = target;
    r.rule = "info";
    r.pass = true;
    push(std::move(r));
  }
  /// |estimate - target| < threshold
  void near(ResultRow r, double estimate, double se, double target, double threshold) {
    r.estimate = estimate;
    r.std_error = se;
    r.target = target;
    r.threshold = threshold;
    r.rule = "abs_diff<threshold";
    r.pass = std::abs(estimate - target) < threshold;
    push(std::move(r));
  }
  /// estimate < threshold
  void below(ResultRow r, double estimate, double threshold, double se = 0.0) {
    r.estimate = estimate;
    r.std_error = se;
    r.threshold = threshold;
    r.rule = "estimate<threshold";
    r.pass = estimate < threshold;
    push(std::move(r));
  }
  /// estimate >= threshold
  void at_least(ResultRow r, double estimate, double threshold, double se = 0.0) {
    r.estimate = estimate;
    r.std_error = se;
    r.threshold = threshold;
    r.rule = "estimate>=threshold";
    r.pass = estimate >= threshold;
    push(std::move(r));
  }
  void flag(ResultRow r, bool ok, const std::string& rule) {
    r.estimate = ok ? 1.0 : 0.0;
    r.target = 1.0;
    r.rule = rule;
    r.pass = ok;
    push(std::move(r));
  }
  void report(const std::string& label, double eps, const EstimateReport& rep) {
    nlohmann::json j = rep;
    j["label"] = label;
    j["eps"] = eps;
    m_.reports.push_back(std::move(j));
  }
  void note(nlohmann::json j) { m_.reports.push_back(std::move(j)); }

  [[nodiscard]] std::vector<double> epsilons_descending() const {
    auto e = spec_.epsilons;
    std::sort(e.begin(), e.end(), std::greater<>());
    return e;
  }
  [[nodiscard]] McOptions mc(std::size_t replicas) const {
    McOptions o;
    o.replicas = replicas;
    o.base_seed = spec_.seed;
    o.threads = spec_.threads;
    o.stepping.fine_step = spec_.option("fine_step", o.stepping.fine_step);
    return o;
  }
  [[nodiscard]] SheConfig she(double eps) const {
    SheConfig c;
    c.beta = spec_.beta;
    c.eps = eps;
    c.t_final = spec_.t;
    c.dt = spec_.dt;
    c.grid = TorusGrid(spec_.grid_side, spec_.grid_n);
    c.replicas = spec_.replicas;
    c.base_seed = spec_.seed;
    c.threads = spec_.threads;
    return c;
  }

  /// Runs f for one parameter point, prefixing any error with the point.
  template <class F>
  void at(double eps, F&& f) {
    const std::string where = spec_.kind + " at eps=" + std::to_string(eps) + ": ";
    try {
      f();
    } catch (const DomainError& e) {
      throw DomainError(where + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    } catch (const QueryError& e) {
      throw QueryError(where + e.what());
    } catch (const NumericalFailure& e) {
      throw NumericalFailure(where + e.what());
    }
  }

  const ExperimentSpec& spec() const { return spec_; }

 private:
  void push(ResultRow r) { m_.rows.push_back(std::move(r)); }

  const ExperimentSpec& spec_;
  RunManifest& m_;
};

/// Relative gaps |est - target| / target strictly decrease along `gaps`.
bool strictly_shrinking(const std::vector<double>& gaps) {
  for (std::size_t i = 1; i < gaps.size(); ++i) {
    if (!(gaps[i] < gaps[i - 1])) return false;
  }
  return true;
}

void kernels_check(Runner& run) {
  using boost::math::quadrature::gauss_kronrod;
  const auto& spec = run.spec();
  const double scale = spec.option("g_scale", 1.0);
  const auto g = TestFunction::gaussian(scale);
  const double nu2 = effective_variance(spec.beta);

  const double sigma = sigma_t_squared(g, spec.t, spec.beta);
  const double closed = nu2 / (4.0 * kPi) * std::log1p(spec.t / (scale * scale));
  run.below(run.row("sigma2_rel_error", 0.0), std::abs(sigma - closed) / closed, 1e-6);

  // G_s * G_u = G_{s+u} by the periodic trapezoid rule on a wide square.
  {
    const double s = 0.5, u = 1.0, h = 0.05, half = 12.0;
    const int m = static_cast<int>(std::lround(half / h));
    double err = 0.0;
    for (const Vec2 x : {Vec2{0.0, 0.0}, Vec2{1.0, 0.5}, Vec2{2.0, -1.0}}) {
      double acc = 0.0;
      for (int i = -m; i <= m; ++i) {
        for (int j = -m; j <= m; ++j) {
          const Vec2 y{i * h, j * h};
          acc += heat_kernel(s, x - y) * heat_kernel(u, y);
        }
      }
      err = std::max(err, std::abs(acc * h * h - heat_kernel(s + u, x)));
    }
    run.below(run.row("heat_semigroup_error", 0.0), err, 1e-8);
  }
  // Spectral heat step against the analytic kernel on a 128^2 torus.
  {
    const TorusGrid grid(20.0, 128);
    FieldState st = FieldState::flat(grid);
    const Vec2 c{10.0, 10.0};
    for (int iy = 0; iy < grid.n(); ++iy) {
      for (int ix = 0; ix < grid.n(); ++ix) {
        st.u[grid.index(ix, iy)] = heat_kernel(0.5, grid.position(ix, iy) - c);
      }
    }
    heat_halfstep(st, 1.0);
    double err = 0.0;
    for (int iy = 0; iy < grid.n(); ++iy) {
      for (int ix = 0; ix < grid.n(); ++ix) {
        err = std::max(err, std::abs(st.u[grid.index(ix, iy)] -
                                     heat_kernel(1.5, grid.position(ix, iy) - c)));
      }
    }
    run.below(run.row("spectral_heat_error", 0.0), err, 1e-6);
  }
  {
    const double expected = 2.0 * kPi / (2.0 * kPi - 1.0);
    run.below(run.row("effective_variance_beta1_error", 0.0),
              std::abs(effective_variance(1.0) - expected) / expected, 4e-16);
    bool thrown = false;
    try {
      effective_variance(std::sqrt(2.0 * kPi));
    } catch (const DomainError&) {
      thrown = true;
    }
    run.flag(run.row("effective_variance_critical_domain_error", 0.0), thrown, "flag");
  }
  {
    const auto& R = default_covariance();
    const auto phi = Mollifier::smooth_bump();
    const double mass_phi = gauss_kronrod<double, 61>::integrate(
        [&](double r) { return 2.0 * kPi * r * phi.radial(r); }, 0.0, 0.5, 15, 1e-14);
    const double mass_R = gauss_kronrod<double, 61>::integrate(
        [&](double r) { return 2.0 * kPi * r * R.radial(r); }, 0.0, 1.0, 15, 1e-14);
    const double phi_sq = gauss_kronrod<double, 61>::integrate(
        [&](double r) { return 2.0 * kPi * r * phi.radial(r) * phi.radial(r); }, 0.0, 0.5, 15,
        1e-14);
    run.below(run.row("mollifier_mass_error", 0.0), std::abs(mass_phi - 1.0), 1e-10);
    run.below(run.row("covariance_mass_error", 0.0), std::abs(mass_R - 1.0), 1e-8);
    run.below(run.row("covariance_r0_rel_error", 0.0), std::abs(R.r0() - phi_sq) / phi_sq, 1e-8);
    run.info(run.row("covariance_r0", 0.0), R.r0(), 0.0);
  }
}

void kr(Runner& run) {
  const auto& spec = run.spec();
  const double ell = spec.option("ell", 1.0);
  const TestLevels levels{spec.option("ks_threshold", 0.1), 0.01};
  for (double eps : run.epsilons_descending()) {
    run.at(eps, [&] {
      const auto xs = kr_samples(eps, ell, Vec2{}, run.mc(spec.replicas));
      const auto rep = report_from_sample(xs, {{"eps", eps}, {"ell", ell}});
      run.report("kr_sample", eps, rep);
      run.near(run.row("kr_mean_times_2pi", eps), 2.0 * kPi * rep.value,
               2.0 * kPi * rep.std_error, 1.0, spec.option("mean_tolerance", 0.15));
      const auto ks = distribution_test(xs, DistributionReference::exponential(1.0 / (2.0 * kPi)),
                                        levels);
      run.below(run.row("kr_ks_exponential", eps), ks.statistic, ks.threshold);
      run.info(run.row("kr_ks_p_value", eps), ks.p_value, 0.0);
    });
  }
}

void flimit(Runner& run) {
  const auto& spec = run.spec();
  const double ell = spec.option("ell", 1.0);
  const double target = effective_variance(spec.beta);
  std::vector<double> gaps;
  for (double eps : run.epsilons_descending()) {
    run.at(eps, [&] {
      const auto rep = f_estimate(spec.beta, eps, ell, Vec2{}, run.mc(spec.replicas));
      run.report("f_estimate", eps, rep);
      run.info(run.row("F_estimate", eps), rep.value, rep.std_error, target);
      gaps.push_back(std::abs(rep.value - target) / target);
    });
  }
  run.flag(run.row("F_gap_monotone", 0.0), strictly_shrinking(gaps), "monotone");
  run.below(run.row("F_final_gap", 0.0), gaps.back(), spec.option("final_gap", 0.2));

  const double eps0 = run.epsilons_descending().front();
  const auto zero = f_estimate(0.0, eps0, ell, Vec2{}, run.mc(std::min<std::size_t>(spec.replicas, 16)));
  auto r = run.row("F_beta0_exact", eps0);
  r.beta = 0.0;
  run.flag(r, zero.value == 1.0 && zero.std_error == 0.0, "flag");
}

void moments(Runner& run) {
  const auto& spec = run.spec();
  const int order = spec.option("order", 2);
  const auto xv = spec.option("x", std::vector<double>{0.5, 0.0});
  if (xv.size() != 2) throw ConfigError("moments: x must have two components");
  const Vec2 x{xv[0], xv[1]};
  std::vector<double> scaled;
  for (double eps : run.epsilons_descending()) {
    run.at(eps, [&] {
      const auto rep = occupation_moment_estimate(order, eps, spec.t, x, run.mc(spec.replicas));
      run.report("occupation_moment", eps, rep);
      const double L = -std::log(eps);
      run.info(run.row("occupation_moment_over_log", eps), rep.value / L, rep.std_error / L);
      scaled.push_back(rep.value / L);
    });
  }
  const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
  run.below(run.row("occupation_moment_max_over_min", 0.0), *hi / *lo,
            spec.option("max_ratio", 3.0));
}

void pde(Runner& run) {
  const auto& spec = run.spec();
  const double ell = spec.option("ell", 1.0);
  for (double eps : run.epsilons_descending()) {
    run.at(eps, [&] {
      const double horizon = ell / (eps * eps);
      const auto F = radial_center_estimate(spec.beta, eps, horizon);
      const auto mc = f_estimate(spec.beta, eps, ell, Vec2{}, run.mc(spec.replicas));
      run.report("f_estimate", eps, mc);
      run.note({{"label", "radial_F"}, {"eps", eps}, {"value", F.value}, {"tolerance", F.tolerance}});
      run.info(run.row("F_pde", eps), F.value, F.tolerance, effective_variance(spec.beta));
      run.info(run.row("F_mc", eps), mc.value, mc.std_error, effective_variance(spec.beta));
      run.near(run.row("F_pde_minus_mc", eps), F.value - mc.value, mc.std_error + F.tolerance,
               0.0, 3.0 * (mc.std_error + F.tolerance));
    });
  }

  // Mild formulation under refinement, and the 2D solver against the radial one.
  const double eps = run.epsilons_descending().front();
  const double T = spec.option("mild_T", 2.0);
  const TorusGrid grid(spec.option("mild_L", 16.0), spec.option("mild_n", 128));
  const double dt = spec.option("mild_dt", 0.02);
  run.at(eps, [&] {
    const auto coarse = solve_F(spec.beta, eps, T, grid, {dt, 1});
    const auto fine = solve_F(spec.beta, eps, T, grid, {0.5 * dt, 1});
    const double r1 = mild_residual(coarse, coarse.times.size() - 1).residual;
    const double r2 = mild_residual(fine, fine.times.size() - 1).residual;
    run.info(run.row("mild_residual_coarse", eps), r1, 0.0);
    run.info(run.row("mild_residual_fine", eps), r2, 0.0);
    run.near(run.row("mild_residual_ratio", eps), r1 / r2, 0.0, 4.0, 1.0);
    const double radial = solve_F_radial(spec.beta, eps, T).center_value(T);
    run.near(run.row("F_2d_minus_radial", eps), fine.value_at(fine.times.size() - 1, Vec2{}) - radial,
             0.0, 0.0, spec.option("solver_agreement", 1e-3));
  });
}

void require_reach(const ExperimentSpec& spec, double scale) {
  const double need = 8.0 * std::max(scale, std::sqrt(spec.t));
  if (spec.grid_side < need * (1.0 - 1e-12)) {
    throw ConfigError("torus side must be at least 8 x max(test-function scale, sqrt t) = " +
                      std::to_string(need));
  }
}

void gaussianity_rows(Runner& run, double eps, const std::vector<double>& xs) {
  const auto s = standardized_sample(xs);
  if (s.degenerate) {
    run.flag(run.row("gaussianity_degenerate", eps), true, "info");
    return;
  }
  const auto ad = distribution_test(s.standardized, DistributionReference::standard_normal(),
                                    {0.1, run.spec().option("ad_level", 0.01)});
  run.info(run.row("anderson_darling_statistic", eps), ad.statistic, 0.0);
  run.at_least(run.row("anderson_darling_p_value", eps), ad.p_value, ad.threshold);
  const double se = skewness_standard_error(xs.size());
  run.near(run.row("skewness", eps), skewness(xs), se, 0.0, 3.0 * se);
}

void she_observables(Runner& run, bool variance_rows, bool gauss_rows) {
  const auto& spec = run.spec();
  const double scale = spec.option("g_scale", 1.0);
  require_reach(spec, scale);
  const Vec2 center{0.5 * spec.grid_side, 0.5 * spec.grid_side};
  const auto g = TestFunction::gaussian(scale, center);
  const double target = sigma_t_squared(g, spec.t, spec.beta);
  auto gauss_eps = spec.option("gaussianity_eps", std::vector<double>{});
  std::vector<double> gaps;
  for (double eps : run.epsilons_descending()) {
    run.at(eps, [&] {
      const auto cfg = run.she(eps);
      const auto xs = sample_ensemble(cfg, &g).observable;
      if (variance_rows) {
        const auto rep = variance_from_observables(xs, cfg.beta_eps(), cfg.to_json());
        run.report("ensemble_variance", eps, rep);
        run.info(run.row("scaled_variance", eps), rep.value, rep.std_error, target);
        gaps.push_back(std::abs(rep.value - target) / target);
      }
      const bool wanted = gauss_rows || std::any_of(gauss_eps.begin(), gauss_eps.end(),
                                                    [&](double e) { return std::abs(e - eps) < 1e-12 * eps; });
      if (wanted) gaussianity_rows(run, eps, xs);
    });
  }
  if (variance_rows) {
    run.flag(run.row("variance_gap_monotone", 0.0), strictly_shrinking(gaps), "monotone");
    run.below(run.row("variance_final_gap", 0.0), gaps.back(), spec.option("final_gap", 0.3));
  }
}

void negmoments(Runner& run) {
  const auto& spec = run.spec();
  std::vector<double> second;
  for (double eps : run.epsilons_descending()) {
    run.at(eps, [&] {
      const auto reps = negative_moment_estimates(run.she(eps), {1, 2});
      run.report("negative_moment_1", eps, reps[0]);
      run.report("negative_moment_2", eps, reps[1]);
      run.info(run.row("negative_moment_1", eps), reps[0].value, reps[0].std_error);
      run.info(run.row("negative_moment_2", eps), reps[1].value, reps[1].std_error);
      run.at_least(run.row("jensen_m2_minus_m1_squared", eps),
                   reps[1].value - reps[0].value * reps[0].value, 0.0);
      second.push_back(reps[1].value);
    });
  }
  const auto [lo, hi] = std::minmax_element(second.begin(), second.end());
  run.below(run.row("negative_moment_2_max_over_min", 0.0), *hi / *lo,
            spec.option("max_ratio", 2.0));
}

void crosscheck(Runner& run) {
  const auto& spec = run.spec();
  const auto checks =
      spec.option("checks", std::vector<std::string>{"mean_one", "second_moment", "fk"});
  auto has = [&](const char* c) { return std::find(checks.begin(), checks.end(), c) != checks.end(); };
  for (double eps : run.epsilons_descending()) {
    run.at(eps, [&] {
      const auto cfg = run.she(eps);
      if (has("mean_one") || has("second_moment")) {
        const auto probe = sample_ensemble(cfg).probe;
        const auto first = report_from_sample(probe, cfg.to_json());
        run.report("probe_mean", eps, first);
        if (has("mean_one")) {
          run.near(run.row("mean_one", eps), first.value, first.std_error, 1.0,
                   3.0 * first.std_error);
        }
        if (has("second_moment")) {
          std::vector<double> sq(probe.size());
          for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = probe[i] * probe[i];
          const auto grid = report_from_sample(sq, cfg.to_json());
          const auto paths = spec.option("paths", static_cast<std::size_t>(spec.replicas));
          const auto path = second_moment_path_estimate(cfg, paths, spec.seed + 1);
          run.report("second_moment_grid", eps, grid);
          run.report("second_moment_path", eps, path);
          run.info(run.row("second_moment_grid", eps), grid.value, grid.std_error);
          auto pr = run.row("second_moment_path", eps);
          pr.replicas = paths;
          run.info(pr, path.value, path.std_error);
          const double se = std::hypot(grid.std_error, path.std_error);
          run.near(run.row("second_moment_grid_minus_path", eps), grid.value - path.value, se,
                   0.0, 3.0 * se);
        }
      }
      if (has("fk")) {
        const SheSolver solver(cfg);
        NoiseHistory noise;
        const SeedStream stream{spec.seed, 0};
        const double grid_value = probe_value(solver.run(stream, &noise));
        const auto fk_paths = spec.option("fk_paths", static_cast<std::size_t>(10000));
        const auto fk = fk_partition_estimate(cfg, noise, fk_paths, stream.fork(1));
        run.report("fk_partition", eps, fk.report);
        run.note({{"label", "fk_diagnostics"},
                  {"eps", eps},
                  {"k_boundary", fk.diagnostics.k_boundary},
                  {"exponent_before", fk.diagnostics.exponent_before},
                  {"exponent_after", fk.diagnostics.exponent_after}});
        auto r = run.row("fk_minus_grid", eps);
        r.replicas = fk_paths;
        run.near(r, fk.report.value - grid_value, fk.report.std_error, 0.0,
                 3.0 * fk.report.std_error);
      }
    });
  }
}

}  // namespace

RunManifest run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  RunManifest m;
  m.spec = spec;
  m.tool_version = tool_version();
  m.started = iso8601_now();
  const auto t0 = std::chrono::steady_clock::now();
  Runner run(spec, m);
  if (spec.kind == "kernels-check") kernels_check(run);
  else if (spec.kind == "kr") kr(run);
  else if (spec.kind == "flimit") flimit(run);
  else if (spec.kind == "moments") moments(run);
  else if (spec.kind == "pde") pde(run);
  else if (spec.kind == "she-variance") she_observables(run, true, false);
  else if (spec.kind == "gaussianity") she_observables(run, false, true);
  else if (spec.kind == "negmoments") negmoments(run);
  else if (spec.kind == "crosscheck") crosscheck(run);
  m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  m.finished = iso8601_now();
  return m;
}

}  // namespace kpzlab
