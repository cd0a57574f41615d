#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "kpzlab/grid.hpp"
#include "kpzlab/kernels.hpp"
#include "kpzlab/noise.hpp"
#include "kpzlab/rng.hpp"
#include "kpzlab/stats.hpp"

namespace kpzlab {

/// du = 1/2 Laplacian u dt + beta_eps u dW_eps on the torus, u(0) = 1.
struct SheConfig {
  double beta = 0.5;
  double eps = 0.1;
  double t_final = 1.0;
  std::optional<double> dt;  ///< default min(dx^2/4, 1e-3 t_final)
  TorusGrid grid{1.6, 64};
  Mollifier mollifier = Mollifier::smooth_bump();
  std::size_t replicas = 100;
  std::uint64_t base_seed = 1;
  int threads = 0;

  [[nodiscard]] double beta_eps() const { return coupling_at_scale(beta, eps); }
  /// Requested (or default) step shrunk so that it divides t_final.
  [[nodiscard]] double time_step() const;
  [[nodiscard]] int steps() const;
  void validate() const;
  [[nodiscard]] nlohmann::json to_json() const;
};

struct FieldState {
  TorusGrid grid;
  double time = 0.0;
  Field u;

  static FieldState flat(const TorusGrid& grid);
};

/// Exact heat flow u <- e^{dt Laplacian / 2} u. Constant fields are returned
/// untouched.
void heat_halfstep(FieldState& state, double dt);

/// u <- u exp(beta_eps dV - beta_eps^2 v / 2) with v the slice's exact variance.
void noise_multiply_step(FieldState& state, const MollifiedSlice& slice, double beta_eps);

/// Stored mollified increments of one replica, oldest first.
struct NoiseHistory {
  TorusGrid grid;
  double dt = 0.0;
  double variance = 0.0;  ///< per-cell variance of every slice
  std::vector<Field> slices;
};

/// Prepared solver for one configuration: caches beta_eps, the step, the heat
/// multiplier and the mollification operator.
class SheSolver {
 public:
  explicit SheSolver(const SheConfig& cfg);

  [[nodiscard]] const SheConfig& config() const { return cfg_; }
  [[nodiscard]] double beta_eps() const { return beta_eps_; }
  [[nodiscard]] double dt() const { return dt_; }
  [[nodiscard]] int steps() const { return steps_; }
  [[nodiscard]] const MollificationOperator& mollification() const { return mollify_; }

  /// One Lie step: heat flow over dt, then the multiplicative noise update.
  void step(FieldState& state, Rng& rng, NoiseHistory* record = nullptr) const;
  [[nodiscard]] FieldState run(const SeedStream& stream, NoiseHistory* record = nullptr) const;

 private:
  SheConfig cfg_;
  double beta_eps_;
  double dt_;
  int steps_;
  std::vector<double> heat_;
  MollificationOperator mollify_;
};

FieldState simulate(const SheConfig& cfg, const SeedStream& stream);

/// int log u(t, x) g(x) dx by the periodic trapezoid rule, summed in offset
/// order from the cell nearest g's center. Throws NumericalFailure if u <= 0.
double observable_X(const FieldState& state, const TestFunction& g);

/// Probe point for pointwise moments: the torus center cell.
double probe_value(const FieldState& state);

struct EnsembleSample {
  std::vector<double> observable;  ///< X per replica, empty without a test function
  std::vector<double> probe;       ///< u(t, x0) per replica
};

/// Runs cfg.replicas independent noise histories in replica order.
EnsembleSample sample_ensemble(const SheConfig& cfg, const TestFunction* g = nullptr);

/// beta_eps^-2 times the sample variance of X, jackknife standard error.
EstimateReport variance_from_observables(std::span<const double> xs, double beta_eps,
                                         nlohmann::json parameters = {});
EstimateReport ensemble_variance(const SheConfig& cfg, const TestFunction& g);

struct GaussianitySample {
  std::vector<double> standardized;
  bool degenerate = false;  ///< zero spread; not suitable for testing
};

GaussianitySample standardized_sample(std::span<const double> xs);
GaussianitySample gaussianity_sample(const SheConfig& cfg, const TestFunction& g);

/// E u(t, x0)^{-n} for each n in `orders` from one shared ensemble.
std::vector<EstimateReport> negative_moment_estimates(const SheConfig& cfg,
                                                      const std::vector<int>& orders);
EstimateReport negative_moment_estimate(const SheConfig& cfg, int n);

/// Ensemble estimate of E u(t, x0)^2.
EstimateReport second_moment_estimate(const SheConfig& cfg);

/// E_B exp(beta_eps^2 sum_m dt R_disc(Y_m)) for the relative walk Y_0 = 0 with
/// per-step variance 2 dt, over the same step count as the grid solver.
EstimateReport second_moment_path_estimate(const SheConfig& cfg, std::size_t n_paths,
                                           std::uint64_t seed);

struct FkDiagnostics {
  double alpha = 1.0;
  double k_boundary = 0.0;       ///< |log eps|^{-alpha}, K_eps in macroscopic time
  double exponent_before = 0.0;  ///< mean exponent from path time < k_boundary
  double exponent_after = 0.0;
};

struct FkEstimate {
  EstimateReport report;
  FkDiagnostics diagnostics;
};

/// Feynman-Kac average of exp(sum beta_eps dV - beta_eps^2 v / 2) along
/// backward paths from the probe point through the recorded noise. Paths are
/// lattice walks whose steps follow the solver's own heat transition, so the
/// noise is read at grid nodes without interpolation.
FkEstimate fk_partition_estimate(const SheConfig& cfg, const NoiseHistory& noise,
                                 std::size_t n_paths, const SeedStream& stream,
                                 double alpha = 1.0);

}  // namespace kpzlab
