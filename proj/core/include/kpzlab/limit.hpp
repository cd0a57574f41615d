#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "kpzlab/grid.hpp"
#include "kpzlab/kernels.hpp"

namespace kpzlab {

/// dF/dt = Laplacian F + kappa R F, F(0) = 1, kappa = beta^2 / |log eps|, in
/// microscopic coordinates on a torus with R centered at cell 0.
struct FSolution {
  TorusGrid grid;
  double beta = 0.0;
  double eps = 0.0;
  double kappa = 0.0;
  double dt = 0.0;
  std::vector<double> times;
  std::vector<Field> values;

  [[nodiscard]] double final_time() const { return times.back(); }
  /// Bilinear in space at checkpoint k.
  [[nodiscard]] double value_at(std::size_t k, Vec2 w) const;
  /// Linear in time between checkpoints.
  [[nodiscard]] double value_at_time(double t, Vec2 w) const;
  /// Rows (time, radius, F) along the positive x axis.
  void write_csv(std::ostream& os) const;
};

struct FSolveOptions {
  std::optional<double> dt;  ///< default min(0.05, T/200)
  int checkpoint_every = 1;
};

/// Minimal torus side for the diffusive reach rule: 6 sqrt(2T) + 2.
double diffusive_reach(double t_micro);

/// Strang splitting of the exact spectral heat flow and the exact pointwise
/// source exponential. Throws ConfigError when the torus is smaller than the
/// diffusive reach of T_micro.
FSolution solve_F(double beta, double eps, double t_micro, const TorusGrid& grid,
                  const FSolveOptions& options = {});

struct MildResidual {
  double residual = 0.0;
  bool accuracy_warning = false;  ///< fewer than 8 checkpoints in the time quadrature
};

/// Max-norm of F(t_k) - 1 - kappa int_0^{t_k} e^{(t_k - l) Laplacian}[R F(l)] dl with the
/// wrapped heat kernel and the trapezoid rule over stored checkpoints 0..k.
MildResidual mild_residual(const FSolution& sol, std::size_t checkpoint);

/// Same equation for radial F on the half line, finite volumes in r with zero
/// flux at r_max = diffusive_reach(T) and TR-BDF2 in time.
struct RadialFOptions {
  double inner_spacing = 0.01;  ///< uniform cells up to inner_radius
  double inner_radius = 2.0;
  double growth = 1.03;         ///< geometric cell growth beyond inner_radius
  double dt0 = 1e-4;
  double change_tol = 1e-5;     ///< target max relative change of F per step
  double dt_growth = 1.05;
  double store_radius = 2.0;    ///< profile stored at every checkpoint up to here
};

struct RadialFSolution {
  double beta = 0.0;
  double eps = 0.0;
  double kappa = 0.0;
  std::vector<double> radii;  ///< cell centers
  std::vector<double> times;
  std::vector<std::vector<double>> values;  ///< cells with radius <= store_radius
  std::vector<double> final_profile;        ///< all cells at final_time()
  std::size_t steps = 0;

  [[nodiscard]] double final_time() const { return times.back(); }
  [[nodiscard]] double value_at(double t, double r) const;
  [[nodiscard]] double center_value(double t) const { return value_at(t, 0.0); }
  void write_csv(std::ostream& os) const;
};

RadialFSolution solve_F_radial(double beta, double eps, double t_micro,
                               const RadialFOptions& options = {});

struct RadialFEstimate {
  double value = 0.0;      ///< F(T, 0) at the finer resolution
  double tolerance = 0.0;  ///< difference between the two resolutions
};

/// F(T, 0) with an error estimate from a run with halved spacing and change tolerance.
RadialFEstimate radial_center_estimate(double beta, double eps, double t_micro,
                                       const RadialFOptions& options = {});

struct PredictionReport {
  double epsilon = 0.0;
  double beta = 0.0;
  double t = 0.0;
  double predicted_variance = 0.0;
  double limit_variance = 0.0;  ///< sigma_t_squared(g, t, beta)
  double relative_gap = 0.0;
};

/// F(T_micro, |w|) lookup valid up to `horizon`.
struct FLookup {
  std::function<double(double, double)> value;
  double horizon = 0.0;
};

/// int_0^t dl int R(w) F(l/eps^2, w) Psi_{t-l}(eps w) dw with
/// Psi_s(z) = int int g(x) g(y) G_{2s}(x - y - z) dx dy.
PredictionReport variance_prediction(const TestFunction& g, double t, double beta, double eps,
                                     const FLookup& f);
PredictionReport variance_prediction(const TestFunction& g, double t, double beta, double eps,
                                     const RadialFSolution& sol);
PredictionReport variance_prediction(const TestFunction& g, double t, double beta, double eps,
                                     const FSolution& sol);

/// Psi_s(z) for a radial test function.
double pair_heat_profile(const TestFunction& g, double s, double z);

}  // namespace kpzlab
