#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "kpzlab/vec2.hpp"

namespace kpzlab {

/// Nonnegative smoothing kernel of unit mass supported in the disc of radius 1/2.
///
/// The smooth bump is c * exp(-1 / (1 - (2|x|)^2)) with c fixed by numerical
/// normalization. The grid box is the indicator of the half-open square
/// [-w/2, w/2)^2 scaled to unit mass; it is not radial and exists so that tests
/// can pin a mollification to a single grid cell.
class Mollifier {
 public:
  enum class Kind { SmoothBump, GridBox };

  static Mollifier smooth_bump();
  /// `width` must satisfy width <= 1/sqrt(2) so the box stays inside |x| < 1/2.
  static Mollifier grid_box(double width = 0.70710678118654752);

  [[nodiscard]] double operator()(Vec2 x) const;
  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] double support_radius() const { return 0.5; }
  [[nodiscard]] double normalization() const { return normalization_; }
  [[nodiscard]] double box_width() const { return box_width_; }

  /// Radial profile, only meaningful for the smooth bump.
  [[nodiscard]] double radial(double r) const;

 private:
  Mollifier(Kind kind, double normalization, double box_width)
      : kind_(kind), normalization_(normalization), box_width_(box_width) {}

  Kind kind_;
  double normalization_;
  double box_width_;
};

/// R = phi * phi(-.) tabulated once. For the smooth bump R is radial and is
/// stored on a uniform radius grid with cubic interpolation; the grid box has a
/// closed-form tent product and needs no table.
class CovarianceKernel {
 public:
  static constexpr int kDefaultTableSize = 4096;

  explicit CovarianceKernel(const Mollifier& m, int table_size = kDefaultTableSize);

  [[nodiscard]] double operator()(Vec2 x) const;
  [[nodiscard]] double radial(double r) const;
  [[nodiscard]] double r0() const { return r0_; }
  [[nodiscard]] double support_radius() const { return 1.0; }
  [[nodiscard]] const Mollifier& mollifier() const { return mollifier_; }
  [[nodiscard]] const std::vector<double>& radial_table() const { return table_; }
  [[nodiscard]] double table_spacing() const { return spacing_; }

  /// Writes (radius, value) rows.
  void write_csv(std::ostream& os) const;

 private:
  Mollifier mollifier_;
  std::vector<double> table_;  // R at r_k = k * spacing_, k = 0..size
  double spacing_ = 0.0;
  double r0_ = 0.0;
};

/// Shared covariance kernel of the smooth bump; building the table is not free.
const CovarianceKernel& default_covariance();

/// Test function g used to pair the fluctuation field. Both kinds are radial
/// about `center` and have unit mass.
class TestFunction {
 public:
  enum class Kind { Gaussian, Bump };

  /// Centered gaussian density with standard deviation `scale` per coordinate.
  static TestFunction gaussian(double scale, Vec2 center = {});
  /// Smooth compactly supported bump of radius `scale`, unit mass.
  static TestFunction bump(double scale, Vec2 center = {});

  [[nodiscard]] double operator()(Vec2 x) const;
  [[nodiscard]] double radial(double r) const;
  /// |g^(k)|^2 with g^(k) = int g(x) e^{-i k.x} dx, as a function of |k|.
  [[nodiscard]] double fourier_sq(double k) const;

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] double scale() const { return scale_; }
  [[nodiscard]] Vec2 center() const { return center_; }
  [[nodiscard]] TestFunction recentered(Vec2 c) const;

 private:
  TestFunction(Kind kind, double scale, Vec2 center);

  Kind kind_;
  double scale_;
  Vec2 center_;
  double normalization_ = 1.0;
  std::shared_ptr<const std::vector<double>> fourier_table_;  // bump only
  double fourier_dk_ = 0.0;
};

/// G_t(x) = (2 pi t)^{-1} exp(-|x|^2 / 2t). Throws DomainError for t <= 0.
double heat_kernel(double t, Vec2 x);

/// nu_eff^2 = 2 pi / (2 pi - beta^2). Throws DomainError once beta^2 >= 2 pi.
double effective_variance(double beta);

/// beta / sqrt(|log eps|) for eps in (0, 1).
double coupling_at_scale(double beta, double eps);

/// Spatial part of the limiting variance, int int g(x1) g(x2) G_{2s}(x1 - x2).
double pair_heat_overlap(const TestFunction& g, double s);

/// sigma_t^2 = nu_eff^2 * int_0^t pair_heat_overlap(g, s) ds.
double sigma_t_squared(const TestFunction& g, double t, double beta);

}  // namespace kpzlab
