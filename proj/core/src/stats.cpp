#include "kpzlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

#include "kpzlab/errors.hpp"

namespace kpzlab {

void to_json(nlohmann::json& j, const EstimateReport& r) {
  j = nlohmann::json{{"value", r.value},
                     {"stderr", r.std_error},
                     {"replicas", r.replicas},
                     {"parameters", r.parameters},
                     {"wall_time", r.wall_time}};
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw ConfigError("mean of an empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw ConfigError("variance needs at least two samples");
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

double standard_error(std::span<const double> xs) {
  return std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
}

EstimateReport report_from_sample(std::span<const double> xs, nlohmann::json parameters) {
  EstimateReport r;
  r.value = mean(xs);
  r.std_error = xs.size() > 1 ? standard_error(xs) : 0.0;
  r.replicas = xs.size();
  r.parameters = std::move(parameters);
  return r;
}

JackknifeEstimate jackknife_variance(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 3) throw ConfigError("jackknife variance needs at least three samples");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  const double nd = static_cast<double>(n);
  // Leave-one-out: S_(i) = ss - n/(n-1) (x_i - m)^2, var_(i) = S_(i) / (n - 2).
  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = xs[i] - m;
    loo[i] = (ss - nd / (nd - 1.0) * d * d) / (nd - 2.0);
  }
  const double loo_mean = mean(loo);
  double acc = 0.0;
  for (double v : loo) acc += (v - loo_mean) * (v - loo_mean);
  return {ss / (nd - 1.0), std::sqrt((nd - 1.0) / nd * acc)};
}

double skewness(std::span<const double> xs) {
  const double m = mean(xs);
  double m2 = 0.0, m3 = 0.0;
  for (double x : xs) {
    const double d = x - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  const double n = static_cast<double>(xs.size());
  m2 /= n;
  m3 /= n;
  if (m2 == 0.0) return 0.0;
  return m3 / std::pow(m2, 1.5);
}

double skewness_standard_error(std::size_t n) {
  const double d = static_cast<double>(n);
  return std::sqrt(6.0 * d * (d - 1.0) / ((d - 2.0) * (d + 1.0) * (d + 3.0)));
}

std::vector<double> standardize(std::span<const double> xs) {
  const double m = mean(xs);
  const double sd = std::sqrt(sample_variance(xs));
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = sd > 0.0 ? (xs[i] - m) / sd : 0.0;
  return out;
}

namespace {

double kolmogorov_tail(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace

KsResult ks_exponential(std::span<const double> xs, double reference_mean) {
  if (xs.empty()) throw ConfigError("KS test of an empty sample");
  if (!(reference_mean > 0.0)) throw ConfigError("exponential reference mean must be positive");
  std::vector<double> s(xs.begin(), xs.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double cdf = s[i] <= 0.0 ? 0.0 : -std::expm1(-s[i] / reference_mean);
    d = std::max({d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
  }
  const double sqn = std::sqrt(n);
  return {d, kolmogorov_tail((sqn + 0.12 + 0.11 / sqn) * d)};
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ConfigError("KS test of an empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

AndersonDarlingResult anderson_darling_normal(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 8) throw ConfigError("Anderson-Darling test needs at least 8 samples");
  std::vector<double> z = standardize(xs);
  std::sort(z.begin(), z.end());
  const boost::math::normal_distribution<double> unit;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = boost::math::cdf(unit, z[i]);
    const double hi = boost::math::cdf(boost::math::complement(unit, z[n - 1 - i]));
    s += (2.0 * static_cast<double>(i) + 1.0) * (std::log(lo) + std::log(hi));
  }
  const double nd = static_cast<double>(n);
  AndersonDarlingResult r;
  r.statistic = -nd - s / nd;
  r.adjusted = r.statistic * (1.0 + 0.75 / nd + 2.25 / (nd * nd));
  // D'Agostino & Stephens (1986), Table 4.9 p-value approximation.
  const double a = r.adjusted;
  if (a >= 0.6) {
    // The fitted quadratic turns upward past its vertex near 153.
    const double v = std::min(a, 5.709 / (2.0 * 0.0186));
    r.p_value = std::exp(1.2937 - 5.709 * v + 0.0186 * v * v);
  } else if (a >= 0.34) {
    r.p_value = std::exp(0.9177 - 4.279 * a - 1.38 * a * a);
  } else if (a >= 0.2) {
    r.p_value = 1.0 - std::exp(-8.318 + 42.796 * a - 59.938 * a * a);
  } else {
    r.p_value = 1.0 - std::exp(-13.436 + 101.14 * a - 223.73 * a * a);
  }
  r.p_value = std::clamp(r.p_value, 0.0, 1.0);
  return r;
}

}  // namespace kpzlab
