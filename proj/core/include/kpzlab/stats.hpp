#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace kpzlab {

/// Uniform record for every Monte Carlo output.
struct EstimateReport {
  double value = 0.0;
  double std_error = 0.0;  ///< sample standard deviation / sqrt(replicas), or a jackknife SE
  std::size_t replicas = 0;
  nlohmann::json parameters = nlohmann::json::object();
  double wall_time = 0.0;  ///< seconds; excluded from numeric outputs that must be reproducible
};

void to_json(nlohmann::json& j, const EstimateReport& r);

double mean(std::span<const double> xs);
/// Unbiased (n - 1) sample variance, two-pass in index order.
double sample_variance(std::span<const double> xs);
double standard_error(std::span<const double> xs);

/// Mean and standard error of a sample, with the given parameter echo.
EstimateReport report_from_sample(std::span<const double> xs, nlohmann::json parameters = {});

struct JackknifeEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Sample variance with its delete-one jackknife standard error.
JackknifeEstimate jackknife_variance(std::span<const double> xs);

/// Sample skewness g1 = m3 / m2^{3/2}.
double skewness(std::span<const double> xs);
/// Standard error of the sample skewness of n iid gaussian draws.
double skewness_standard_error(std::size_t n);

/// (x - mean) / sd with the sample mean and standard deviation.
std::vector<double> standardize(std::span<const double> xs);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;  ///< asymptotic Kolmogorov tail, fully specified reference
};

/// Kolmogorov-Smirnov distance to the exponential law with the given mean.
KsResult ks_exponential(std::span<const double> xs, double reference_mean);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

struct AndersonDarlingResult {
  double statistic = 0.0;  ///< A^2 with mean and variance estimated from the sample
  double adjusted = 0.0;   ///< A^2 (1 + 0.75/n + 2.25/n^2)
  double p_value = 1.0;
};

/// Anderson-Darling normality test with estimated parameters.
AndersonDarlingResult anderson_darling_normal(std::span<const double> xs);

}  // namespace kpzlab
