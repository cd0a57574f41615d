#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace kpzlab {

/// One experiment, fully determined by its fields. `extra` carries
/// kind-specific settings (test-function scale, probe displacement, ...).
struct ExperimentSpec {
  std::string kind;
  double beta = 0.0;
  std::vector<double> epsilons;
  double t = 1.0;
  double grid_side = 1.6;
  int grid_n = 64;
  std::optional<double> dt;
  std::size_t replicas = 100;
  std::uint64_t seed = 1;
  std::string out;
  int threads = 0;  ///< not part of the result; any value reproduces the same numbers
  nlohmann::json extra = nlohmann::json::object();

  static const std::vector<std::string>& kinds();
  static ExperimentSpec from_json(const nlohmann::json& j);
  [[nodiscard]] nlohmann::json to_json() const;
  /// Throws ConfigError for unknown kinds or malformed fields.
  void validate() const;
  /// extra[key] if present, else `fallback`.
  template <class T>
  [[nodiscard]] T option(const std::string& key, T fallback) const {
    return extra.contains(key) ? extra.at(key).get<T>() : fallback;
  }
};

/// One CSV row: a measured quantity at one parameter point and its decision.
struct ResultRow {
  std::string kind;
  std::string quantity;
  double beta = 0.0;
  double eps = 0.0;  ///< 0 for rows that aggregate over the epsilon list
  double t = 0.0;
  std::size_t replicas = 0;
  std::uint64_t seed = 0;
  double estimate = 0.0;
  double std_error = 0.0;
  double target = 0.0;
  double threshold = 0.0;
  std::string rule;  ///< how estimate, target and threshold combine into `pass`
  bool pass = true;
};

void to_json(nlohmann::json& j, const ResultRow& r);
void from_json(const nlohmann::json& j, ResultRow& r);

struct RunManifest {
  ExperimentSpec spec;
  std::string tool_version;
  std::string started;   ///< ISO-8601 UTC
  std::string finished;  ///< ISO-8601 UTC
  double wall_time = 0.0;
  std::vector<ResultRow> rows;
  nlohmann::json reports = nlohmann::json::array();  ///< EstimateReports and diagnostics

  [[nodiscard]] bool all_pass() const;
  [[nodiscard]] nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

struct DistributionReference {
  enum class Kind { Exponential, StandardNormal };
  Kind kind = Kind::StandardNormal;
  double mean = 1.0;  ///< exponential only

  static DistributionReference exponential(double mean) { return {Kind::Exponential, mean}; }
  static DistributionReference standard_normal() { return {Kind::StandardNormal, 0.0}; }
};

struct TestLevels {
  double ks_threshold = 0.1;  ///< exponential references: accept iff KS distance < threshold
  double ad_level = 0.01;     ///< normal reference: accept iff AD p-value >= level
};

struct DistributionTestResult {
  std::string test;  ///< "KS" or "AD"
  double statistic = 0.0;
  double p_value = 1.0;
  double threshold = 0.0;
  bool accept = false;
};

/// KS against the exact exponential CDF or Anderson-Darling normality with
/// estimated parameters. Requires at least 100 points.
DistributionTestResult distribution_test(std::span<const double> sample,
                                         const DistributionReference& ref,
                                         const TestLevels& levels = {});

std::string tool_version();
std::string iso8601_now();

/// Dispatches to the experiment for spec.kind. Errors are rethrown with the
/// kind and parameter point prepended.
RunManifest run_experiment(const ExperimentSpec& spec);

void write_csv(std::ostream& os, std::span<const ResultRow> rows);
void write_manifest(std::ostream& os, const RunManifest& m);
/// Writes <out>.csv and <out>.json when spec.out is set.
void write_outputs(const RunManifest& m);

/// Rows of several manifests merged by (kind, quantity, beta), with a
/// monotone-gap flag per group.
struct SummaryGroup {
  std::string kind;
  std::string quantity;
  double beta = 0.0;
  std::vector<ResultRow> rows;  ///< sorted by decreasing eps
  bool gap_monotone = true;     ///< |estimate - target| nonincreasing as eps decreases
};

struct SummaryTable {
  std::vector<SummaryGroup> groups;
  [[nodiscard]] nlohmann::json to_json() const;
  void write_csv(std::ostream& os) const;
};

/// Throws ConfigError when manifests mix kinds or t values within a kind.
SummaryTable summarize(std::span<const RunManifest> manifests);

}  // namespace kpzlab
