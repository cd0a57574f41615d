#include <random>
#include <regex>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "kpzlab/errors.hpp"
#include "kpzlab/harness.hpp"

using namespace kpzlab;

namespace {

std::string csv_of(const RunManifest& m) {
  std::ostringstream os;
  write_csv(os, m.rows);
  return os.str();
}

ResultRow fake_row(const std::string& quantity, double beta, double eps, double estimate,
                   double target) {
  ResultRow r;
  r.kind = "flimit";
  r.quantity = quantity;
  r.beta = beta;
  r.eps = eps;
  r.t = 1.0;
  r.estimate = estimate;
  r.target = target;
  r.rule = "info";
  return r;
}

RunManifest fake_manifest(std::vector<ResultRow> rows, double t = 1.0) {
  RunManifest m;
  m.spec.kind = "flimit";
  m.spec.t = t;
  m.spec.epsilons = {0.1};
  m.rows = std::move(rows);
  return m;
}

}  // namespace

TEST(DistributionTest, ExponentialSelfTest) {
  std::mt19937_64 gen(1);
  std::exponential_distribution<double> d(2.0);
  std::vector<double> xs(10000);
  for (auto& x : xs) x = d(gen);
  const auto r = distribution_test(xs, DistributionReference::exponential(0.5));
  EXPECT_EQ(r.test, "KS");
  EXPECT_LT(r.statistic, 0.02);
  EXPECT_TRUE(r.accept);
}

TEST(DistributionTest, NormalSelfTestAndPower) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> n;
  std::exponential_distribution<double> e(1.0);
  std::vector<double> normal(10000), expo(10000);
  for (auto& x : normal) x = n(gen);
  for (auto& x : expo) x = e(gen);
  EXPECT_TRUE(distribution_test(normal, DistributionReference::standard_normal()).accept);
  EXPECT_FALSE(distribution_test(expo, DistributionReference::standard_normal()).accept);
  EXPECT_FALSE(distribution_test(expo, DistributionReference::exponential(2.0)).accept);
}

TEST(DistributionTest, UndersizedSampleIsRejected) {
  const std::vector<double> xs(99, 1.0);
  EXPECT_THROW(static_cast<void>(distribution_test(xs, DistributionReference::standard_normal())),
               ConfigError);
}

TEST(ExperimentSpec, JsonRoundTrip) {
  const auto spec = ExperimentSpec::from_json(nlohmann::json::parse(R"({
    "kind": "she-variance", "beta": 0.5, "epsilons": [0.1, 0.05], "t": 0.25,
    "grid": {"L": 0.8, "n": 64}, "dt": 0.001, "replicas": 200, "seed": 9,
    "extra": {"g_scale": 0.1}})"));
  EXPECT_EQ(spec.kind, "she-variance");
  EXPECT_EQ(spec.grid_n, 64);
  EXPECT_EQ(spec.dt, 0.001);
  EXPECT_EQ(spec.option("g_scale", 1.0), 0.1);
  EXPECT_EQ(ExperimentSpec::from_json(spec.to_json()).to_json(), spec.to_json());
}

TEST(ExperimentSpec, RejectsMalformedInput) {
  EXPECT_THROW(ExperimentSpec::from_json(nlohmann::json::parse(R"({"kind": "nope"})")),
               ConfigError);
  EXPECT_THROW(ExperimentSpec::from_json(
                   nlohmann::json::parse(R"({"kind": "kr", "epsilons": [1.5]})")),
               ConfigError);
  EXPECT_THROW(ExperimentSpec::from_json(nlohmann::json::parse("[1, 2]")), ConfigError);
}

TEST(RunExperiment, KernelsCheckPasses) {
  ExperimentSpec spec;
  spec.kind = "kernels-check";
  const auto m = run_experiment(spec);
  EXPECT_FALSE(m.rows.empty());
  for (const auto& r : m.rows) EXPECT_TRUE(r.pass) << r.quantity;
  EXPECT_TRUE(m.all_pass());
  const std::regex iso(R"(\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d+)?Z)");
  EXPECT_TRUE(std::regex_match(m.started, iso)) << m.started;
  EXPECT_TRUE(std::regex_match(m.finished, iso)) << m.finished;
}

TEST(RunExperiment, KrProducesOneMeanAndKsRowPerEpsilon) {
  ExperimentSpec spec;
  spec.kind = "kr";
  spec.epsilons = {1e-2, 1e-3};
  spec.replicas = 200;
  spec.seed = 5;
  const auto m = run_experiment(spec);
  int means = 0, ks = 0;
  for (const auto& r : m.rows) {
    means += r.quantity == "kr_mean_times_2pi";
    ks += r.quantity == "kr_ks_exponential";
    EXPECT_GT(r.eps, 0.0);
    EXPECT_EQ(r.seed, 5u);
    EXPECT_EQ(r.replicas, 200u);
  }
  EXPECT_EQ(means, 2);
  EXPECT_EQ(ks, 2);
}

TEST(RunExperiment, RerunIsByteIdenticalAcrossThreadCounts) {
  ExperimentSpec spec;
  spec.kind = "flimit";
  spec.beta = 1.0;
  spec.epsilons = {0.1, 0.05};
  spec.replicas = 300;
  spec.seed = 6;
  spec.threads = 1;
  const auto a = csv_of(run_experiment(spec));
  spec.threads = 3;
  const auto b = csv_of(run_experiment(spec));
  EXPECT_EQ(a, b);
}

TEST(RunExperiment, DecisionsAreRecomputable) {
  ExperimentSpec spec;
  spec.kind = "flimit";
  spec.beta = 1.0;
  spec.epsilons = {0.1, 0.05};
  spec.replicas = 200;
  const auto m = RunManifest::from_json(run_experiment(spec).to_json());
  for (const auto& r : m.rows) {
    if (r.rule == "abs_diff<threshold") {
      EXPECT_EQ(r.pass, std::abs(r.estimate - r.target) < r.threshold);
    } else if (r.rule == "estimate<threshold") {
      EXPECT_EQ(r.pass, r.estimate < r.threshold);
    } else if (r.rule == "estimate>=threshold") {
      EXPECT_EQ(r.pass, r.estimate >= r.threshold);
    } else if (r.rule != "info") {
      EXPECT_EQ(r.pass, r.estimate == 1.0) << r.rule;
    }
  }
}

TEST(RunExperiment, ErrorsNameTheParameterPoint) {
  ExperimentSpec spec;
  spec.kind = "she-variance";
  spec.beta = 0.5;
  spec.epsilons = {0.1};
  spec.t = 0.01;
  spec.grid_side = 0.8;
  spec.grid_n = 16;  // too coarse for the mollifier
  spec.extra = {{"g_scale", 0.1}};
  spec.replicas = 100;
  try {
    static_cast<void>(run_experiment(spec));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("she-variance"), std::string::npos) << what;
    EXPECT_NE(what.find("eps=0.1"), std::string::npos) << what;
  }
}

TEST(Manifest, JsonRoundTrip) {
  auto m = fake_manifest({fake_row("F_estimate", 1.0, 0.1, 1.3, 1.19)});
  m.tool_version = tool_version();
  m.started = m.finished = iso8601_now();
  const auto back = RunManifest::from_json(m.to_json());
  EXPECT_EQ(back.to_json(), m.to_json());
  EXPECT_EQ(csv_of(back), csv_of(m));
}

TEST(Csv, HeaderAndParameterColumns) {
  const auto csv = csv_of(fake_manifest({fake_row("F_estimate", 1.0, 0.1, 1.3, 1.19)}));
  EXPECT_EQ(csv.rfind("kind,quantity,beta,eps,t,replicas,seed,estimate,stderr,target,threshold,"
                      "rule,pass\n",
                      0),
            0u);
  EXPECT_NE(csv.find("flimit,F_estimate,1,0.1,1,"), std::string::npos) << csv;
}

TEST(Summarize, SingleManifestPassesThrough) {
  const auto m = fake_manifest({fake_row("F_estimate", 1.0, 0.1, 1.3, 1.19),
                                fake_row("F_estimate", 1.0, 0.01, 1.25, 1.19)});
  const auto table = summarize(std::span<const RunManifest>(&m, 1));
  ASSERT_EQ(table.groups.size(), 1u);
  EXPECT_EQ(table.groups[0].rows.size(), 2u);
  EXPECT_TRUE(table.groups[0].gap_monotone);
}

TEST(Summarize, MonotoneFlagAcrossManifests) {
  const std::vector<RunManifest> ms{
      fake_manifest({fake_row("F_estimate", 1.0, 1e-2, 1.27, 1.19)}),
      fake_manifest({fake_row("F_estimate", 1.0, 1e-4, 1.30, 1.19)}),
      fake_manifest({fake_row("F_estimate", 1.0, 1e-3, 1.24, 1.19)})};
  const auto table = summarize(ms);
  ASSERT_EQ(table.groups.size(), 1u);
  EXPECT_EQ(table.groups[0].rows.front().eps, 1e-2);
  EXPECT_EQ(table.groups[0].rows.back().eps, 1e-4);
  EXPECT_FALSE(table.groups[0].gap_monotone);
}

TEST(Summarize, GroupsByBeta) {
  const std::vector<RunManifest> ms{
      fake_manifest({fake_row("F_estimate", 0.5, 1e-2, 1.05, 1.04)}),
      fake_manifest({fake_row("F_estimate", 1.0, 1e-2, 1.27, 1.19)}),
      fake_manifest({fake_row("F_estimate", 0.5, 1e-3, 1.045, 1.04)})};
  const auto table = summarize(ms);
  ASSERT_EQ(table.groups.size(), 2u);
  EXPECT_EQ(table.groups[0].beta, 0.5);
  EXPECT_EQ(table.groups[0].rows.size(), 2u);
  EXPECT_TRUE(table.groups[0].gap_monotone);
}

TEST(Summarize, IncompatibleManifestsAreRejected) {
  auto other = fake_manifest({});
  other.spec.kind = "kr";
  const std::vector<RunManifest> kinds{fake_manifest({}), other};
  EXPECT_THROW(static_cast<void>(summarize(kinds)), ConfigError);
  const std::vector<RunManifest> times{fake_manifest({}), fake_manifest({}, 2.0)};
  EXPECT_THROW(static_cast<void>(summarize(times)), ConfigError);
  EXPECT_THROW(static_cast<void>(summarize(std::span<const RunManifest>())), ConfigError);
}
