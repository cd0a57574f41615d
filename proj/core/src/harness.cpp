#include "kpzlab/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <ostream>
#include <tuple>

#include "kpzlab/errors.hpp"
#include "kpzlab/stats.hpp"

#ifndef KPZLAB_VERSION
#define KPZLAB_VERSION "unknown"
#endif

namespace kpzlab {
namespace {

std::string number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

const std::vector<std::string>& ExperimentSpec::kinds() {
  static const std::vector<std::string> k{"kernels-check", "kr",           "flimit",
                                          "moments",       "pde",          "she-variance",
                                          "gaussianity",   "negmoments",   "crosscheck"};
  return k;
}

ExperimentSpec ExperimentSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("experiment spec must be a JSON object");
  ExperimentSpec s;
  try {
    s.kind = j.at("kind").get<std::string>();
    s.beta = j.value("beta", s.beta);
    if (j.contains("epsilons")) s.epsilons = j.at("epsilons").get<std::vector<double>>();
    s.t = j.value("t", s.t);
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      s.grid_side = g.value("L", s.grid_side);
      s.grid_n = g.value("n", s.grid_n);
    }
    if (j.contains("dt") && !j.at("dt").is_null()) s.dt = j.at("dt").get<double>();
    s.replicas = j.value("replicas", s.replicas);
    s.seed = j.value("seed", s.seed);
    s.out = j.value("out", s.out);
    s.threads = j.value("threads", s.threads);
    if (j.contains("extra")) s.extra = j.at("extra");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed experiment spec: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json ExperimentSpec::to_json() const {
  nlohmann::json j{{"kind", kind},
                   {"beta", beta},
                   {"epsilons", epsilons},
                   {"t", t},
                   {"grid", {{"L", grid_side}, {"n", grid_n}}},
                   {"dt", dt ? nlohmann::json(*dt) : nlohmann::json(nullptr)},
                   {"replicas", replicas},
                   {"seed", seed},
                   {"out", out},
                   {"extra", extra}};
  return j;
}

void ExperimentSpec::validate() const {
  const auto& k = kinds();
  if (std::find(k.begin(), k.end(), kind) == k.end()) {
    throw ConfigError("unknown experiment kind '" + kind + "'");
  }
  for (double e : epsilons) {
    if (!(e > 0.0 && e < 1.0)) throw ConfigError("every epsilon must lie in (0, 1)");
  }
  if (kind != "kernels-check" && epsilons.empty()) throw ConfigError("epsilon list is empty");
  if (!(t > 0.0)) throw ConfigError("t must be positive");
  if (dt && !(*dt > 0.0)) throw ConfigError("dt must be positive");
  if (!extra.is_object()) throw ConfigError("extra must be a JSON object");
}

void to_json(nlohmann::json& j, const ResultRow& r) {
  j = nlohmann::json{{"kind", r.kind},         {"quantity", r.quantity}, {"beta", r.beta},
                     {"eps", r.eps},           {"t", r.t},               {"replicas", r.replicas},
                     {"seed", r.seed},         {"estimate", r.estimate}, {"stderr", r.std_error},
                     {"target", r.target},     {"threshold", r.threshold},
                     {"rule", r.rule},         {"pass", r.pass}};
}

void from_json(const nlohmann::json& j, ResultRow& r) {
  j.at("kind").get_to(r.kind);
  j.at("quantity").get_to(r.quantity);
  j.at("beta").get_to(r.beta);
  j.at("eps").get_to(r.eps);
  j.at("t").get_to(r.t);
  j.at("replicas").get_to(r.replicas);
  j.at("seed").get_to(r.seed);
  j.at("estimate").get_to(r.estimate);
  j.at("stderr").get_to(r.std_error);
  j.at("target").get_to(r.target);
  j.at("threshold").get_to(r.threshold);
  j.at("rule").get_to(r.rule);
  j.at("pass").get_to(r.pass);
}

bool RunManifest::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const ResultRow& r) { return r.pass; });
}

nlohmann::json RunManifest::to_json() const {
  return {{"spec", spec.to_json()},   {"tool_version", tool_version},
          {"started", started},       {"finished", finished},
          {"wall_time", wall_time},   {"all_pass", all_pass()},
          {"rows", rows},             {"reports", reports}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.spec = ExperimentSpec::from_json(j.at("spec"));
    m.tool_version = j.value("tool_version", "");
    m.started = j.value("started", "");
    m.finished = j.value("finished", "");
    m.wall_time = j.value("wall_time", 0.0);
    m.rows = j.at("rows").get<std::vector<ResultRow>>();
    if (j.contains("reports")) m.reports = j.at("reports");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

DistributionTestResult distribution_test(std::span<const double> sample,
                                         const DistributionReference& ref,
                                         const TestLevels& levels) {
  if (sample.size() < 100) throw ConfigError("distribution test needs at least 100 points");
  DistributionTestResult r;
  if (ref.kind == DistributionReference::Kind::Exponential) {
    const auto ks = ks_exponential(sample, ref.mean);
    r.test = "KS";
    r.statistic = ks.statistic;
    r.p_value = ks.p_value;
    r.threshold = levels.ks_threshold;
    r.accept = ks.statistic < levels.ks_threshold;
  } else {
    const auto ad = anderson_darling_normal(sample);
    r.test = "AD";
    r.statistic = ad.adjusted;
    r.p_value = ad.p_value;
    r.threshold = levels.ad_level;
    r.accept = ad.p_value >= levels.ad_level;
  }
  return r;
}

std::string tool_version() { return KPZLAB_VERSION; }

std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_csv(std::ostream& os, std::span<const ResultRow> rows) {
  os << "kind,quantity,beta,eps,t,replicas,seed,estimate,stderr,target,threshold,rule,pass\n";
  for (const auto& r : rows) {
    os << r.kind << ',' << r.quantity << ',' << number(r.beta) << ',' << number(r.eps) << ','
       << number(r.t) << ',' << r.replicas << ',' << r.seed << ',' << number(r.estimate) << ','
       << number(r.std_error) << ',' << number(r.target) << ',' << number(r.threshold) << ','
       << r.rule << ',' << (r.pass ? "true" : "false") << '\n';
  }
}

void write_manifest(std::ostream& os, const RunManifest& m) { os << m.to_json().dump(2) << '\n'; }

void write_outputs(const RunManifest& m) {
  if (m.spec.out.empty()) return;
  std::ofstream csv(m.spec.out + ".csv");
  std::ofstream json(m.spec.out + ".json");
  if (!csv || !json) throw ConfigError("cannot open output path '" + m.spec.out + "'");
  write_csv(csv, m.rows);
  write_manifest(json, m);
}

nlohmann::json SummaryTable::to_json() const {
  auto out = nlohmann::json::array();
  for (const auto& g : groups) {
    out.push_back({{"kind", g.kind},
                   {"quantity", g.quantity},
                   {"beta", g.beta},
                   {"gap_monotone", g.gap_monotone},
                   {"rows", g.rows}});
  }
  return out;
}

void SummaryTable::write_csv(std::ostream& os) const {
  os << "kind,quantity,beta,eps,estimate,stderr,target,gap,gap_monotone\n";
  for (const auto& g : groups) {
    for (const auto& r : g.rows) {
      os << g.kind << ',' << g.quantity << ',' << number(g.beta) << ',' << number(r.eps) << ','
         << number(r.estimate) << ',' << number(r.std_error) << ',' << number(r.target) << ','
         << number(std::abs(r.estimate - r.target)) << ','
         << (g.gap_monotone ? "true" : "false") << '\n';
    }
  }
}

SummaryTable summarize(std::span<const RunManifest> manifests) {
  if (manifests.empty()) throw ConfigError("summarize needs at least one manifest");
  std::map<std::string, double> horizon;
  for (const auto& m : manifests) {
    const auto [it, fresh] = horizon.emplace(m.spec.kind, m.spec.t);
    if (!fresh && it->second != m.spec.t) {
      throw ConfigError("cannot merge '" + m.spec.kind + "' manifests with different t");
    }
  }
  if (horizon.size() > 1) throw ConfigError("cannot merge manifests of different kinds");

  std::map<std::tuple<std::string, std::string, double>, SummaryGroup> groups;
  std::vector<std::tuple<std::string, std::string, double>> order;
  for (const auto& m : manifests) {
    for (const auto& r : m.rows) {
      const auto key = std::make_tuple(r.kind, r.quantity, r.beta);
      auto [it, fresh] = groups.try_emplace(key);
      if (fresh) {
        it->second.kind = r.kind;
        it->second.quantity = r.quantity;
        it->second.beta = r.beta;
        order.push_back(key);
      }
      it->second.rows.push_back(r);
    }
  }
  SummaryTable table;
  for (const auto& key : order) {
    auto g = groups.at(key);
    std::stable_sort(g.rows.begin(), g.rows.end(),
                     [](const ResultRow& a, const ResultRow& b) { return a.eps > b.eps; });
    double prev = INFINITY;
    for (const auto& r : g.rows) {
      if (r.eps <= 0.0) continue;
      const double gap = std::abs(r.estimate - r.target);
      if (gap > prev) g.gap_monotone = false;
      prev = gap;
    }
    table.groups.push_back(std::move(g));
  }
  return table;
}

}  // namespace kpzlab
