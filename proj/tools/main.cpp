#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kpzlab/errors.hpp"
#include "kpzlab/harness.hpp"

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw kpzlab::ConfigError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw kpzlab::ConfigError("'" + path + "': " + e.what());
  }
}

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::optional<std::string> out;
  std::optional<int> threads;
};

int run_kind(const std::string& kind, const Overrides& o) {
  nlohmann::json j = o.config.empty() ? nlohmann::json::object() : read_json(o.config);
  if (j.contains("kind") && j["kind"] != kind) {
    throw kpzlab::ConfigError("config kind '" + j["kind"].get<std::string>() +
                              "' does not match subcommand '" + kind + "'");
  }
  j["kind"] = kind;
  if (o.seed) j["seed"] = *o.seed;
  if (o.replicas) j["replicas"] = *o.replicas;
  if (o.out) j["out"] = *o.out;
  if (o.threads) j["threads"] = *o.threads;
  const auto spec = kpzlab::ExperimentSpec::from_json(j);
  const auto manifest = kpzlab::run_experiment(spec);
  kpzlab::write_outputs(manifest);
  kpzlab::write_csv(std::cout, manifest.rows);
  std::cerr << kind << ": " << (manifest.all_pass() ? "all checks pass" : "some checks FAIL")
            << " (" << manifest.wall_time << " s)\n";
  return manifest.all_pass() ? 0 : 1;
}

int run_summary(const std::vector<std::string>& paths, const std::string& out) {
  std::vector<kpzlab::RunManifest> manifests;
  for (const auto& p : paths) manifests.push_back(kpzlab::RunManifest::from_json(read_json(p)));
  const auto table = kpzlab::summarize(manifests);
  if (out.empty()) {
    table.write_csv(std::cout);
  } else {
    std::ofstream os(out);
    if (!os) throw kpzlab::ConfigError("cannot open '" + out + "'");
    table.write_csv(os);
  }
  for (const auto& g : table.groups) {
    if (!g.gap_monotone) return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D KPZ / Edwards-Wilkinson verification experiments"};
  app.set_version_flag("--version", kpzlab::tool_version());
  app.require_subcommand(1);

  Overrides o;
  int code = 0;
  for (const auto& kind : kpzlab::ExperimentSpec::kinds()) {
    auto* sub = app.add_subcommand(kind, "Run the '" + kind + "' experiment");
    sub->add_option("-c,--config", o.config, "JSON experiment spec")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Override the base seed");
    sub->add_option("--replicas", o.replicas, "Override the replica count");
    sub->add_option("--out", o.out, "Output prefix for <out>.csv and <out>.json");
    sub->add_option("--threads", o.threads, "Worker threads (results do not depend on it)");
    sub->callback([&o, &code, kind] { code = run_kind(kind, o); });
  }

  std::vector<std::string> manifests;
  std::string summary_out;
  auto* sum = app.add_subcommand("summarize", "Merge run manifests into a trend table");
  sum->add_option("manifests", manifests, "Manifest JSON files")->required()->check(CLI::ExistingFile);
  sum->add_option("--out", summary_out, "Write the table here instead of stdout");
  sum->callback([&] { code = run_summary(manifests, summary_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return code;
}
