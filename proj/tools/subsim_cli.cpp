// subsim: config-driven front end for the subsidy simulation pipeline.
//
//   subsim <generate|quote|fit|effects|project|allocate|sweep|all>
//          --config scenario.json [--seed N] [--out DIR] [--budgets LIST] [--format csv|json]
//
// Exit codes: 0 ok, 2 config error, 3 data error, 4 numerical failure, 1 other.
// Failures print a one-line JSON report on stderr.

#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "subsim/error.hpp"
#include "subsim/scenario.hpp"

namespace {

int report(const std::string& kind, int code, const std::string& message, const std::string& subcommand) {
  nlohmann::ordered_json j;
  j["error"] = {{"kind", kind}, {"exit_code", code}, {"subcommand", subcommand}, {"message", message}};
  std::cerr << j.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Premium subsidy simulation: generate, quote, fit, project, allocate"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir, budgets, format;

  for (const auto& name : subsim::kSubcommands) {
    auto* sub = app.add_subcommand(name, "run the " + name + " stage" + (name == "all" ? "s in order" : ""));
    sub->add_option("--config", config_path, "scenario JSON file")->required();
    sub->add_option("--seed", seed, "root seed (overrides the config)");
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--budgets", budgets, "annual budgets, e.g. 10M,20M or 10M:150M:10M");
    sub->add_option("--format", format, "table format")->check(CLI::IsMember({"csv", "json"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report("usage", subsim::kExitConfig, e.what(), "");
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    subsim::ScenarioOverrides ov;
    ov.seed = seed;
    if (!out_dir.empty()) ov.output_dir = out_dir;
    if (!budgets.empty()) ov.budgets = subsim::parse_budget_list(budgets);
    if (!format.empty()) ov.format = subsim::parse_format(format);

    subsim::Pipeline pipeline(subsim::load_scenario(config_path, ov));
    for (const auto& path : subsim::run_subcommand(name, pipeline)) std::cout << path.string() << '\n';
    return subsim::kExitOk;
  } catch (const subsim::Error& e) {
    return report(e.kind(), e.exit_code(), e.what(), name);
  } catch (const std::exception& e) {
    return report("internal", 1, e.what(), name);
  }
}
