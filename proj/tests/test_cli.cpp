#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "subsim/error.hpp"
#include "subsim/scenario.hpp"

namespace fs = std::filesystem;
using namespace subsim;

namespace {

const fs::path kSmall = fs::path(SUBSIM_SOURCE_DIR) / "tests/data/scenario_small.json";
const fs::path kWork = fs::path(SUBSIM_BINARY_DIR) / "cli_work";

int run(const std::string& args, const fs::path& err = {}) {
  std::string cmd = std::string("\"") + SUBSIM_CLI_PATH + "\" " + args + " > /dev/null";
  cmd += err.empty() ? " 2>/dev/null" : " 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> data_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') out.push_back(line);
  return out;
}

fs::path fresh(const std::string& name) {
  const auto d = kWork / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("sweep over 10M:150M:10M writes fifteen rows") {
  const auto out = fresh("sweep");
  REQUIRE(run("sweep --config \"" + kSmall.string() + "\" --out \"" + out.string() + "\" --budgets 10M:150M:10M") == 0);
  const auto lines = data_lines(out / "sweep.csv");
  REQUIRE(lines.size() == 16);
  CHECK(lines[0].rfind("budget,", 0) == 0);
  CHECK(lines[1].rfind("1e+07,", 0) == 0);
  CHECK(lines[15].rfind("1.5e+08,", 0) == 0);
  for (const char* f : {"plot_total_gain.csv", "plot_marginal_gain.csv", "plot_cost_effectiveness.csv",
                        "plot_mean_subsidy.csv", "plot_marginal_enrollee_fpl.csv"})
    CHECK(fs::exists(out / f));
}

TEST_CASE("unknown regime exits with the config code and names it") {
  auto j = nlohmann::ordered_json::parse(slurp(kSmall));
  j["actual_regime"] = "ARPA-2030";
  j["regimes"] = (fs::path(SUBSIM_SOURCE_DIR) / "config/regimes.json").string();
  j["population"] = (fs::path(SUBSIM_SOURCE_DIR) / "tests/data/population_small.json").string();
  const auto dir = fresh("bad_regime");
  std::ofstream(dir / "scenario.json") << j.dump(2);
  const auto err = dir / "stderr.txt";
  CHECK(run("generate --config \"" + (dir / "scenario.json").string() + "\"", err) == kExitConfig);
  const auto report = nlohmann::json::parse(slurp(err));
  CHECK(report["error"]["kind"] == "config");
  CHECK(report["error"]["exit_code"] == 2);
  CHECK(report["error"]["message"].get<std::string>().find("ARPA-2030") != std::string::npos);
  CHECK_THROWS_AS(load_scenario(dir / "scenario.json"), ConfigError);
}

TEST_CASE("usage errors") {
  CHECK(run("") == kExitConfig);
  CHECK(run("sweep") == kExitConfig);
  CHECK(run("sweep --config \"" + kSmall.string() + "\" --format xml") == kExitConfig);
  CHECK(run("sweep --config /nonexistent/scenario.json") == kExitConfig);
  const auto out = fresh("bad_budget");
  CHECK(run("sweep --config \"" + kSmall.string() + "\" --out \"" + out.string() + "\" --budgets 20M,10M") ==
        kExitConfig);
}

TEST_CASE("all equals the individual subcommands in order") {
  const auto a = fresh("all");
  const auto b = fresh("steps");
  REQUIRE(run("all --config \"" + kSmall.string() + "\" --out \"" + a.string() + "\"") == 0);
  for (const auto& s : kSubcommands) {
    if (s == "all") continue;
    REQUIRE(run(s + " --config \"" + kSmall.string() + "\" --out \"" + b.string() + "\"") == 0);
  }
  std::set<std::string> names_a, names_b;
  for (const auto& e : fs::directory_iterator(a)) names_a.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b)) names_b.insert(e.path().filename().string());
  CHECK(names_a == names_b);
  for (const auto& n : names_a) {
    CAPTURE(n);
    CHECK(slurp(a / n) == slurp(b / n));
  }
}

TEST_CASE("seed override changes the provenance line and the data") {
  const auto a = fresh("seed_a");
  const auto b = fresh("seed_b");
  REQUIRE(run("generate --config \"" + kSmall.string() + "\" --out \"" + a.string() + "\"") == 0);
  REQUIRE(run("generate --config \"" + kSmall.string() + "\" --out \"" + b.string() + "\" --seed 8") == 0);
  const auto pa = slurp(a / "persons.csv"), pb = slurp(b / "persons.csv");
  CHECK(pa != pb);
  CHECK(pb.find("seed=8") != std::string::npos);
  const auto hash_a = pa.substr(pa.find("config_hash="), 28), hash_b = pb.substr(pb.find("config_hash="), 28);
  CHECK(hash_a == hash_b);
}

TEST_CASE("json output format") {
  const auto out = fresh("json");
  REQUIRE(run("sweep --config \"" + kSmall.string() + "\" --out \"" + out.string() + "\" --format json") == 0);
  const auto j = nlohmann::json::parse(slurp(out / "sweep.json"));
  CHECK(j["provenance"].contains("config_hash"));
  CHECK(j["rows"].size() == 15);
}

TEST_CASE("fit report layout") {
  Pipeline p(load_scenario(kSmall));
  const auto j = fit_report(p);
  CHECK(j.contains("ols"));
  CHECK(j.contains("2sls"));
  CHECK(j["2sls"]["first_stage"].size() == 3);
  CHECK(j["2sls"]["first_stage"][0]["f_statistic"].get<double>() > 0.0);
  CHECK(effects_table(p).rows.size() == 6);
}

TEST_CASE("scenario hash ignores the seed but tracks the inputs") {
  ScenarioOverrides o;
  o.seed = 99;
  const auto a = load_scenario(kSmall);
  const auto b = load_scenario(kSmall, o);
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  o = {};
  o.budgets = parse_budget_list("1M");
  CHECK(load_scenario(kSmall, o).hash() != a.hash());
  CHECK(parse_budget_list("10M:30M:10M") == std::vector<double>{1e7, 2e7, 3e7});
  CHECK(parse_budget_list("2.5k,1e6") == std::vector<double>{2500, 1e6});
  CHECK_THROWS_AS(parse_budget_list("ten"), ConfigError);
}
