#pragma once

// Scenario configuration and the generate -> quote -> fit -> effects ->
// project -> allocate -> sweep pipeline behind the command-line tool.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "subsim/demand.hpp"
#include "subsim/policy_sim.hpp"
#include "subsim/population.hpp"
#include "subsim/premium_engine.hpp"
#include "subsim/regimes.hpp"
#include "subsim/table_io.hpp"

namespace subsim {

inline constexpr int kScenarioSchemaVersion = 1;

enum class EffectSource { fit, bands };

struct ScenarioConfig {
  std::uint64_t seed = 1;
  RegimeBook regimes;
  std::string actual_regime = "IRA";
  std::string counterfactual_regime = "ACA";

  std::optional<PopulationSpec> population;  // generated ...
  std::optional<std::filesystem::path> persons_csv;  // ... or ingested
  std::optional<std::filesystem::path> plans_csv;

  std::vector<int> estimation_years;  // empty: every year present
  DesignOptions design;
  Covariance covariance = Covariance::cluster;
  int bootstrap_replicates = 0;
  std::vector<IncomeBand> effect_bands;

  int projection_year = 2024;
  std::vector<IncomeBand> loss_bands;
  EffectSource effect_source = EffectSource::fit;
  std::vector<BandEffect> effect_source_bands;  // used when effect_source == bands

  std::vector<double> budgets;  // $/year, ascending
  std::optional<double> allocation_budget;  // defaults to the first budget

  std::filesystem::path output_dir = "out";
  TableFormat format = TableFormat::csv;

  /// Canonical text of everything that determines the outputs except the
  /// seed: resolved config plus the bytes of every referenced file.
  std::string canonical;
  std::string hash() const;  // 16 hex digits of FNV-1a over `canonical`
};

struct ScenarioOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::vector<double>> budgets;
  std::optional<TableFormat> format;
};

/// Relative paths inside the config resolve against its directory. Throws
/// ConfigError for unknown regimes, bad budgets and malformed fields.
ScenarioConfig scenario_from_json(const nlohmann::ordered_json& j, const std::filesystem::path& base_dir,
                                  const ScenarioOverrides& overrides = {});
ScenarioConfig load_scenario(const std::filesystem::path& path, const ScenarioOverrides& overrides = {});

/// "10M,20M", "1e7,2e7" or a range "10M:150M:10M" (inclusive).
std::vector<double> parse_budget_list(const std::string& text);
TableFormat parse_format(const std::string& text);

/// Lazily evaluated pipeline stages; each is computed once.
class Pipeline {
 public:
  explicit Pipeline(ScenarioConfig config);

  const ScenarioConfig& config() const noexcept { return config_; }
  const Population& population();
  const Regime& actual_regime() const;
  const Regime& counterfactual_regime() const;
  const Market& market();
  const std::vector<std::optional<SubsidyQuote>>& actual_quotes();
  const std::vector<std::optional<SubsidyQuote>>& counterfactual_quotes();
  const DesignMatrix& design();
  const DemandFit& ols();
  const DemandFit& iv();
  const std::vector<EffectsRow>& effects();
  const std::optional<BootstrapSummary>& bootstrap();
  const std::vector<Person>& enrollees();  // projection-year enrollees
  const EnrolleeDelta& deltas();
  const std::vector<double>& enrollee_marginal_effects();
  const LossProjection& projection();
  const std::vector<Candidate>& candidates();
  const AllocationResult& allocation();
  const std::vector<SweepRow>& sweep_rows();

 private:
  ScenarioConfig config_;
  std::optional<Population> population_;
  std::optional<Market> market_;
  std::optional<std::vector<std::optional<SubsidyQuote>>> actual_, counterfactual_;
  std::optional<DesignMatrix> design_;
  std::optional<DemandFit> ols_, iv_;
  std::optional<std::vector<EffectsRow>> effects_;
  std::optional<std::optional<BootstrapSummary>> bootstrap_;
  std::optional<std::vector<Person>> enrollees_;
  std::optional<EnrolleeDelta> deltas_;
  std::optional<std::vector<double>> me_;
  std::optional<LossProjection> projection_;
  std::optional<std::vector<Candidate>> candidates_;
  std::optional<AllocationResult> allocation_;
  std::optional<std::vector<SweepRow>> sweep_;
};

inline const std::vector<std::string> kSubcommands = {"generate", "quote",    "fit",   "effects",
                                                     "project",  "allocate", "sweep", "all"};

/// Runs one subcommand and writes its artifacts under config.output_dir.
/// Returns the written paths in a fixed order.
std::vector<std::filesystem::path> run_subcommand(const std::string& name, Pipeline& pipeline);

/// Table builders used by run_subcommand (exposed for tests).
Table quotes_table(Pipeline& p);
Table effects_table(Pipeline& p);
Table projection_table(Pipeline& p);
Table allocation_table(Pipeline& p);
Table sweep_table(Pipeline& p);
nlohmann::ordered_json fit_report(Pipeline& p);

}  // namespace subsim
