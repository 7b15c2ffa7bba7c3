#pragma once

// Synthetic person-year populations and plan offerings, plus CSV ingest of
// externally supplied person and plan tables.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace subsim {

inline constexpr double kFplMin = 138.0;
inline constexpr double kFplMax = 400.0;
inline constexpr int kAgeMin = 18;
inline constexpr int kAgeMax = 64;
inline constexpr int kPopulationSchemaVersion = 1;

enum class Source { enrollee, potential };
enum class Metal { bronze, silver, gold, platinum };

struct Person {
  std::int64_t person_id = 0;
  std::int64_t hiu_id = 0;
  int hiu_size = 1;  // persons sharing (hiu_id, year)
  int year = 0;
  int age = 0;
  bool female = false;
  double fpl = 0.0;
  int rating_area = 0;
  double weight = 1.0;
  bool insured = false;
  Source source = Source::enrollee;
};

struct PlanOffering {
  std::string plan_id;
  Metal metal = Metal::silver;
  int rating_area = 0;
  int year = 0;
  double base_premium = 0.0;  // $/month at age factor 1.0
};

enum class Family { truncated_normal, beta };

/// Target moments of a bounded variable; the family decides the shape.
struct Marginal {
  Family family = Family::truncated_normal;
  double mean = 0.0;
  double sd = 1.0;
};

struct PoolSpec {
  Marginal income;  // %FPL on [138, 400]
  Marginal age;     // years on [18, 64]
  double female_share = 0.5;
};

struct YearSpec {
  int year = 0;
  std::int64_t enrollees = 0;
  std::int64_t potential_population = 0;  // weighted size of the uninsured pool
  std::int64_t potential_sample = 0;      // survey records representing it
  std::optional<int> potential_copy_of;   // reuse another year's survey draws
  std::optional<PoolSpec> enrollee_pool;  // per-year overrides
  std::optional<PoolSpec> potential_pool;
};

struct PlanMarketSpec {
  int silver_plans = 5;
  int bronze_plans = 3;
  int gold_plans = 3;
  int platinum_plans = 1;
  double silver_level = 330.0;      // mean lowest-silver base premium, $/month
  double area_sd = 0.08;            // relative sd of area levels
  double silver_dispersion = 0.25;  // silver premiums drawn on level*(1 + U(0, d))
  double annual_trend = 0.03;
  double bronze_ratio = 0.80;
  double gold_ratio = 1.15;
  double platinum_ratio = 1.35;
};

struct PopulationSpec {
  std::uint64_t seed = 1;
  std::vector<YearSpec> years;
  PoolSpec enrollee_pool;
  PoolSpec potential_pool;
  int rating_areas = 4;
  std::vector<double> rating_area_shares;  // empty means equal shares
  std::vector<double> hiu_size_shares{0.80, 0.14, 0.04, 0.02};  // sizes 1..4
  double intra_hiu_age_correlation = 0.6;
  double survey_weight_dispersion = 0.5;  // sd of log weights before rescaling
  PlanMarketSpec plans;
};

struct Population {
  std::vector<Person> persons;
  std::vector<PlanOffering> plans;
};

/// Throws ConfigError on infeasible specs (moments outside the bounds, shares
/// that do not sum to one, negative counts).
void validate(const PopulationSpec& spec);

/// Deterministic in (spec, spec.seed).
Population generate(const PopulationSpec& spec);

PopulationSpec population_spec_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json population_spec_to_json(const PopulationSpec& spec);
PopulationSpec load_population_spec(const std::filesystem::path& path);

/// Parameters (location, scale or alpha, beta) that realise a marginal's
/// target moments on [lo, hi]. Throws ConfigError if no such member exists.
struct FittedMarginal {
  Family family;
  double lo, hi;
  double p1, p2;
  double quantile(double u) const;
  double mean() const;
  double sd() const;
};
FittedMarginal fit_marginal(const Marginal& m, double lo, double hi);

// ---------------------------------------------------------------- CSV ingest

struct RowReject {
  std::size_t row;  // 1-based data row (header excluded)
  std::string reason;
};

template <typename T>
struct IngestResult {
  std::vector<T> records;
  std::vector<RowReject> rejects;
};

/// Missing columns throw DataError; row-level problems become rejects.
IngestResult<Person> read_persons_csv(std::istream& in);
IngestResult<PlanOffering> read_plans_csv(std::istream& in);

/// Strict variants: throw DataError listing every reject.
std::vector<Person> ingest_persons(const std::filesystem::path& path);
std::vector<PlanOffering> ingest_plans(const std::filesystem::path& path);

void write_persons_csv(std::ostream& out, const std::vector<Person>& persons);
void write_plans_csv(std::ostream& out, const std::vector<PlanOffering>& plans);

const char* to_string(Metal m) noexcept;
const char* to_string(Source s) noexcept;

}  // namespace subsim
