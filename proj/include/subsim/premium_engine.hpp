#pragma once

// Four-step subsidy computation: benchmark identification, age rating,
// federal PTC against the expected contribution, state supplement, and the
// floored post-subsidy premium of the lowest-cost silver plan.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subsim/exec.hpp"
#include "subsim/population.hpp"
#include "subsim/regimes.hpp"

namespace subsim {

/// All amounts are $/month at full precision; rounding happens on export.
struct SubsidyQuote {
  std::int64_t person_id = 0;
  std::string regime;
  bool eligible = false;
  double ecp_percent = 0.0;
  double benchmark_premium = 0.0;   // aged second-lowest silver
  double min_silver_premium = 0.0;  // aged lowest silver
  double expected_contribution = 0.0;
  double federal_ptc = 0.0;
  double state_supplement = 0.0;
  double post_subsidy_premium = 0.0;
};

struct BenchmarkPair {
  const PlanOffering* lowest = nullptr;
  const PlanOffering* second_lowest = nullptr;
};

/// Lowest and second-lowest silver by base premium, ties broken by plan_id.
/// Throws DataError when the cell has fewer than two silver plans.
BenchmarkPair benchmark_plans(std::span<const PlanOffering> plans, int rating_area, int year);

double age_adjusted(double base_premium, int age, const AgeCurve& curve);

/// Benchmark lookup for every rating-area-year. Keeps pointers into `plans`,
/// which must outlive it.
class Market {
 public:
  explicit Market(std::span<const PlanOffering> plans);
  /// nullptr for cells with fewer than two silver plans or no plans at all.
  const BenchmarkPair* find(int rating_area, int year) const noexcept;
  std::vector<std::pair<int, int>> unquotable_cells() const;

 private:
  std::map<std::pair<int, int>, std::optional<BenchmarkPair>> cells_;
};

/// Nullopt when the rating-area-year is unquotable.
std::optional<SubsidyQuote> try_quote(const Person& person, const Regime& regime, const Market& market,
                                      const PovertyGuidelines& guidelines);
/// Throws DataError when the rating-area-year is unquotable.
SubsidyQuote quote(const Person& person, const Regime& regime, const Market& market,
                   const PovertyGuidelines& guidelines);

struct QuoteDelta {
  double premium_change = 0.0;  // post_subsidy(b) - post_subsidy(a)
  double headroom = 0.0;        // max(0, total subsidy(a) - total subsidy(b))
};

QuoteDelta quote_delta(const Person& person, const Regime& regime_a, const Regime& regime_b, const Market& market,
                       const PovertyGuidelines& guidelines);
QuoteDelta quote_delta(const SubsidyQuote& a, const SubsidyQuote& b) noexcept;

/// One optional quote per person, in input order.
std::vector<std::optional<SubsidyQuote>> quote_population(std::span<const Person> persons, const Regime& regime,
                                                          const Market& market, const PovertyGuidelines& guidelines,
                                                          Exec exec = Exec::parallel);

}  // namespace subsim
