#include "subsim/premium_engine.hpp"

#include <algorithm>

#include "subsim/error.hpp"
#include "subsim/kernels.hpp"

namespace subsim {

namespace {

bool cheaper(const PlanOffering* a, const PlanOffering* b) {
  if (a->base_premium != b->base_premium) return a->base_premium < b->base_premium;
  return a->plan_id < b->plan_id;
}

std::optional<BenchmarkPair> pick_benchmark(std::vector<const PlanOffering*>& silver) {
  if (silver.size() < 2) return std::nullopt;
  std::partial_sort(silver.begin(), silver.begin() + 2, silver.end(), cheaper);
  return BenchmarkPair{silver[0], silver[1]};
}

}  // namespace

BenchmarkPair benchmark_plans(std::span<const PlanOffering> plans, int rating_area, int year) {
  std::vector<const PlanOffering*> silver;
  for (const auto& p : plans)
    if (p.metal == Metal::silver && p.rating_area == rating_area && p.year == year) silver.push_back(&p);
  auto pair = pick_benchmark(silver);
  if (!pair)
    throw DataError("rating area " + std::to_string(rating_area) + ", year " + std::to_string(year) +
                    " is unquotable: fewer than two silver plans");
  return *pair;
}

double age_adjusted(double base_premium, int age, const AgeCurve& curve) { return base_premium * curve.factor(age); }

Market::Market(std::span<const PlanOffering> plans) {
  std::map<std::pair<int, int>, std::vector<const PlanOffering*>> silver;
  for (const auto& p : plans) {
    auto& cell = silver[{p.rating_area, p.year}];
    if (p.metal == Metal::silver) cell.push_back(&p);
  }
  for (auto& [key, list] : silver) cells_[key] = pick_benchmark(list);
}

const BenchmarkPair* Market::find(int rating_area, int year) const noexcept {
  auto it = cells_.find({rating_area, year});
  if (it == cells_.end() || !it->second) return nullptr;
  return &*it->second;
}

std::vector<std::pair<int, int>> Market::unquotable_cells() const {
  std::vector<std::pair<int, int>> out;
  for (const auto& [key, pair] : cells_)
    if (!pair) out.push_back(key);
  return out;
}

std::optional<SubsidyQuote> try_quote(const Person& person, const Regime& regime, const Market& market,
                                      const PovertyGuidelines& guidelines) {
  const BenchmarkPair* cell = market.find(person.rating_area, person.year);
  if (!cell) return std::nullopt;

  SubsidyQuote q;
  q.person_id = person.person_id;
  q.regime = regime.name;
  q.benchmark_premium = age_adjusted(cell->second_lowest->base_premium, person.age, regime.age_curve);
  q.min_silver_premium = age_adjusted(cell->lowest->base_premium, person.age, regime.age_curve);

  // The household contribution is shared equally by the HIU members, since
  // premiums are rated per person.
  const double monthly_income =
      person.fpl / 100.0 * guidelines.annual(person.year, person.hiu_size) / 12.0 / double(person.hiu_size);
  q.ecp_percent = expected_contribution_pct(regime, person.fpl);
  q.expected_contribution = q.ecp_percent / 100.0 * monthly_income;
  q.eligible = ptc_eligible(regime, person.fpl);

  if (q.eligible) {
    q.federal_ptc = std::max(0.0, q.benchmark_premium - q.expected_contribution);
    const double after_federal = std::max(0.0, q.min_silver_premium - q.federal_ptc);
    double state = 0.0;
    for (const auto& rule : regime.state_rules) {
      if (!rule.applies_in(person.year) || !rule.covers_income(person.fpl)) continue;
      const double amount = rule.amount_at_age(person.age);
      if (rule.kind == SupplementKind::ecp_reduction) {
        const double reduced = std::max(q.ecp_percent - amount, 0.0);
        state += (q.ecp_percent - reduced) / 100.0 * monthly_income;
      } else {
        state += amount;
      }
    }
    q.state_supplement = std::min(after_federal, state);
    q.post_subsidy_premium = std::max(0.0, after_federal - q.state_supplement);
  } else {
    q.post_subsidy_premium = q.min_silver_premium;
  }
  return q;
}

SubsidyQuote quote(const Person& person, const Regime& regime, const Market& market,
                   const PovertyGuidelines& guidelines) {
  auto q = try_quote(person, regime, market, guidelines);
  if (!q)
    throw DataError("person " + std::to_string(person.person_id) + ": rating area " +
                    std::to_string(person.rating_area) + ", year " + std::to_string(person.year) + " is unquotable");
  return *q;
}

QuoteDelta quote_delta(const SubsidyQuote& a, const SubsidyQuote& b) noexcept {
  return {b.post_subsidy_premium - a.post_subsidy_premium,
          std::max(0.0, (a.federal_ptc + a.state_supplement) - (b.federal_ptc + b.state_supplement))};
}

QuoteDelta quote_delta(const Person& person, const Regime& regime_a, const Regime& regime_b, const Market& market,
                       const PovertyGuidelines& guidelines) {
  return quote_delta(quote(person, regime_a, market, guidelines), quote(person, regime_b, market, guidelines));
}

std::vector<std::optional<SubsidyQuote>> quote_population(std::span<const Person> persons, const Regime& regime,
                                                          const Market& market, const PovertyGuidelines& guidelines,
                                                          Exec exec) {
  // Guideline lookups throw; surface those before entering a parallel region.
  for (const auto& p : persons)
    if (!guidelines.has_year(p.year))
      throw DataError("no poverty guideline for coverage year " + std::to_string(p.year));
  return exec == Exec::serial ? kernels::serial::quote_all(persons, regime, market, guidelines)
                              : kernels::omp::quote_all(persons, regime, market, guidelines);
}

}  // namespace subsim
