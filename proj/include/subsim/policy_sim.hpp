#pragma once

// Coverage-loss projection when the enhanced credits lapse, and allocation of
// a state budget across enrollees to retain as much coverage as possible.
//
// Units: marginal effects are percentage points of coverage probability per
// $1/month of premium; subsidies and caps are $/month; budgets are $/year.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subsim/demand.hpp"
#include "subsim/exec.hpp"
#include "subsim/population.hpp"
#include "subsim/premium_engine.hpp"
#include "subsim/regimes.hpp"

namespace subsim {

inline constexpr double kMonthsPerYear = 12.0;
inline constexpr double kCostEffectivenessUnit = 10'000'000.0;  // persons per $10M

struct LossBandRow {
  IncomeBand band;
  double baseline = 0.0;
  double loss = 0.0;
  double share = 0.0;  // of total loss
};

struct LossProjection {
  double baseline = 0.0;
  double projected = 0.0;
  std::vector<LossBandRow> bands;

  double total_loss() const noexcept { return baseline - projected; }
  double loss_share() const noexcept { return baseline > 0.0 ? total_loss() / baseline : 0.0; }
  /// Throws NumericalError if band losses do not add up to baseline minus
  /// projected (to `tol` relative) or shares do not sum to one.
  void check(double tol = 1e-9) const;
};

/// Builds a projection from band totals and checks it. Shares are computed
/// here.
LossProjection make_projection(double baseline, double projected, std::vector<LossBandRow> bands);

/// 138-200, 201-300, 301-400.
std::vector<IncomeBand> default_loss_bands();

/// Per-person marginal effect from the fitted alphas.
std::vector<double> person_marginal_effects(std::span<const Person> persons, const DemandFit& fit);

struct BandEffect {
  IncomeBand band;
  double marginal_effect = 0.0;
};

/// The per-band marginal effects of the published effects table (138-150
/// through 301-400).
std::vector<BandEffect> published_band_effects();

/// Marginal effect of the first band containing each person. Throws
/// DataError if a person falls in no band.
std::vector<double> band_marginal_effects(std::span<const Person> persons, std::span<const BandEffect> bands);

/// Loss of coverage probability, aggregated by band. Every band list must
/// partition [138, 400]; persons outside every band throw DataError.
LossProjection project_losses(std::span<const Person> enrollees, std::span<const double> me,
                              std::span<const double> premium_change, std::span<const IncomeBand> bands,
                              Exec exec = Exec::parallel);

/// Enrollee inputs to the allocation: marginal effect, IRA-era headroom and
/// the actual-minus-counterfactual premium change.
struct EnrolleeDelta {
  std::vector<double> premium_change;
  std::vector<double> headroom;
};

/// Quotes every enrollee under both regimes. Throws DataError naming the
/// first unquotable person.
EnrolleeDelta regime_deltas(std::span<const Person> enrollees, const Regime& current, const Regime& lapsed,
                            const Market& market, const PovertyGuidelines& guidelines, Exec exec = Exec::parallel);

LossProjection project_losses(std::span<const Person> enrollees, const DemandFit& fit, const Regime& current,
                              const Regime& lapsed, const Market& market, const PovertyGuidelines& guidelines,
                              std::span<const IncomeBand> bands, Exec exec = Exec::parallel);

// ------------------------------------------------------------------ allocation

struct Candidate {
  std::int64_t person_id = 0;
  double fpl = 0.0;
  double me = 0.0;   // sign ignored
  double cap = 0.0;  // $/month
};

/// Greedy fill order: |ME| descending, then smaller cap, then person_id.
/// Candidates with zero |ME| or zero cap are dropped; they never help.
class FillOrder {
 public:
  explicit FillOrder(std::span<const Candidate> candidates);

  std::size_t size() const noexcept { return order_.size(); }
  /// Index into the candidate span.
  std::size_t at(std::size_t k) const noexcept { return order_[k]; }
  double total_caps() const noexcept { return cap_prefix_.back(); }

  struct Fill {
    std::size_t full = 0;      // candidates filled to cap
    double partial = 0.0;      // $/month to candidate `full`, if any
    double monthly_spend = 0.0;
    double gain = 0.0;         // expected persons retained
    std::optional<std::size_t> marginal;  // position of the last funded candidate
  };
  Fill fill(double annual_budget) const;

 private:
  std::span<const Candidate> candidates_;
  std::vector<std::size_t> order_;
  std::vector<double> cap_prefix_;   // size n+1
  std::vector<double> gain_prefix_;  // size n+1
};

struct AllocationResult {
  double budget = 0.0;  // $/year
  std::vector<double> subsidy;  // $/month, candidate order
  double annual_spend = 0.0;
  double gain = 0.0;
  std::size_t recipients = 0;
  std::optional<double> marginal_fpl;
  std::optional<double> marginal_me;
  double mean_subsidy = 0.0;                // $/month per retained person
  double mean_subsidy_per_recipient = 0.0;  // $/month
  double cost_effectiveness = 0.0;          // persons per $10M of budget
};

/// Throws ConfigError for a negative or non-finite budget or cap.
AllocationResult allocate(std::span<const Candidate> candidates, double annual_budget);

struct SweepRow {
  double budget = 0.0;
  double gain = 0.0;
  double marginal_gain = 0.0;
  std::optional<double> marginal_fpl;
  double cost_effectiveness = 0.0;
  double marginal_cost_effectiveness = 0.0;
  double mean_subsidy = 0.0;
  double mean_subsidy_per_recipient = 0.0;
  double annual_spend = 0.0;
  std::size_t recipients = 0;
  /// $/year to raise the marginal enrollee's probability by one point.
  std::optional<double> marginal_cost_per_point;
};

/// Budgets must be non-negative and ascending (ConfigError otherwise).
/// Marginal columns difference against the previous row (the first row
/// against a zero budget).
std::vector<SweepRow> sweep(std::span<const Candidate> candidates, std::span<const double> budgets);

/// Budgets from `step` to `last` inclusive.
std::vector<double> budget_grid(double step, double last);

/// Bernoulli realisation of retained enrollees: candidate i is retained with
/// probability min(1, subsidy_i * |ME_i| / 100).
std::vector<bool> realize_retention(std::span<const Candidate> candidates, const AllocationResult& result,
                                    std::uint64_t seed);

}  // namespace subsim
