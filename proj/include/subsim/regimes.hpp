#pragma once

// Subsidy regimes as data: expected-contribution schedules, eligibility
// limits, age rating curves and state supplement rules. The premium engine
// has no regime-specific code paths; ACA and IRA differ only in what is
// loaded here.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace subsim {

inline constexpr int kRegimeSchemaVersion = 1;

struct EcpBreakpoint {
  double fpl;      // % of the federal poverty level
  double percent;  // % of annual income
};

/// Piecewise-linear expected contribution percentage by income.
class EcpSchedule {
 public:
  EcpSchedule() = default;
  /// Throws ConfigError unless breakpoints are strictly increasing in income
  /// and every contribution lies in [0, 100].
  explicit EcpSchedule(std::vector<EcpBreakpoint> points);

  /// Flat extrapolation below the first and above the last breakpoint.
  double evaluate(double fpl) const;
  std::span<const EcpBreakpoint> breakpoints() const noexcept { return points_; }

 private:
  std::vector<EcpBreakpoint> points_;
};

/// Age rating factors for ages 0..120. Built from (possibly sparse) anchors,
/// linearly interpolated between anchors and held flat outside them.
class AgeCurve {
 public:
  static constexpr int kMaxAge = 120;

  AgeCurve();  // flat 1.0 below 64, 3.0 from 64; only useful as a placeholder
  /// Throws ConfigError if factor(21) != 1, factor(a) != 3 for a >= 64, or the
  /// curve decreases anywhere on [21, 64].
  explicit AgeCurve(std::map<int, double> anchors);

  double factor(int age) const noexcept;
  const std::map<int, double>& anchors() const noexcept { return anchors_; }

  /// The federal default curve (the one nearly every state uses).
  static AgeCurve federal_default();

 private:
  std::map<int, double> anchors_;
  std::array<double, kMaxAge + 1> factors_{};
};

enum class SupplementKind { ecp_reduction, fixed_dollar };

/// A state supplement that is a function of age with a linear phase-out.
/// For ecp_reduction rules the amount is in percentage points of ECP; for
/// fixed_dollar rules it is dollars per month.
struct StateSupplementRule {
  std::string name;
  SupplementKind kind = SupplementKind::ecp_reduction;
  double base_amount = 0.0;
  int full_age_lo = 0;
  int full_age_hi = 0;
  double phaseout_step = 0.0;  // per year of age above full_age_hi
  int phaseout_end_age = 0;    // amount is zero from this age on
  std::vector<int> applicable_years;
  std::optional<double> fpl_min;  // inclusive
  std::optional<double> fpl_max;  // inclusive

  bool applies_in(int year) const noexcept;
  bool covers_income(double fpl) const noexcept;
  /// Age schedule only; callers check year and income separately.
  double amount_at_age(int age) const noexcept;
};

struct Regime {
  std::string name;
  EcpSchedule ecp_schedule;
  double eligibility_floor = 138.0;
  std::optional<double> eligibility_cap;
  AgeCurve age_curve;
  std::vector<StateSupplementRule> state_rules;
};

/// Annual poverty guideline by coverage year and household size.
class PovertyGuidelines {
 public:
  struct Entry {
    int coverage_year;
    double first_person;
    double each_additional;
  };

  PovertyGuidelines() = default;
  explicit PovertyGuidelines(std::vector<Entry> entries);

  /// Throws DataError for an unknown year or a household size below 1.
  double annual(int coverage_year, int household_size) const;
  bool has_year(int coverage_year) const noexcept;
  std::span<const Entry> entries() const noexcept { return entries_; }

 private:
  std::vector<Entry> entries_;  // sorted by year
};

/// Everything loaded from a regime config file.
struct RegimeBook {
  std::vector<Regime> regimes;
  PovertyGuidelines guidelines;

  /// Throws ConfigError naming the regime when it is absent.
  const Regime& find(const std::string& name) const;
};

double expected_contribution_pct(const Regime& regime, double fpl);
bool ptc_eligible(const Regime& regime, double fpl);
/// Percentage points of ECP reduction (or $/month for fixed-dollar rules);
/// zero when the rule does not apply in `year`.
double state_ecp_reduction(const StateSupplementRule& rule, int age, int year);

Regime regime_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json regime_to_json(const Regime& regime);
RegimeBook regime_book_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json regime_book_to_json(const RegimeBook& book);
RegimeBook load_regime_book(const std::filesystem::path& path);

}  // namespace subsim
