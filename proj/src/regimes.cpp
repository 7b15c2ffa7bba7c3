#include "subsim/regimes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "subsim/error.hpp"

namespace subsim {

using nlohmann::ordered_json;

// ---------------------------------------------------------------- EcpSchedule

EcpSchedule::EcpSchedule(std::vector<EcpBreakpoint> points) : points_(std::move(points)) {
  if (points_.empty()) throw ConfigError("ECP schedule has no breakpoints");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    if (!std::isfinite(p.fpl) || !std::isfinite(p.percent))
      throw ConfigError("ECP schedule has a non-finite breakpoint");
    if (p.percent < 0.0 || p.percent > 100.0)
      throw ConfigError("ECP contribution outside [0, 100] at " + std::to_string(p.fpl) + "% FPL");
    if (i > 0 && !(p.fpl > points_[i - 1].fpl))
      throw ConfigError("ECP breakpoints must be strictly increasing in income (at index " +
                        std::to_string(i) + ")");
  }
}

double EcpSchedule::evaluate(double fpl) const {
  if (points_.empty()) throw ConfigError("ECP schedule is empty");
  if (fpl <= points_.front().fpl) return points_.front().percent;
  if (fpl >= points_.back().fpl) return points_.back().percent;
  auto hi = std::upper_bound(points_.begin(), points_.end(), fpl,
                             [](double x, const EcpBreakpoint& b) { return x < b.fpl; });
  auto lo = hi - 1;
  const double t = (fpl - lo->fpl) / (hi->fpl - lo->fpl);
  return lo->percent + t * (hi->percent - lo->percent);
}

// ------------------------------------------------------------------- AgeCurve

AgeCurve::AgeCurve() {
  for (int a = 0; a <= kMaxAge; ++a) factors_[a] = a >= 64 ? 3.0 : 1.0;
  anchors_ = {{21, 1.0}, {63, 1.0}, {64, 3.0}};
}

AgeCurve::AgeCurve(std::map<int, double> anchors) : anchors_(std::move(anchors)) {
  if (anchors_.empty()) throw ConfigError("age curve has no anchors");
  for (const auto& [age, f] : anchors_) {
    if (age < 0 || age > kMaxAge) throw ConfigError("age curve anchor outside 0..120: " + std::to_string(age));
    if (!(f > 0.0) || !std::isfinite(f)) throw ConfigError("age curve factor must be positive");
  }
  for (int a = 0; a <= kMaxAge; ++a) {
    auto hi = anchors_.lower_bound(a);
    if (hi == anchors_.end()) {
      factors_[a] = std::prev(hi)->second;
    } else if (hi->first == a || hi == anchors_.begin()) {
      factors_[a] = hi->second;
    } else {
      auto lo = std::prev(hi);
      const double t = double(a - lo->first) / double(hi->first - lo->first);
      factors_[a] = lo->second + t * (hi->second - lo->second);
    }
  }
  if (factors_[21] != 1.0) throw ConfigError("age curve must have factor 1.0 at age 21");
  for (int a = 64; a <= kMaxAge; ++a)
    if (factors_[a] != 3.0) throw ConfigError("age curve must have factor 3.0 at ages 64 and above");
  for (int a = 22; a <= 64; ++a)
    if (factors_[a] < factors_[a - 1]) throw ConfigError("age curve decreases at age " + std::to_string(a));
}

double AgeCurve::factor(int age) const noexcept {
  return factors_[std::clamp(age, 0, kMaxAge)];
}

AgeCurve AgeCurve::federal_default() {
  static const std::map<int, double> kDefault = {
      {0, 0.765},  {15, 0.833}, {16, 0.859}, {17, 0.885}, {18, 0.913}, {19, 0.941},
      {20, 0.970}, {21, 1.000}, {24, 1.000}, {25, 1.004}, {26, 1.024}, {27, 1.048},
      {28, 1.087}, {29, 1.119}, {30, 1.135}, {31, 1.159}, {32, 1.183}, {33, 1.198},
      {34, 1.214}, {35, 1.222}, {36, 1.230}, {37, 1.238}, {38, 1.246}, {39, 1.262},
      {40, 1.278}, {41, 1.302}, {42, 1.325}, {43, 1.357}, {44, 1.397}, {45, 1.444},
      {46, 1.500}, {47, 1.563}, {48, 1.635}, {49, 1.706}, {50, 1.786}, {51, 1.865},
      {52, 1.952}, {53, 2.040}, {54, 2.135}, {55, 2.230}, {56, 2.333}, {57, 2.437},
      {58, 2.548}, {59, 2.603}, {60, 2.714}, {61, 2.810}, {62, 2.873}, {63, 2.952},
      {64, 3.000}};
  return AgeCurve(kDefault);
}

// ------------------------------------------------------- StateSupplementRule

bool StateSupplementRule::applies_in(int year) const noexcept {
  return std::find(applicable_years.begin(), applicable_years.end(), year) != applicable_years.end();
}

bool StateSupplementRule::covers_income(double fpl) const noexcept {
  if (fpl_min && fpl < *fpl_min) return false;
  if (fpl_max && fpl > *fpl_max) return false;
  return true;
}

double StateSupplementRule::amount_at_age(int age) const noexcept {
  if (age < full_age_lo || age >= phaseout_end_age) return 0.0;
  if (age <= full_age_hi) return base_amount;
  return std::max(0.0, base_amount - phaseout_step * double(age - full_age_hi));
}

// -------------------------------------------------------- PovertyGuidelines

PovertyGuidelines::PovertyGuidelines(std::vector<Entry> entries) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(),
            [](const Entry& a, const Entry& b) { return a.coverage_year < b.coverage_year; });
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!(entries_[i].first_person > 0.0) || entries_[i].each_additional < 0.0)
      throw ConfigError("poverty guideline amounts must be positive");
    if (i > 0 && entries_[i].coverage_year == entries_[i - 1].coverage_year)
      throw ConfigError("duplicate poverty guideline year " + std::to_string(entries_[i].coverage_year));
  }
}

bool PovertyGuidelines::has_year(int coverage_year) const noexcept {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return e.coverage_year == coverage_year; });
}

double PovertyGuidelines::annual(int coverage_year, int household_size) const {
  if (household_size < 1) throw DataError("household size must be at least 1");
  for (const auto& e : entries_)
    if (e.coverage_year == coverage_year)
      return e.first_person + e.each_additional * double(household_size - 1);
  throw DataError("no poverty guideline for coverage year " + std::to_string(coverage_year));
}

// ---------------------------------------------------------------- operations

const Regime& RegimeBook::find(const std::string& name) const {
  for (const auto& r : regimes)
    if (r.name == name) return r;
  throw ConfigError("unknown regime '" + name + "'");
}

double expected_contribution_pct(const Regime& regime, double fpl) {
  if (!(fpl > 0.0)) throw DataError("income must be positive (%FPL)");
  return regime.ecp_schedule.evaluate(fpl);
}

bool ptc_eligible(const Regime& regime, double fpl) {
  if (fpl < regime.eligibility_floor) return false;
  return !regime.eligibility_cap || fpl <= *regime.eligibility_cap;
}

double state_ecp_reduction(const StateSupplementRule& rule, int age, int year) {
  if (!rule.applies_in(year)) return 0.0;
  return rule.amount_at_age(age);
}

// ---------------------------------------------------------------------- JSON

namespace {

template <typename T>
T required(const ordered_json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + ": bad field '" + key + "': " + e.what());
  }
}

std::optional<double> optional_number(const ordered_json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

StateSupplementRule rule_from_json(const ordered_json& j, const std::string& where) {
  StateSupplementRule r;
  r.name = required<std::string>(j, "name", where);
  const auto kind = required<std::string>(j, "kind", where);
  if (kind == "ecp-reduction") r.kind = SupplementKind::ecp_reduction;
  else if (kind == "fixed-dollar") r.kind = SupplementKind::fixed_dollar;
  else throw ConfigError(where + ": unknown rule kind '" + kind + "'");
  r.base_amount = required<double>(j, "base_amount", where);
  r.full_age_lo = required<int>(j, "full_age_lo", where);
  r.full_age_hi = required<int>(j, "full_age_hi", where);
  r.phaseout_step = required<double>(j, "phaseout_step", where);
  r.phaseout_end_age = required<int>(j, "phaseout_end_age", where);
  r.applicable_years = required<std::vector<int>>(j, "applicable_years", where);
  r.fpl_min = optional_number(j, "fpl_min");
  r.fpl_max = optional_number(j, "fpl_max");
  if (r.base_amount < 0.0 || r.phaseout_step < 0.0)
    throw ConfigError(where + ": rule amounts must be non-negative");
  if (r.full_age_hi < r.full_age_lo || r.phaseout_end_age <= r.full_age_hi)
    throw ConfigError(where + ": rule ages must satisfy lo <= hi < phaseout_end_age");
  return r;
}

ordered_json rule_to_json(const StateSupplementRule& r) {
  ordered_json j;
  j["name"] = r.name;
  j["kind"] = r.kind == SupplementKind::ecp_reduction ? "ecp-reduction" : "fixed-dollar";
  j["base_amount"] = r.base_amount;
  j["full_age_lo"] = r.full_age_lo;
  j["full_age_hi"] = r.full_age_hi;
  j["phaseout_step"] = r.phaseout_step;
  j["phaseout_end_age"] = r.phaseout_end_age;
  j["applicable_years"] = r.applicable_years;
  if (r.fpl_min) j["fpl_min"] = *r.fpl_min;
  if (r.fpl_max) j["fpl_max"] = *r.fpl_max;
  return j;
}

}  // namespace

namespace {

Regime regime_from_json_impl(const ordered_json& j) {
  Regime r;
  r.name = required<std::string>(j, "name", "regime");
  const std::string where = "regime '" + r.name + "'";

  std::vector<EcpBreakpoint> points;
  for (const auto& p : required<ordered_json>(j, "ecp_schedule", where)) {
    if (!p.is_array() || p.size() != 2) throw ConfigError(where + ": ECP breakpoints are [fpl, percent] pairs");
    points.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  r.ecp_schedule = EcpSchedule(std::move(points));

  r.eligibility_floor = required<double>(j, "eligibility_floor", where);
  r.eligibility_cap = optional_number(j, "eligibility_cap");
  if (r.eligibility_cap && !(r.eligibility_floor < *r.eligibility_cap))
    throw ConfigError(where + ": eligibility_floor must be below eligibility_cap");

  std::map<int, double> anchors;
  for (const auto& p : required<ordered_json>(j, "age_curve", where)) {
    if (!p.is_array() || p.size() != 2) throw ConfigError(where + ": age curve entries are [age, factor] pairs");
    if (!anchors.emplace(p[0].get<int>(), p[1].get<double>()).second)
      throw ConfigError(where + ": duplicate age in age curve");
  }
  r.age_curve = AgeCurve(std::move(anchors));

  if (j.contains("state_rules"))
    for (const auto& rule : j.at("state_rules")) r.state_rules.push_back(rule_from_json(rule, where));
  return r;
}

}  // namespace

Regime regime_from_json(const ordered_json& j) {
  try {
    return regime_from_json_impl(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("regime: ") + e.what());
  }
}

ordered_json regime_to_json(const Regime& r) {
  ordered_json j;
  j["name"] = r.name;
  ordered_json ecp = ordered_json::array();
  for (const auto& p : r.ecp_schedule.breakpoints()) ecp.push_back({p.fpl, p.percent});
  j["ecp_schedule"] = std::move(ecp);
  j["eligibility_floor"] = r.eligibility_floor;
  j["eligibility_cap"] = r.eligibility_cap ? ordered_json(*r.eligibility_cap) : ordered_json(nullptr);
  ordered_json curve = ordered_json::array();
  for (const auto& [age, f] : r.age_curve.anchors()) curve.push_back({age, f});
  j["age_curve"] = std::move(curve);
  ordered_json rules = ordered_json::array();
  for (const auto& rule : r.state_rules) rules.push_back(rule_to_json(rule));
  j["state_rules"] = std::move(rules);
  return j;
}

RegimeBook regime_book_from_json(const ordered_json& j) try {
  const int version = required<int>(j, "schema_version", "regime file");
  if (version != kRegimeSchemaVersion)
    throw ConfigError("unsupported regime schema_version " + std::to_string(version));
  RegimeBook book;
  std::vector<PovertyGuidelines::Entry> entries;
  for (const auto& e : required<ordered_json>(j, "poverty_guidelines", "regime file"))
    entries.push_back({required<int>(e, "coverage_year", "poverty guideline"),
                       required<double>(e, "first_person", "poverty guideline"),
                       required<double>(e, "each_additional", "poverty guideline")});
  book.guidelines = PovertyGuidelines(std::move(entries));
  for (const auto& r : required<ordered_json>(j, "regimes", "regime file")) {
    book.regimes.push_back(regime_from_json(r));
    for (std::size_t i = 0; i + 1 < book.regimes.size(); ++i)
      if (book.regimes[i].name == book.regimes.back().name)
        throw ConfigError("duplicate regime name '" + book.regimes.back().name + "'");
  }
  return book;
} catch (const nlohmann::json::exception& e) {
  throw ConfigError(std::string("regime file: ") + e.what());
}

ordered_json regime_book_to_json(const RegimeBook& book) {
  ordered_json j;
  j["schema_version"] = kRegimeSchemaVersion;
  ordered_json pg = ordered_json::array();
  for (const auto& e : book.guidelines.entries())
    pg.push_back({{"coverage_year", e.coverage_year},
                  {"first_person", e.first_person},
                  {"each_additional", e.each_additional}});
  j["poverty_guidelines"] = std::move(pg);
  ordered_json regimes = ordered_json::array();
  for (const auto& r : book.regimes) regimes.push_back(regime_to_json(r));
  j["regimes"] = std::move(regimes);
  return j;
}

RegimeBook load_regime_book(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open regime file " + path.string());
  try {
    return regime_book_from_json(ordered_json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("regime file " + path.string() + ": " + e.what());
  }
}

}  // namespace subsim
