#include "subsim/population.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>

#include "subsim/error.hpp"
#include "subsim/seed.hpp"
#include "subsim/table_io.hpp"

namespace subsim {

using nlohmann::ordered_json;

const char* to_string(Metal m) noexcept {
  switch (m) {
    case Metal::bronze: return "bronze";
    case Metal::silver: return "silver";
    case Metal::gold: return "gold";
    case Metal::platinum: return "platinum";
  }
  return "?";
}

const char* to_string(Source s) noexcept { return s == Source::enrollee ? "enrollee" : "potential"; }

// ----------------------------------------------------------------- marginals

namespace {

const boost::math::normal_distribution<double> kStdNormal(0.0, 1.0);

double phi(double x) { return boost::math::pdf(kStdNormal, x); }
double Phi(double x) { return boost::math::cdf(kStdNormal, x); }

struct TruncMoments {
  double mean, sd;
};

TruncMoments truncated_moments(double mu, double sigma, double lo, double hi) {
  const double a = (lo - mu) / sigma, b = (hi - mu) / sigma;
  const double z = Phi(b) - Phi(a);
  const double pa = phi(a), pb = phi(b);
  const double r = (pa - pb) / z;
  const double var = sigma * sigma * (1.0 + (a * pa - b * pb) / z - r * r);
  return {mu + sigma * r, std::sqrt(std::max(var, 0.0))};
}

}  // namespace

FittedMarginal fit_marginal(const Marginal& m, double lo, double hi) {
  if (!(m.mean > lo && m.mean < hi))
    throw ConfigError("target mean " + std::to_string(m.mean) + " outside (" + std::to_string(lo) + ", " +
                      std::to_string(hi) + ")");
  if (!(m.sd > 0.0)) throw ConfigError("target sd must be positive");

  if (m.family == Family::beta) {
    const double width = hi - lo;
    const double mu = (m.mean - lo) / width;
    const double var = (m.sd / width) * (m.sd / width);
    if (!(var < mu * (1.0 - mu)))
      throw ConfigError("target sd " + std::to_string(m.sd) + " too large for a bounded variable with mean " +
                        std::to_string(m.mean));
    const double common = mu * (1.0 - mu) / var - 1.0;
    return {Family::beta, lo, hi, mu * common, (1.0 - mu) * common};
  }

  // Parent normal whose truncation to [lo, hi] has the target moments.
  // Fixed-point on (mu, log sigma); the map is contractive away from the
  // uniform limit, which is exactly where the target becomes infeasible.
  const double uniform_sd = (hi - lo) / std::sqrt(12.0);
  if (!(m.sd < uniform_sd))
    throw ConfigError("target sd " + std::to_string(m.sd) + " not reachable by a truncated normal on [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
  double mu = m.mean, sigma = m.sd;
  for (int it = 0; it < 20000; ++it) {
    const auto t = truncated_moments(mu, sigma, lo, hi);
    const double em = m.mean - t.mean, es = m.sd - t.sd;
    if (std::abs(em) < 1e-10 * (hi - lo) && std::abs(es) < 1e-10 * (hi - lo))
      return {Family::truncated_normal, lo, hi, mu, sigma};
    mu += em;
    sigma *= std::pow(m.sd / t.sd, 1.5);
    if (!(sigma < 1e3 * (hi - lo)) || !std::isfinite(mu)) break;
  }
  throw ConfigError("no truncated normal on [" + std::to_string(lo) + ", " + std::to_string(hi) +
                    "] has mean " + std::to_string(m.mean) + " and sd " + std::to_string(m.sd));
}

double FittedMarginal::quantile(double u) const {
  u = std::clamp(u, 1e-15, 1.0 - 1e-15);
  if (family == Family::beta) {
    const boost::math::beta_distribution<double> dist(p1, p2);
    return lo + (hi - lo) * boost::math::quantile(dist, u);
  }
  const double fa = Phi((lo - p1) / p2), fb = Phi((hi - p1) / p2);
  const double x = p1 + p2 * boost::math::quantile(kStdNormal, std::clamp(fa + u * (fb - fa), 1e-300, 1.0 - 1e-16));
  return std::clamp(x, lo, hi);
}

double FittedMarginal::mean() const {
  if (family == Family::beta) return lo + (hi - lo) * p1 / (p1 + p2);
  return truncated_moments(p1, p2, lo, hi).mean;
}

double FittedMarginal::sd() const {
  if (family == Family::beta) {
    const double s = p1 + p2;
    return (hi - lo) * std::sqrt(p1 * p2 / (s * s * (s + 1.0)));
  }
  return truncated_moments(p1, p2, lo, hi).sd;
}

// --------------------------------------------------------------- validation

namespace {

void check_shares(const std::vector<double>& shares, const char* what) {
  double sum = 0.0;
  for (double s : shares) {
    if (!(s >= 0.0)) throw ConfigError(std::string(what) + " must be non-negative");
    sum += s;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError(std::string(what) + " must sum to 1");
}

void check_pool(const PoolSpec& p, const char* what) {
  fit_marginal(p.income, kFplMin, kFplMax);
  fit_marginal(p.age, kAgeMin, kAgeMax);
  if (!(p.female_share >= 0.0 && p.female_share <= 1.0))
    throw ConfigError(std::string(what) + ": female share outside [0, 1]");
}

}  // namespace

void validate(const PopulationSpec& spec) {
  check_pool(spec.enrollee_pool, "enrollee pool");
  check_pool(spec.potential_pool, "potential pool");
  if (spec.rating_areas < 1) throw ConfigError("need at least one rating area");
  if (!spec.rating_area_shares.empty()) {
    if (int(spec.rating_area_shares.size()) != spec.rating_areas)
      throw ConfigError("rating_area_shares must have one entry per rating area");
    check_shares(spec.rating_area_shares, "rating area shares");
  }
  if (spec.hiu_size_shares.empty() || spec.hiu_size_shares.size() > 4)
    throw ConfigError("hiu_size_shares must cover sizes 1..k with k <= 4");
  check_shares(spec.hiu_size_shares, "HIU size shares");
  if (!(spec.intra_hiu_age_correlation >= 0.0 && spec.intra_hiu_age_correlation <= 1.0))
    throw ConfigError("intra-HIU age correlation must lie in [0, 1]");
  if (!(spec.survey_weight_dispersion >= 0.0)) throw ConfigError("survey weight dispersion must be >= 0");
  std::set<int> seen;
  for (const auto& y : spec.years) {
    if (!seen.insert(y.year).second) throw ConfigError("duplicate year " + std::to_string(y.year));
    if (y.enrollees < 0 || y.potential_population < 0 || y.potential_sample < 0)
      throw ConfigError("population counts must be non-negative");
    if (y.potential_sample == 0 && y.potential_population > 0 && !y.potential_copy_of)
      throw ConfigError("year " + std::to_string(y.year) + ": potential population needs survey records");
    if (y.potential_copy_of && !seen.count(*y.potential_copy_of))
      throw ConfigError("year " + std::to_string(y.year) + " copies potential pool of a year not generated before it");
    if (y.enrollee_pool) check_pool(*y.enrollee_pool, "enrollee pool override");
    if (y.potential_pool) check_pool(*y.potential_pool, "potential pool override");
  }
  const auto& p = spec.plans;
  if (p.silver_plans < 2) throw ConfigError("need at least two silver plans per rating area-year");
  if (p.bronze_plans < 0 || p.gold_plans < 0 || p.platinum_plans < 0) throw ConfigError("plan counts must be >= 0");
  if (!(p.silver_level > 0.0) || !(p.area_sd >= 0.0) || !(p.silver_dispersion >= 0.0))
    throw ConfigError("plan premium parameters must be positive");
}

// --------------------------------------------------------------- generation

namespace {

// Discretised age: P(age <= k) evaluated at half-integers, so rounding a
// continuous draw and inverting this table give the same distribution.
class AgeTable {
 public:
  explicit AgeTable(const FittedMarginal& m) {
    const double denom = cdf(m, m.hi);
    for (int k = kAgeMin; k < kAgeMax; ++k) cum_.push_back(cdf(m, k + 0.5) / denom);
  }
  int draw(double u) const {
    auto it = std::lower_bound(cum_.begin(), cum_.end(), u);
    return kAgeMin + int(it - cum_.begin());
  }

 private:
  static double cdf(const FittedMarginal& m, double x) {
    if (m.family == Family::beta) {
      const boost::math::beta_distribution<double> d(m.p1, m.p2);
      return boost::math::cdf(d, (x - m.lo) / (m.hi - m.lo));
    }
    const double fa = Phi((m.lo - m.p1) / m.p2);
    return Phi((x - m.p1) / m.p2) - fa;
  }
  std::vector<double> cum_;
};

struct PoolDraws {
  FittedMarginal income;
  AgeTable age;
  double female_share;
  explicit PoolDraws(const PoolSpec& p)
      : income(fit_marginal(p.income, kFplMin, kFplMax)),
        age(fit_marginal(p.age, kAgeMin, kAgeMax)),
        female_share(p.female_share) {}
};

struct Counters {
  std::int64_t person = 1;
  std::int64_t hiu = 1;
};

// Appends `count` persons in whole HIUs (the last one truncated to fit).
// Returns the index of the first appended person.
std::size_t draw_pool(std::vector<Person>& out, std::int64_t count, int year, Source source, const PoolDraws& pool,
                      const PopulationSpec& spec, std::uint64_t seed, Counters& ids) {
  const std::size_t first = out.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> norm(0.0, 1.0);
  std::discrete_distribution<int> size_dist(spec.hiu_size_shares.begin(), spec.hiu_size_shares.end());
  std::vector<double> area_shares = spec.rating_area_shares;
  if (area_shares.empty()) area_shares.assign(spec.rating_areas, 1.0);
  std::discrete_distribution<int> area_dist(area_shares.begin(), area_shares.end());
  std::bernoulli_distribution female(pool.female_share);
  const double rho = spec.intra_hiu_age_correlation;
  const double rho_c = std::sqrt(1.0 - rho * rho);

  std::int64_t remaining = count;
  while (remaining > 0) {
    const int size = int(std::min<std::int64_t>(size_dist(rng) + 1, remaining));
    const std::int64_t hiu = ids.hiu++;
    const double fpl = std::round(pool.income.quantile(unif(rng)) * 100.0) / 100.0;
    const int area = area_dist(rng) + 1;
    const double z_common = norm(rng);
    double hh_weight = 1.0;
    if (source == Source::potential) hh_weight = std::exp(spec.survey_weight_dispersion * norm(rng));
    for (int m = 0; m < size; ++m) {
      Person p;
      p.person_id = ids.person++;
      p.hiu_id = hiu;
      p.hiu_size = size;
      p.year = year;
      p.fpl = std::clamp(fpl, kFplMin, kFplMax);
      p.rating_area = area;
      const double z = rho * z_common + rho_c * norm(rng);
      p.age = pool.age.draw(Phi(z));
      p.female = female(rng);
      p.weight = hh_weight;
      p.insured = source == Source::enrollee;
      p.source = source;
      out.push_back(p);
    }
    remaining -= size;
  }
  return first;
}

void rescale_weights(std::vector<Person>& persons, std::size_t first, double total) {
  double sum = 0.0;
  for (std::size_t i = first; i < persons.size(); ++i) sum += persons[i].weight;
  if (sum <= 0.0) return;
  for (std::size_t i = first; i < persons.size(); ++i) persons[i].weight *= total / sum;
}

std::vector<PlanOffering> draw_plans(const PopulationSpec& spec) {
  std::vector<PlanOffering> plans;
  const auto& ps = spec.plans;
  std::mt19937_64 rng(derive_seed(spec.seed, "plans"));
  std::normal_distribution<double> norm(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<double> area_level(spec.rating_areas);
  for (auto& l : area_level) l = ps.silver_level * std::exp(ps.area_sd * norm(rng));

  int first_year = spec.years.empty() ? 0 : spec.years.front().year;
  for (const auto& y : spec.years) first_year = std::min(first_year, y.year);

  auto add = [&](Metal metal, int area, int year, int k, double premium) {
    const char tag = to_string(metal)[0];
    plans.push_back({"P" + std::to_string(year) + "-" + std::to_string(area) + "-" + tag + std::to_string(k), metal,
                     area, year, std::round(premium * 100.0) / 100.0});
  };

  for (const auto& y : spec.years) {
    const double trend = std::pow(1.0 + ps.annual_trend, y.year - first_year);
    for (int a = 1; a <= spec.rating_areas; ++a) {
      const double level = area_level[a - 1] * trend;
      std::vector<double> silver(ps.silver_plans);
      for (auto& s : silver) s = level * (1.0 + ps.silver_dispersion * unif(rng));
      std::sort(silver.begin(), silver.end());
      for (int k = 0; k < ps.silver_plans; ++k) add(Metal::silver, a, y.year, k + 1, silver[k]);
      for (int k = 0; k < ps.bronze_plans; ++k)
        add(Metal::bronze, a, y.year, k + 1, level * ps.bronze_ratio * (1.0 + ps.silver_dispersion * unif(rng)));
      for (int k = 0; k < ps.gold_plans; ++k)
        add(Metal::gold, a, y.year, k + 1, level * ps.gold_ratio * (1.0 + ps.silver_dispersion * unif(rng)));
      for (int k = 0; k < ps.platinum_plans; ++k)
        add(Metal::platinum, a, y.year, k + 1, level * ps.platinum_ratio * (1.0 + ps.silver_dispersion * unif(rng)));
    }
  }
  return plans;
}

}  // namespace

Population generate(const PopulationSpec& spec) {
  validate(spec);
  Population pop;
  Counters ids;
  std::map<int, std::pair<std::size_t, std::size_t>> potential_range;  // year -> [first, last)

  for (const auto& y : spec.years) {
    const PoolDraws enrollees(y.enrollee_pool.value_or(spec.enrollee_pool));
    draw_pool(pop.persons, y.enrollees, y.year, Source::enrollee, enrollees, spec,
              derive_seed(spec.seed, "enrollee/" + std::to_string(y.year)), ids);

    const std::size_t first = pop.persons.size();
    if (y.potential_copy_of) {
      const auto [from, to] = potential_range.at(*y.potential_copy_of);
      for (std::size_t i = from; i < to; ++i) {
        Person p = pop.persons[i];
        p.person_id = ids.person++;
        p.year = y.year;
        pop.persons.push_back(p);
      }
    } else if (y.potential_sample > 0) {
      const PoolDraws potential(y.potential_pool.value_or(spec.potential_pool));
      draw_pool(pop.persons, y.potential_sample, y.year, Source::potential, potential, spec,
                derive_seed(spec.seed, "potential/" + std::to_string(y.year)), ids);
    }
    rescale_weights(pop.persons, first, double(y.potential_population));
    potential_range[y.year] = {first, pop.persons.size()};
  }
  pop.plans = draw_plans(spec);
  return pop;
}

// --------------------------------------------------------------------- JSON

namespace {

template <typename T>
T get_or(const ordered_json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

Marginal marginal_from_json(const ordered_json& j) {
  Marginal m;
  const auto fam = get_or<std::string>(j, "family", "truncated_normal");
  if (fam == "truncated_normal") m.family = Family::truncated_normal;
  else if (fam == "beta") m.family = Family::beta;
  else throw ConfigError("unknown distribution family '" + fam + "'");
  m.mean = j.at("mean").get<double>();
  m.sd = j.at("sd").get<double>();
  return m;
}

ordered_json marginal_to_json(const Marginal& m) {
  return {{"family", m.family == Family::beta ? "beta" : "truncated_normal"}, {"mean", m.mean}, {"sd", m.sd}};
}

PoolSpec pool_from_json(const ordered_json& j) {
  return {marginal_from_json(j.at("income")), marginal_from_json(j.at("age")), j.at("female_share").get<double>()};
}

ordered_json pool_to_json(const PoolSpec& p) {
  return {{"income", marginal_to_json(p.income)}, {"age", marginal_to_json(p.age)}, {"female_share", p.female_share}};
}

}  // namespace

PopulationSpec population_spec_from_json(const ordered_json& j) {
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kPopulationSchemaVersion)
      throw ConfigError("unsupported population schema_version " + std::to_string(version));
    PopulationSpec s;
    s.seed = get_or<std::uint64_t>(j, "seed", 1);
    s.enrollee_pool = pool_from_json(j.at("pools").at("enrollee"));
    s.potential_pool = pool_from_json(j.at("pools").at("potential"));
    for (const auto& y : j.at("years")) {
      YearSpec ys;
      ys.year = y.at("year").get<int>();
      ys.enrollees = get_or<std::int64_t>(y, "enrollees", 0);
      ys.potential_population = get_or<std::int64_t>(y, "potential_population", 0);
      ys.potential_sample = get_or<std::int64_t>(y, "potential_sample", 0);
      if (y.contains("potential_copy_of")) ys.potential_copy_of = y.at("potential_copy_of").get<int>();
      if (y.contains("enrollee_pool")) ys.enrollee_pool = pool_from_json(y.at("enrollee_pool"));
      if (y.contains("potential_pool")) ys.potential_pool = pool_from_json(y.at("potential_pool"));
      s.years.push_back(std::move(ys));
    }
    s.rating_areas = get_or(j, "rating_areas", s.rating_areas);
    s.rating_area_shares = get_or(j, "rating_area_shares", s.rating_area_shares);
    s.hiu_size_shares = get_or(j, "hiu_size_shares", s.hiu_size_shares);
    s.intra_hiu_age_correlation = get_or(j, "intra_hiu_age_correlation", s.intra_hiu_age_correlation);
    s.survey_weight_dispersion = get_or(j, "survey_weight_dispersion", s.survey_weight_dispersion);
    if (j.contains("plans")) {
      const auto& p = j.at("plans");
      auto& ps = s.plans;
      ps.silver_plans = get_or(p, "silver_plans", ps.silver_plans);
      ps.bronze_plans = get_or(p, "bronze_plans", ps.bronze_plans);
      ps.gold_plans = get_or(p, "gold_plans", ps.gold_plans);
      ps.platinum_plans = get_or(p, "platinum_plans", ps.platinum_plans);
      ps.silver_level = get_or(p, "silver_level", ps.silver_level);
      ps.area_sd = get_or(p, "area_sd", ps.area_sd);
      ps.silver_dispersion = get_or(p, "silver_dispersion", ps.silver_dispersion);
      ps.annual_trend = get_or(p, "annual_trend", ps.annual_trend);
      ps.bronze_ratio = get_or(p, "bronze_ratio", ps.bronze_ratio);
      ps.gold_ratio = get_or(p, "gold_ratio", ps.gold_ratio);
      ps.platinum_ratio = get_or(p, "platinum_ratio", ps.platinum_ratio);
    }
    validate(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("population spec: ") + e.what());
  }
}

ordered_json population_spec_to_json(const PopulationSpec& s) {
  ordered_json j;
  j["schema_version"] = kPopulationSchemaVersion;
  j["seed"] = s.seed;
  j["pools"] = {{"enrollee", pool_to_json(s.enrollee_pool)}, {"potential", pool_to_json(s.potential_pool)}};
  auto years = ordered_json::array();
  for (const auto& y : s.years) {
    ordered_json o{{"year", y.year},
                   {"enrollees", y.enrollees},
                   {"potential_population", y.potential_population},
                   {"potential_sample", y.potential_sample}};
    if (y.potential_copy_of) o["potential_copy_of"] = *y.potential_copy_of;
    if (y.enrollee_pool) o["enrollee_pool"] = pool_to_json(*y.enrollee_pool);
    if (y.potential_pool) o["potential_pool"] = pool_to_json(*y.potential_pool);
    years.push_back(std::move(o));
  }
  j["years"] = std::move(years);
  j["rating_areas"] = s.rating_areas;
  j["rating_area_shares"] = s.rating_area_shares;
  j["hiu_size_shares"] = s.hiu_size_shares;
  j["intra_hiu_age_correlation"] = s.intra_hiu_age_correlation;
  j["survey_weight_dispersion"] = s.survey_weight_dispersion;
  const auto& p = s.plans;
  j["plans"] = {{"silver_plans", p.silver_plans},     {"bronze_plans", p.bronze_plans},
                {"gold_plans", p.gold_plans},         {"platinum_plans", p.platinum_plans},
                {"silver_level", p.silver_level},     {"area_sd", p.area_sd},
                {"silver_dispersion", p.silver_dispersion}, {"annual_trend", p.annual_trend},
                {"bronze_ratio", p.bronze_ratio},     {"gold_ratio", p.gold_ratio},
                {"platinum_ratio", p.platinum_ratio}};
  return j;
}

PopulationSpec load_population_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open population spec " + path.string());
  try {
    return population_spec_from_json(ordered_json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("population spec " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- CSV ingest

namespace {

template <typename T>
bool parse_number(const std::string& s, T& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  if (*b == '+') ++b;
  auto res = std::from_chars(b, s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_bool(const std::string& s, bool& out) {
  if (s == "1" || s == "true") return out = true, true;
  if (s == "0" || s == "false") return out = false, true;
  return false;
}

const std::vector<std::string> kPersonColumns = {"person_id", "hiu_id", "year",   "age",     "female",
                                                 "fpl",       "rating_area", "weight", "insured", "source"};
const std::vector<std::string> kPlanColumns = {"plan_id", "metal", "rating_area", "year", "base_premium"};

std::string list_rejects(const std::vector<RowReject>& rejects) {
  std::string msg;
  for (const auto& r : rejects) msg += "\n  row " + std::to_string(r.row) + ": " + r.reason;
  return msg;
}

}  // namespace

IngestResult<Person> read_persons_csv(std::istream& in) {
  CsvReader csv(in);
  csv.require_columns(kPersonColumns);
  std::vector<std::size_t> col;
  for (const auto& c : kPersonColumns) col.push_back(csv.column(c));

  IngestResult<Person> result;
  std::map<std::int64_t, std::size_t> seen_ids;
  for (std::size_t r = 0; r < csv.size(); ++r) {
    const auto& cells = csv.row(r);
    const std::size_t row_no = r + 1;
    if (cells.size() != csv.header().size()) {
      result.rejects.push_back({row_no, "expected " + std::to_string(csv.header().size()) + " fields, got " +
                                            std::to_string(cells.size())});
      continue;
    }
    Person p;
    std::string source;
    bool ok = parse_number(cells[col[0]], p.person_id) && parse_number(cells[col[1]], p.hiu_id) &&
              parse_number(cells[col[2]], p.year) && parse_number(cells[col[3]], p.age) &&
              parse_bool(cells[col[4]], p.female) && parse_number(cells[col[5]], p.fpl) &&
              parse_number(cells[col[6]], p.rating_area) && parse_number(cells[col[7]], p.weight) &&
              parse_bool(cells[col[8]], p.insured);
    source = cells[col[9]];
    if (!ok) {
      result.rejects.push_back({row_no, "unparseable field"});
      continue;
    }
    if (source == "enrollee") p.source = Source::enrollee;
    else if (source == "potential") p.source = Source::potential;
    else {
      result.rejects.push_back({row_no, "unknown source '" + source + "'"});
      continue;
    }
    if (!(p.fpl >= kFplMin && p.fpl <= kFplMax)) {
      result.rejects.push_back({row_no, "fpl " + cells[col[5]] + " outside [138, 400]"});
      continue;
    }
    if (p.age < kAgeMin || p.age > kAgeMax) {
      result.rejects.push_back({row_no, "age " + cells[col[3]] + " outside [18, 64]"});
      continue;
    }
    if (!(p.weight >= 0.0) || !std::isfinite(p.weight)) {
      result.rejects.push_back({row_no, "negative or non-finite weight"});
      continue;
    }
    if (p.source == Source::enrollee && p.weight != 1.0) {
      result.rejects.push_back({row_no, "enrollee weight must be 1"});
      continue;
    }
    if (auto [it, fresh] = seen_ids.emplace(p.person_id, row_no); !fresh) {
      result.rejects.push_back({row_no, "duplicate person_id " + std::to_string(p.person_id) + " (first seen in row " +
                                            std::to_string(it->second) + ")"});
      continue;
    }
    result.records.push_back(p);
  }

  std::map<std::pair<std::int64_t, int>, int> sizes;
  for (const auto& p : result.records) ++sizes[{p.hiu_id, p.year}];
  for (auto& p : result.records) p.hiu_size = sizes[{p.hiu_id, p.year}];
  return result;
}

IngestResult<PlanOffering> read_plans_csv(std::istream& in) {
  CsvReader csv(in);
  csv.require_columns(kPlanColumns);
  std::vector<std::size_t> col;
  for (const auto& c : kPlanColumns) col.push_back(csv.column(c));

  IngestResult<PlanOffering> result;
  std::map<std::string, std::size_t> seen_ids;
  for (std::size_t r = 0; r < csv.size(); ++r) {
    const auto& cells = csv.row(r);
    const std::size_t row_no = r + 1;
    if (cells.size() != csv.header().size()) {
      result.rejects.push_back({row_no, "wrong field count"});
      continue;
    }
    PlanOffering p;
    p.plan_id = cells[col[0]];
    const std::string& metal = cells[col[1]];
    if (metal == "bronze") p.metal = Metal::bronze;
    else if (metal == "silver") p.metal = Metal::silver;
    else if (metal == "gold") p.metal = Metal::gold;
    else if (metal == "platinum") p.metal = Metal::platinum;
    else {
      result.rejects.push_back({row_no, "unknown metal '" + metal + "'"});
      continue;
    }
    if (p.plan_id.empty() || !parse_number(cells[col[2]], p.rating_area) || !parse_number(cells[col[3]], p.year) ||
        !parse_number(cells[col[4]], p.base_premium)) {
      result.rejects.push_back({row_no, "unparseable field"});
      continue;
    }
    if (!(p.base_premium > 0.0) || !std::isfinite(p.base_premium)) {
      result.rejects.push_back({row_no, "base_premium must be positive"});
      continue;
    }
    if (auto [it, fresh] = seen_ids.emplace(p.plan_id, row_no); !fresh) {
      result.rejects.push_back({row_no, "duplicate plan_id " + p.plan_id});
      continue;
    }
    result.records.push_back(std::move(p));
  }
  return result;
}

std::vector<Person> ingest_persons(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open persons file " + path.string());
  auto res = read_persons_csv(in);
  if (!res.rejects.empty())
    throw DataError(path.string() + ": " + std::to_string(res.rejects.size()) + " rejected rows" +
                    list_rejects(res.rejects));
  return std::move(res.records);
}

std::vector<PlanOffering> ingest_plans(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open plans file " + path.string());
  auto res = read_plans_csv(in);
  if (!res.rejects.empty())
    throw DataError(path.string() + ": " + std::to_string(res.rejects.size()) + " rejected rows" +
                    list_rejects(res.rejects));
  return std::move(res.records);
}

void write_persons_csv(std::ostream& out, const std::vector<Person>& persons) {
  for (std::size_t i = 0; i < kPersonColumns.size(); ++i) out << (i ? "," : "") << kPersonColumns[i];
  out << '\n';
  for (const auto& p : persons)
    out << p.person_id << ',' << p.hiu_id << ',' << p.year << ',' << p.age << ',' << (p.female ? 1 : 0) << ','
        << format_exact(p.fpl) << ',' << p.rating_area << ',' << format_exact(p.weight) << ','
        << (p.insured ? 1 : 0) << ',' << to_string(p.source) << '\n';
}

void write_plans_csv(std::ostream& out, const std::vector<PlanOffering>& plans) {
  for (std::size_t i = 0; i < kPlanColumns.size(); ++i) out << (i ? "," : "") << kPlanColumns[i];
  out << '\n';
  for (const auto& p : plans)
    out << p.plan_id << ',' << to_string(p.metal) << ',' << p.rating_area << ',' << p.year << ','
        << format_exact(p.base_premium) << '\n';
}

}  // namespace subsim
