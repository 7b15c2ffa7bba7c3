#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "subsim/error.hpp"
#include "subsim/population.hpp"

using namespace subsim;

namespace {

PoolSpec pool(double im, double isd, double am, double asd, double f, Family age_family = Family::beta) {
  return {{Family::truncated_normal, im, isd}, {age_family, am, asd}, f};
}

PopulationSpec one_year(std::int64_t enrollees, std::int64_t sample = 0, std::int64_t population = 0) {
  PopulationSpec s;
  s.seed = 99;
  s.enrollee_pool = pool(227.7, 66.1, 43.2, 13.9, 0.57);
  s.potential_pool = pool(244.6, 72.1, 38.7, 11.6, 0.383);
  s.years = {{2024, enrollees, population, sample, std::nullopt, std::nullopt, std::nullopt}};
  return s;
}

struct Moments {
  double mean = 0, sd = 0;
};

template <typename F>
Moments weighted_moments(const std::vector<Person>& ps, Source src, F value) {
  double sw = 0, sx = 0;
  for (const auto& p : ps)
    if (p.source == src) {
      sw += p.weight;
      sx += p.weight * value(p);
    }
  const double m = sx / sw;
  double ss = 0;
  for (const auto& p : ps)
    if (p.source == src) ss += p.weight * (value(p) - m) * (value(p) - m);
  return {m, std::sqrt(ss / sw)};
}

std::string to_csv(const std::vector<Person>& ps) {
  std::ostringstream os;
  write_persons_csv(os, ps);
  return os.str();
}

}  // namespace

TEST_CASE("marginal fitting reproduces target moments") {
  for (const Marginal m : {Marginal{Family::truncated_normal, 227.7, 66.1}, Marginal{Family::beta, 227.7, 66.1},
                           Marginal{Family::beta, 43.2, 13.9}, Marginal{Family::truncated_normal, 38.7, 11.6}}) {
    const double lo = m.mean > 100 ? kFplMin : kAgeMin, hi = m.mean > 100 ? kFplMax : kAgeMax;
    const auto f = fit_marginal(m, lo, hi);
    CHECK(f.mean() == doctest::Approx(m.mean).epsilon(1e-6));
    CHECK(f.sd() == doctest::Approx(m.sd).epsilon(1e-6));
    for (double u : {1e-9, 0.25, 0.5, 0.75, 1 - 1e-9}) {
      CHECK(f.quantile(u) >= lo);
      CHECK(f.quantile(u) <= hi);
    }
  }
}

TEST_CASE("infeasible marginals are rejected") {
  CHECK_THROWS_AS(fit_marginal({Family::truncated_normal, 450, 10}, kFplMin, kFplMax), ConfigError);
  CHECK_THROWS_AS(fit_marginal({Family::beta, 100, 10}, kFplMin, kFplMax), ConfigError);
  // A truncated normal on [18, 64] cannot be wider than the uniform (sd 13.28).
  CHECK_THROWS_AS(fit_marginal({Family::truncated_normal, 43.2, 13.9}, kAgeMin, kAgeMax), ConfigError);
  CHECK_THROWS_AS(fit_marginal({Family::beta, 41, 23.1}, kAgeMin, kAgeMax), ConfigError);
  auto s = one_year(10);
  s.hiu_size_shares = {0.5, 0.4};
  CHECK_THROWS_AS(generate(s), ConfigError);
  s = one_year(-1);
  CHECK_THROWS_AS(generate(s), ConfigError);
}

TEST_CASE("empty spec gives an empty population") {
  const auto pop = generate(one_year(0));
  CHECK(pop.persons.empty());
}

TEST_CASE("generation is deterministic in the seed") {
  const auto a = generate(one_year(5000, 300, 10000));
  const auto b = generate(one_year(5000, 300, 10000));
  CHECK(to_csv(a.persons) == to_csv(b.persons));
  auto s = one_year(5000, 300, 10000);
  s.seed = 100;
  CHECK(to_csv(generate(s).persons) != to_csv(a.persons));
}

TEST_CASE("sampled enrollee moments match the population spec") {
  const auto pop = generate(one_year(100000));
  const auto inc = weighted_moments(pop.persons, Source::enrollee, [](const Person& p) { return p.fpl; });
  const auto age = weighted_moments(pop.persons, Source::enrollee, [](const Person& p) { return double(p.age); });
  const auto fem = weighted_moments(pop.persons, Source::enrollee, [](const Person& p) { return p.female ? 1.0 : 0.0; });
  CHECK(inc.mean >= 223.1);
  CHECK(inc.mean <= 232.3);
  CHECK(std::abs(inc.mean / 227.7 - 1) < 0.02);
  CHECK(std::abs(inc.sd / 66.1 - 1) < 0.02);
  CHECK(std::abs(age.mean / 43.2 - 1) < 0.02);
  CHECK(std::abs(age.sd / 13.9 - 1) < 0.02);
  CHECK(std::abs(fem.mean - 0.57) < 0.01);
  CHECK(pop.persons.size() == 100000);
}

TEST_CASE("potential pool weights sum to the population and match weighted moments") {
  const auto pop = generate(one_year(0, 60000, 147700));
  double sw = 0;
  for (const auto& p : pop.persons) sw += p.weight;
  CHECK(sw == doctest::Approx(147700).epsilon(1e-9));
  const auto inc = weighted_moments(pop.persons, Source::potential, [](const Person& p) { return p.fpl; });
  const auto age = weighted_moments(pop.persons, Source::potential, [](const Person& p) { return double(p.age); });
  CHECK(std::abs(inc.mean / 244.6 - 1) < 0.02);
  CHECK(std::abs(inc.sd / 72.1 - 1) < 0.02);
  CHECK(std::abs(age.mean / 38.7 - 1) < 0.02);
  CHECK(std::abs(age.sd / 11.6 - 1) < 0.02);
  for (const auto& p : pop.persons) CHECK_FALSE(p.insured);
}

TEST_CASE("draws stay in range and HIUs are coherent") {
  auto s = one_year(20000, 2000, 5000);
  s.hiu_size_shares = {0.4, 0.3, 0.2, 0.1};
  const auto pop = generate(s);
  std::map<std::int64_t, std::vector<const Person*>> hius;
  std::set<std::int64_t> ids;
  for (const auto& p : pop.persons) {
    REQUIRE(p.fpl >= kFplMin);
    REQUIRE(p.fpl <= kFplMax);
    REQUIRE(p.age >= kAgeMin);
    REQUIRE(p.age <= kAgeMax);
    if (p.source == Source::enrollee) REQUIRE(p.weight == 1.0);
    REQUIRE(ids.insert(p.person_id).second);
    hius[p.hiu_id].push_back(&p);
  }
  double sxy = 0, sxx = 0, n = 0, mean = 0;
  for (const auto& p : pop.persons) mean += p.age;
  mean /= double(pop.persons.size());
  for (const auto& [id, members] : hius) {
    REQUIRE(members.size() >= 1);
    REQUIRE(members.size() <= 4);
    for (const auto* m : members) {
      CHECK(m->hiu_size == int(members.size()));
      CHECK(m->fpl == members[0]->fpl);
      CHECK(m->rating_area == members[0]->rating_area);
      CHECK(m->weight == members[0]->weight);
    }
    if (members.size() >= 2) {
      sxy += (members[0]->age - mean) * (members[1]->age - mean);
      sxx += 0.5 * ((members[0]->age - mean) * (members[0]->age - mean) +
                    (members[1]->age - mean) * (members[1]->age - mean));
      n += 1;
    }
  }
  CHECK(sxy / sxx > 0.3);  // ages within an HIU are positively correlated
}

TEST_CASE("a year can reuse another year's survey records") {
  PopulationSpec s = one_year(100, 500, 1000);
  s.years.push_back({2025, 100, 2000, 0, 2024, std::nullopt, std::nullopt});
  const auto pop = generate(s);
  std::vector<Person> p24, p25;
  for (const auto& p : pop.persons)
    if (p.source == Source::potential) (p.year == 2024 ? p24 : p25).push_back(p);
  REQUIRE(p24.size() == p25.size());
  for (std::size_t i = 0; i < p24.size(); ++i) {
    CHECK(p24[i].fpl == p25[i].fpl);
    CHECK(p24[i].age == p25[i].age);
    CHECK(p24[i].hiu_id == p25[i].hiu_id);
    CHECK(p24[i].weight * 2 == doctest::Approx(p25[i].weight));
    CHECK(p24[i].person_id != p25[i].person_id);
  }
  s.years[1].potential_copy_of = 2030;
  CHECK_THROWS_AS(generate(s), ConfigError);
}

TEST_CASE("plans: at least two silver per cell, positive premiums, unique ids") {
  auto s = one_year(10);
  s.rating_areas = 3;
  const auto pop = generate(s);
  std::map<std::pair<int, int>, int> silver;
  std::set<std::string> ids;
  for (const auto& p : pop.plans) {
    CHECK(p.base_premium > 0);
    CHECK(ids.insert(p.plan_id).second);
    if (p.metal == Metal::silver) ++silver[{p.rating_area, p.year}];
  }
  CHECK(silver.size() == 3);
  for (const auto& [cell, n] : silver) CHECK(n >= 2);
}

TEST_CASE("population spec JSON round-trips") {
  const auto s = load_population_spec(SUBSIM_SOURCE_DIR "/config/population.json");
  const auto j = population_spec_to_json(s);
  CHECK(population_spec_to_json(population_spec_from_json(j)).dump() == j.dump());
  auto bad = j;
  bad["years"][0]["enrollees"] = "many";
  CHECK_THROWS_AS(population_spec_from_json(bad), ConfigError);
}

// ------------------------------------------------------------------- ingest

TEST_CASE("ingest: well-formed persons") {
  std::istringstream in(
      "person_id,hiu_id,year,age,female,fpl,rating_area,weight,insured,source\n"
      "1,10,2024,30,1,150.5,1,1,1,enrollee\n"
      "2,10,2024,28,0,150.5,1,1,1,enrollee\n"
      "3,11,2024,55,0,310,2,123.4,0,potential\n");
  const auto r = read_persons_csv(in);
  REQUIRE(r.rejects.empty());
  REQUIRE(r.records.size() == 3);
  CHECK(r.records[0].hiu_size == 2);
  CHECK(r.records[2].hiu_size == 1);
  CHECK(r.records[2].weight == 123.4);
  CHECK(r.records[2].source == Source::potential);
}

TEST_CASE("ingest: out-of-range rows are rejected with their row index") {
  std::istringstream in(
      "person_id,hiu_id,year,age,female,fpl,rating_area,weight,insured,source\n"
      "1,10,2024,30,1,150,1,1,1,enrollee\n"
      "2,11,2024,30,1,500,1,1,1,enrollee\n"
      "3,12,2024,70,1,200,1,1,1,enrollee\n");
  const auto r = read_persons_csv(in);
  CHECK(r.records.size() == 1);
  REQUIRE(r.rejects.size() == 2);
  CHECK(r.rejects[0].row == 2);
  CHECK(r.rejects[0].reason.find("fpl") != std::string::npos);
  CHECK(r.rejects[1].row == 3);
}

TEST_CASE("ingest: duplicate ids and missing columns") {
  std::istringstream dup(
      "person_id,hiu_id,year,age,female,fpl,rating_area,weight,insured,source\n"
      "7,10,2024,30,1,150,1,1,1,enrollee\n"
      "7,11,2024,30,1,150,1,1,1,enrollee\n");
  const auto r = read_persons_csv(dup);
  REQUIRE(r.rejects.size() == 1);
  CHECK(r.rejects[0].reason.find("7") != std::string::npos);

  std::istringstream missing("person_id,hiu_id,year\n1,1,2024\n");
  try {
    read_persons_csv(missing);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("fpl") != std::string::npos);
  }
}

TEST_CASE("ingest: strict file variants and round trip through the writer") {
  auto s = one_year(50, 20, 100);
  const auto pop = generate(s);
  const std::string dir = std::string(SUBSIM_BINARY_DIR) + "/ingest_tmp";
  std::filesystem::create_directories(dir);
  {
    std::ofstream p(dir + "/persons.csv"), q(dir + "/plans.csv");
    p << "# comment lines are skipped\n";
    write_persons_csv(p, pop.persons);
    write_plans_csv(q, pop.plans);
  }
  const auto persons = ingest_persons(dir + "/persons.csv");
  const auto plans = ingest_plans(dir + "/plans.csv");
  CHECK(to_csv(persons) == to_csv(pop.persons));
  REQUIRE(plans.size() == pop.plans.size());
  CHECK(plans[0].plan_id == pop.plans[0].plan_id);
  {
    std::ofstream p(dir + "/bad.csv");
    p << "person_id,hiu_id,year,age,female,fpl,rating_area,weight,insured,source\n1,1,2024,30,1,500,1,1,1,enrollee\n";
  }
  CHECK_THROWS_AS(ingest_persons(dir + "/bad.csv"), DataError);
}
