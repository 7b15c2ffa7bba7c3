#include "subsim/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "subsim/error.hpp"
#include "subsim/seed.hpp"

namespace subsim {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

// ----------------------------------------------------------------- parsing

namespace {

std::string read_bytes(const fs::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(std::string("cannot open ") + what + " " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hex16(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

double parse_amount(std::string_view tok) {
  while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
  while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
  double scale = 1.0;
  if (!tok.empty()) {
    switch (tok.back()) {
      case 'k': case 'K': scale = 1e3; break;
      case 'm': case 'M': scale = 1e6; break;
      case 'b': case 'B': scale = 1e9; break;
      default: break;
    }
    if (scale != 1.0) tok.remove_suffix(1);
  }
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw ConfigError("cannot parse budget '" + std::string(tok) + "'");
  return v * scale;
}

void check_budgets(const std::vector<double>& b) {
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (!std::isfinite(b[i]) || b[i] < 0.0) throw ConfigError("budgets must be non-negative");
    if (i && b[i] < b[i - 1]) throw ConfigError("budgets must be ascending");
  }
}

IncomeBand band_from_json(const ordered_json& j) {
  IncomeBand b;
  b.lo = j.at("lo").get<double>();
  b.hi = j.at("hi").get<double>();
  b.closed_low = j.value("closed_low", b.lo <= kFplMin);
  if (!(b.hi > b.lo)) throw ConfigError("income band needs hi > lo");
  b.label = j.contains("label") ? j.at("label").get<std::string>()
                                : format_exact(b.lo) + "-" + format_exact(b.hi);
  return b;
}

ordered_json band_to_json(const IncomeBand& b) {
  return {{"label", b.label}, {"lo", b.lo}, {"hi", b.hi}, {"closed_low", b.closed_low}};
}

std::vector<IncomeBand> bands_from_json(const ordered_json& j) {
  std::vector<IncomeBand> out;
  for (const auto& b : j) out.push_back(band_from_json(b));
  return out;
}

std::vector<double> budgets_from_json(const ordered_json& j) {
  if (j.is_string()) return parse_budget_list(j.get<std::string>());
  if (j.is_object()) return budget_grid(j.at("step").get<double>(), j.at("last").get<double>());
  std::vector<double> out;
  for (const auto& v : j) out.push_back(v.is_string() ? parse_amount(v.get<std::string>()) : v.get<double>());
  return out;
}

}  // namespace

std::string ScenarioConfig::hash() const { return hex16(fnv1a(canonical)); }

std::vector<double> parse_budget_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto c1 = tok.find(':');
    if (c1 == std::string::npos) {
      out.push_back(parse_amount(tok));
      continue;
    }
    const auto c2 = tok.find(':', c1 + 1);
    if (c2 == std::string::npos) throw ConfigError("budget range '" + tok + "' must be start:stop:step");
    const double start = parse_amount(std::string_view(tok).substr(0, c1));
    const double stop = parse_amount(std::string_view(tok).substr(c1 + 1, c2 - c1 - 1));
    const double step = parse_amount(std::string_view(tok).substr(c2 + 1));
    if (!(step > 0.0) || stop < start) throw ConfigError("budget range '" + tok + "' is empty or has a bad step");
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long k = 0; k <= n; ++k) out.push_back(start + double(k) * step);
  }
  if (out.empty()) throw ConfigError("empty budget list");
  check_budgets(out);
  return out;
}

TableFormat parse_format(const std::string& text) {
  if (text == "csv") return TableFormat::csv;
  if (text == "json") return TableFormat::json;
  throw ConfigError("unknown format '" + text + "' (expected csv or json)");
}

ScenarioConfig scenario_from_json(const ordered_json& j, const fs::path& base_dir, const ScenarioOverrides& ov) {
  ScenarioConfig c;
  ordered_json canon;
  try {
    const int version = j.value("schema_version", kScenarioSchemaVersion);
    if (version != kScenarioSchemaVersion)
      throw ConfigError("unsupported scenario schema_version " + std::to_string(version));
    c.seed = j.value<std::uint64_t>("seed", 1);

    const auto& reg = j.at("regimes");
    c.regimes = reg.is_string() ? load_regime_book(resolve(base_dir, reg.get<std::string>()))
                                : regime_book_from_json(reg);
    canon["regimes"] = regime_book_to_json(c.regimes);
    c.actual_regime = j.value("actual_regime", c.actual_regime);
    c.counterfactual_regime = j.value("counterfactual_regime", c.counterfactual_regime);
    c.regimes.find(c.actual_regime);
    c.regimes.find(c.counterfactual_regime);
    canon["actual_regime"] = c.actual_regime;
    canon["counterfactual_regime"] = c.counterfactual_regime;

    const auto& pop = j.at("population");
    if (pop.is_string()) {
      c.population = load_population_spec(resolve(base_dir, pop.get<std::string>()));
    } else if (pop.contains("persons_csv")) {
      c.persons_csv = resolve(base_dir, pop.at("persons_csv").get<std::string>());
      c.plans_csv = resolve(base_dir, pop.at("plans_csv").get<std::string>());
      canon["population"] = {{"persons_fnv", hex16(fnv1a(read_bytes(*c.persons_csv, "persons file")))},
                             {"plans_fnv", hex16(fnv1a(read_bytes(*c.plans_csv, "plans file")))}};
    } else {
      c.population = population_spec_from_json(pop);
    }
    if (c.population) {
      validate(*c.population);
      auto spec = population_spec_to_json(*c.population);
      spec.erase("seed");
      canon["population"] = std::move(spec);
    }

    const auto est = j.value("estimation", ordered_json::object());
    c.estimation_years = est.value("years", std::vector<int>{});
    c.design.income_threshold = est.value("income_threshold", c.design.income_threshold);
    c.design.polynomial_fpl = est.value("polynomial_fpl", false);
    const std::string cov = est.value("covariance", std::string("cluster"));
    if (cov == "cluster") c.covariance = Covariance::cluster;
    else if (cov == "hc1") c.covariance = Covariance::hc1;
    else throw ConfigError("unknown covariance '" + cov + "' (expected cluster or hc1)");
    c.bootstrap_replicates = est.value("bootstrap_replicates", 0);
    if (c.bootstrap_replicates < 0 || c.bootstrap_replicates == 1)
      throw ConfigError("bootstrap_replicates must be 0 or at least 2");
    canon["estimation"] = {{"years", c.estimation_years},
                           {"income_threshold", c.design.income_threshold},
                           {"polynomial_fpl", c.design.polynomial_fpl},
                           {"covariance", cov},
                           {"bootstrap_replicates", c.bootstrap_replicates}};

    c.effect_bands = j.contains("effect_bands") ? bands_from_json(j.at("effect_bands")) : default_effect_bands();
    const auto proj = j.value("projection", ordered_json::object());
    c.projection_year = proj.value("year", c.projection_year);
    c.loss_bands = proj.contains("bands") ? bands_from_json(proj.at("bands")) : default_loss_bands();
    auto canon_bands = ordered_json::array();
    for (const auto& b : c.effect_bands) canon_bands.push_back(band_to_json(b));
    canon["effect_bands"] = std::move(canon_bands);
    canon_bands = ordered_json::array();
    for (const auto& b : c.loss_bands) canon_bands.push_back(band_to_json(b));
    canon["projection"] = {{"year", c.projection_year}, {"bands", std::move(canon_bands)}};

    const auto me = j.value("marginal_effects", ordered_json::object());
    const std::string source = me.value("source", std::string("fit"));
    if (source == "fit") {
      c.effect_source = EffectSource::fit;
    } else if (source == "bands") {
      c.effect_source = EffectSource::bands;
      if (me.contains("bands")) {
        for (const auto& b : me.at("bands")) c.effect_source_bands.push_back({band_from_json(b), b.at("me").get<double>()});
      } else {
        c.effect_source_bands = published_band_effects();
      }
    } else {
      throw ConfigError("unknown marginal_effects source '" + source + "' (expected fit or bands)");
    }
    auto canon_me = ordered_json::array();
    for (const auto& b : c.effect_source_bands) {
      auto o = band_to_json(b.band);
      o["me"] = b.marginal_effect;
      canon_me.push_back(std::move(o));
    }
    canon["marginal_effects"] = {{"source", source}, {"bands", std::move(canon_me)}};

    c.budgets = j.contains("budgets") ? budgets_from_json(j.at("budgets")) : budget_grid(10e6, 150e6);
    if (j.contains("allocation_budget")) c.allocation_budget = j.at("allocation_budget").get<double>();
    if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
    if (j.contains("format")) c.format = parse_format(j.at("format").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }

  if (ov.seed) c.seed = *ov.seed;
  if (ov.output_dir) c.output_dir = *ov.output_dir;
  if (ov.budgets) c.budgets = *ov.budgets;
  if (ov.format) c.format = *ov.format;
  check_budgets(c.budgets);
  if (c.budgets.empty()) throw ConfigError("at least one budget is required");
  if (c.allocation_budget && (!std::isfinite(*c.allocation_budget) || *c.allocation_budget < 0.0))
    throw ConfigError("allocation_budget must be non-negative");

  if (c.population) c.population->seed = derive_seed(c.seed, "population");
  canon["budgets"] = c.budgets;
  canon["allocation_budget"] = c.allocation_budget ? ordered_json(*c.allocation_budget) : ordered_json(nullptr);
  canon["format"] = c.format == TableFormat::csv ? "csv" : "json";
  c.canonical = canon.dump();
  return c;
}

ScenarioConfig load_scenario(const fs::path& path, const ScenarioOverrides& overrides) {
  const std::string text = read_bytes(path, "scenario");
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenario " + path.string() + ": " + e.what());
  }
  return scenario_from_json(j, path.parent_path(), overrides);
}

// ---------------------------------------------------------------- pipeline

Pipeline::Pipeline(ScenarioConfig config) : config_(std::move(config)) {}

const Population& Pipeline::population() {
  if (!population_) {
    if (config_.population) {
      population_ = generate(*config_.population);
    } else {
      population_ = Population{ingest_persons(*config_.persons_csv), ingest_plans(*config_.plans_csv)};
    }
  }
  return *population_;
}

const Regime& Pipeline::actual_regime() const { return config_.regimes.find(config_.actual_regime); }
const Regime& Pipeline::counterfactual_regime() const { return config_.regimes.find(config_.counterfactual_regime); }

const Market& Pipeline::market() {
  if (!market_) market_.emplace(population().plans);
  return *market_;
}

const std::vector<std::optional<SubsidyQuote>>& Pipeline::actual_quotes() {
  if (!actual_)
    actual_ = quote_population(population().persons, actual_regime(), market(), config_.regimes.guidelines);
  return *actual_;
}

const std::vector<std::optional<SubsidyQuote>>& Pipeline::counterfactual_quotes() {
  if (!counterfactual_)
    counterfactual_ =
        quote_population(population().persons, counterfactual_regime(), market(), config_.regimes.guidelines);
  return *counterfactual_;
}

const DesignMatrix& Pipeline::design() {
  if (!design_) {
    const auto& persons = population().persons;
    const auto& a = actual_quotes();
    const auto& b = counterfactual_quotes();
    const auto& years = config_.estimation_years;
    if (years.empty()) {
      design_ = build_design(persons, a, b, config_.design);
    } else {
      std::vector<Person> sub;
      std::vector<std::optional<SubsidyQuote>> qa, qb;
      for (std::size_t i = 0; i < persons.size(); ++i) {
        if (std::find(years.begin(), years.end(), persons[i].year) == years.end()) continue;
        sub.push_back(persons[i]);
        qa.push_back(a[i]);
        qb.push_back(b[i]);
      }
      design_ = build_design(sub, qa, qb, config_.design);
    }
  }
  return *design_;
}

const DemandFit& Pipeline::ols() {
  if (!ols_) ols_ = fit_ols(design(), config_.covariance);
  return *ols_;
}

const DemandFit& Pipeline::iv() {
  if (!iv_) iv_ = fit_2sls(design(), config_.covariance);
  return *iv_;
}

const std::vector<EffectsRow>& Pipeline::effects() {
  if (!effects_) {
    std::vector<EffectsRow> rows;
    for (const auto& b : config_.effect_bands) rows.push_back(subsim::effects(iv(), design(), b));
    effects_ = std::move(rows);
  }
  return *effects_;
}

const std::optional<BootstrapSummary>& Pipeline::bootstrap() {
  if (!bootstrap_) {
    if (config_.bootstrap_replicates > 0)
      bootstrap_.emplace(bootstrap_effects(design(), config_.effect_bands, config_.bootstrap_replicates,
                                           derive_seed(config_.seed, "bootstrap")));
    else
      bootstrap_.emplace(std::nullopt);
  }
  return *bootstrap_;
}

const std::vector<Person>& Pipeline::enrollees() {
  if (!enrollees_) {
    std::vector<Person> out;
    for (const auto& p : population().persons)
      if (p.source == Source::enrollee && p.year == config_.projection_year) out.push_back(p);
    if (out.empty())
      throw DataError("no enrollees in projection year " + std::to_string(config_.projection_year));
    enrollees_ = std::move(out);
  }
  return *enrollees_;
}

const EnrolleeDelta& Pipeline::deltas() {
  if (!deltas_)
    deltas_ = regime_deltas(enrollees(), actual_regime(), counterfactual_regime(), market(), config_.regimes.guidelines);
  return *deltas_;
}

const std::vector<double>& Pipeline::enrollee_marginal_effects() {
  if (!me_) {
    me_ = config_.effect_source == EffectSource::fit ? person_marginal_effects(enrollees(), iv())
                                                     : band_marginal_effects(enrollees(), config_.effect_source_bands);
  }
  return *me_;
}

const LossProjection& Pipeline::projection() {
  if (!projection_)
    projection_ = project_losses(enrollees(), enrollee_marginal_effects(), deltas().premium_change, config_.loss_bands);
  return *projection_;
}

const std::vector<Candidate>& Pipeline::candidates() {
  if (!candidates_) {
    const auto& e = enrollees();
    const auto& me = enrollee_marginal_effects();
    const auto& d = deltas();
    std::vector<Candidate> out(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) out[i] = {e[i].person_id, e[i].fpl, me[i], d.headroom[i]};
    candidates_ = std::move(out);
  }
  return *candidates_;
}

const AllocationResult& Pipeline::allocation() {
  if (!allocation_)
    allocation_ = allocate(candidates(), config_.allocation_budget.value_or(config_.budgets.front()));
  return *allocation_;
}

const std::vector<SweepRow>& Pipeline::sweep_rows() {
  if (!sweep_) sweep_ = sweep(candidates(), config_.budgets);
  return *sweep_;
}

// --------------------------------------------------------------- artifacts

namespace {

std::string money(double x) { return format_fixed(x, 2); }
std::string opt(const std::optional<double>& x) { return x ? format_exact(*x) : std::string(); }

void add_quote_rows(Table& t, std::span<const Person> persons, const std::vector<std::optional<SubsidyQuote>>& q,
                    std::size_t& unquotable) {
  for (std::size_t i = 0; i < persons.size(); ++i) {
    if (!q[i]) {
      ++unquotable;
      continue;
    }
    const auto& s = *q[i];
    t.rows.push_back({std::to_string(s.person_id), std::to_string(persons[i].year), s.regime, s.eligible ? "1" : "0",
                      format_fixed(s.ecp_percent, 4), money(s.benchmark_premium), money(s.min_silver_premium),
                      money(s.expected_contribution), money(s.federal_ptc), money(s.state_supplement),
                      money(s.post_subsidy_premium)});
  }
}

}  // namespace

Table quotes_table(Pipeline& p) {
  Table t;
  t.columns = {"person_id", "year", "regime", "eligible", "ecp_percent", "benchmark_premium", "min_silver_premium",
               "expected_contribution", "federal_ptc", "state_supplement", "post_subsidy_premium"};
  t.units = {"id", "year", "name", "0/1", "% of income", "$/month", "$/month", "$/month", "$/month", "$/month",
             "$/month"};
  std::size_t missing = 0;
  add_quote_rows(t, p.population().persons, p.actual_quotes(), missing);
  add_quote_rows(t, p.population().persons, p.counterfactual_quotes(), missing);
  if (missing) t.notes.push_back("unquotable person-regime pairs omitted: " + std::to_string(missing));
  return t;
}

ordered_json fit_report(Pipeline& p) {
  ordered_json j;
  j["ols"] = fit_to_json(p.ols());
  j["2sls"] = fit_to_json(p.iv());
  j["excluded_rows"] = p.design().excluded_rows;
  return j;
}

Table effects_table(Pipeline& p) {
  Table t;
  t.columns = {"band", "mean_annual_enrollment", "mean_premium", "enrollment_rate", "marginal_effect",
               "marginal_effect_se", "semi_elasticity", "semi_elasticity_se", "elasticity", "elasticity_se"};
  t.units = {"%FPL", "persons", "$/month", "%", "pp per $", "pp per $", "% per $100", "% per $100", "ratio", "ratio"};
  const auto& boot = p.bootstrap();
  if (boot) {
    t.columns.insert(t.columns.end(), {"bootstrap_me_se", "bootstrap_semi_se", "bootstrap_elasticity_se"});
    t.units.insert(t.units.end(), {"pp per $", "% per $100", "ratio"});
    t.notes.push_back("bootstrap replicates: " + std::to_string(boot->replicates) + " (failed " +
                      std::to_string(boot->failed) + ")");
  }
  const auto& rows = p.effects();
  for (std::size_t b = 0; b < rows.size(); ++b) {
    const auto& r = rows[b];
    std::vector<std::string> cells = {r.band.label,
                                      format_exact(r.mean_annual_enrollment),
                                      format_exact(r.mean_premium),
                                      format_exact(r.enrollment_rate),
                                      format_exact(r.marginal_effect),
                                      format_exact(r.marginal_effect_se),
                                      format_exact(r.semi_elasticity),
                                      format_exact(r.semi_elasticity_se),
                                      format_exact(r.elasticity),
                                      format_exact(r.elasticity_se)};
    if (boot) {
      cells.push_back(format_exact(boot->me_se[b]));
      cells.push_back(format_exact(boot->semi_se[b]));
      cells.push_back(format_exact(boot->elasticity_se[b]));
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

Table projection_table(Pipeline& p) {
  const auto& proj = p.projection();
  Table t;
  t.columns = {"band", "baseline", "loss", "share_of_loss"};
  t.units = {"%FPL", "persons", "persons", "fraction"};
  t.notes.push_back("baseline " + format_exact(proj.baseline) + ", projected " + format_exact(proj.projected) +
                    ", loss share " + format_exact(proj.loss_share()));
  for (const auto& b : proj.bands)
    t.rows.push_back({b.band.label, format_exact(b.baseline), format_exact(b.loss), format_exact(b.share)});
  t.rows.push_back({"total", format_exact(proj.baseline), format_exact(proj.total_loss()),
                    proj.total_loss() != 0.0 ? "1" : "0"});
  return t;
}

Table allocation_table(Pipeline& p) {
  const auto& r = p.allocation();
  const auto& c = p.candidates();
  Table t;
  t.columns = {"person_id", "fpl", "marginal_effect", "cap", "subsidy"};
  t.units = {"id", "%FPL", "pp per $", "$/month", "$/month"};
  t.notes.push_back("budget " + format_exact(r.budget) + " $/year; spend " + format_exact(r.annual_spend) +
                    "; gain " + format_exact(r.gain) + " persons; recipients " + std::to_string(r.recipients) +
                    "; mean subsidy " + format_exact(r.mean_subsidy) + " $/month per retained person");
  for (std::size_t i = 0; i < c.size(); ++i)
    if (r.subsidy[i] > 0.0)
      t.rows.push_back({std::to_string(c[i].person_id), format_exact(c[i].fpl), format_exact(c[i].me),
                        format_exact(c[i].cap), format_exact(r.subsidy[i])});
  return t;
}

Table sweep_table(Pipeline& p) {
  Table t;
  t.columns = {"budget",
               "total_gain",
               "marginal_gain",
               "marginal_enrollee_fpl",
               "cost_effectiveness",
               "marginal_cost_effectiveness",
               "mean_subsidy",
               "mean_subsidy_per_recipient",
               "annual_spend",
               "recipients",
               "marginal_cost_per_point"};
  t.units = {"$/year",         "persons",  "persons",  "%FPL", "persons per $10M", "persons per $10M",
             "$/month",        "$/month",  "$/year",   "count", "$/year per pp"};
  t.notes.push_back("mean_subsidy is spend per retained person; marginal_cost_per_point is an extra derived column");
  for (const auto& r : p.sweep_rows())
    t.rows.push_back({format_exact(r.budget), format_exact(r.gain), format_exact(r.marginal_gain),
                      opt(r.marginal_fpl), format_exact(r.cost_effectiveness),
                      format_exact(r.marginal_cost_effectiveness), format_exact(r.mean_subsidy),
                      format_exact(r.mean_subsidy_per_recipient), format_exact(r.annual_spend),
                      std::to_string(r.recipients), opt(r.marginal_cost_per_point)});
  return t;
}

namespace {

struct Writer {
  Pipeline& p;
  std::vector<fs::path> written;

  Provenance prov(const std::string& artifact) const {
    return {artifact, p.config().hash(), p.config().seed};
  }

  fs::path open(const std::string& file, std::ofstream& out) {
    fs::create_directories(p.config().output_dir);
    const fs::path path = p.config().output_dir / file;
    out.open(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    written.push_back(path);
    return path;
  }

  void table(const std::string& name, const Table& t) {
    const bool json = p.config().format == TableFormat::json;
    std::ofstream out;
    open(name + (json ? ".json" : ".csv"), out);
    write_table(out, t, prov(name), p.config().format);
  }

  void json(const std::string& name, ordered_json j) {
    std::ofstream out;
    open(name + ".json", out);
    ordered_json doc;
    const auto pv = prov(name);
    doc["provenance"] = {{"artifact", pv.artifact}, {"config_hash", pv.config_hash}, {"seed", pv.seed}};
    for (auto& [k, v] : j.items()) doc[k] = v;
    out << doc.dump(2) << '\n';
  }

  void generate() {
    const auto& pop = p.population();
    std::ofstream out;
    open("persons.csv", out);
    const auto pv = prov("persons");
    out << "# artifact=" << pv.artifact << " config_hash=" << pv.config_hash << " seed=" << pv.seed << '\n';
    write_persons_csv(out, pop.persons);
    std::ofstream out2;
    open("plans.csv", out2);
    const auto pv2 = prov("plans");
    out2 << "# artifact=" << pv2.artifact << " config_hash=" << pv2.config_hash << " seed=" << pv2.seed << '\n';
    write_plans_csv(out2, pop.plans);
  }

  void plot(const std::string& name, const std::string& y_units, double SweepRow::*field) {
    Table t;
    t.columns = {"x", "y"};
    t.units = {"$/year", y_units};
    for (const auto& r : p.sweep_rows()) t.rows.push_back({format_exact(r.budget), format_exact(r.*field)});
    table("plot_" + name, t);
  }

  void sweep() {
    table("sweep", sweep_table(p));
    plot("total_gain", "persons", &SweepRow::gain);
    plot("marginal_gain", "persons", &SweepRow::marginal_gain);
    plot("cost_effectiveness", "persons per $10M", &SweepRow::cost_effectiveness);
    plot("mean_subsidy", "$/month", &SweepRow::mean_subsidy);
    Table t;
    t.columns = {"x", "y"};
    t.units = {"$/year", "%FPL"};
    for (const auto& r : p.sweep_rows()) t.rows.push_back({format_exact(r.budget), opt(r.marginal_fpl)});
    table("plot_marginal_enrollee_fpl", t);
  }

  void run(const std::string& name) {
    if (name == "generate") generate();
    else if (name == "quote") table("quotes", quotes_table(p));
    else if (name == "fit") json("fit", fit_report(p));
    else if (name == "effects") table("effects", effects_table(p));
    else if (name == "project") table("loss_projection", projection_table(p));
    else if (name == "allocate") table("allocation", allocation_table(p));
    else if (name == "sweep") sweep();
    else if (name == "all") {
      for (const auto& s : kSubcommands)
        if (s != "all") run(s);
    } else throw ConfigError("unknown subcommand '" + name + "'");
  }
};

}  // namespace

std::vector<fs::path> run_subcommand(const std::string& name, Pipeline& pipeline) {
  Writer w{pipeline, {}};
  w.run(name);
  return w.written;
}

}  // namespace subsim
