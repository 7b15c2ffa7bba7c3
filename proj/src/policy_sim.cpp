#include "subsim/policy_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "subsim/error.hpp"
#include "subsim/kernels.hpp"
#include "subsim/seed.hpp"

namespace subsim {

namespace detail {

double clamped_loss(double me, double premium_change) noexcept {
  const double p = std::clamp(100.0 + me * premium_change, 0.0, 100.0);
  return (100.0 - p) / 100.0;
}

}  // namespace detail

// ------------------------------------------------------------------ projection

void LossProjection::check(double tol) const {
  double sum = 0.0, shares = 0.0;
  for (const auto& b : bands) {
    sum += b.loss;
    shares += b.share;
  }
  const double total = total_loss();
  const double scale = std::max({1.0, std::abs(total), std::abs(baseline)});
  if (std::abs(sum - total) > tol * scale)
    throw NumericalError("band losses sum to " + std::to_string(sum) + ", expected " + std::to_string(total));
  if (total != 0.0 && std::abs(shares - 1.0) > tol)
    throw NumericalError("loss shares sum to " + std::to_string(shares));
}

LossProjection make_projection(double baseline, double projected, std::vector<LossBandRow> bands) {
  LossProjection p{baseline, projected, std::move(bands)};
  const double total = p.total_loss();
  for (auto& b : p.bands) b.share = total != 0.0 ? b.loss / total : 0.0;
  p.check();
  return p;
}

std::vector<IncomeBand> default_loss_bands() {
  return {{"138-200", 138, 200, true}, {"201-300", 200, 300, false}, {"301-400", 300, 400, false}};
}

std::vector<double> person_marginal_effects(std::span<const Person> persons, const DemandFit& fit) {
  std::vector<double> out(persons.size());
  for (std::size_t i = 0; i < persons.size(); ++i) out[i] = fit.marginal_effect(persons[i].fpl);
  return out;
}

std::vector<BandEffect> published_band_effects() {
  return {{{"138-150", 138, 150, true}, -0.67},
          {{"151-200", 150, 200, false}, -0.64},
          {{"201-250", 200, 250, false}, -0.29},
          {{"251-300", 250, 300, false}, -0.25},
          {{"301-400", 300, 400, false}, -0.20}};
}

std::vector<double> band_marginal_effects(std::span<const Person> persons, std::span<const BandEffect> bands) {
  std::vector<double> out(persons.size());
  for (std::size_t i = 0; i < persons.size(); ++i) {
    auto it = std::find_if(bands.begin(), bands.end(), [&](const BandEffect& b) { return b.band.contains(persons[i].fpl); });
    if (it == bands.end())
      throw DataError("person " + std::to_string(persons[i].person_id) + " (fpl " + std::to_string(persons[i].fpl) +
                      ") falls in no marginal-effect band");
    out[i] = it->marginal_effect;
  }
  return out;
}

LossProjection project_losses(std::span<const Person> enrollees, std::span<const double> me,
                              std::span<const double> premium_change, std::span<const IncomeBand> bands, Exec exec) {
  if (me.size() != enrollees.size() || premium_change.size() != enrollees.size())
    throw DataError("marginal effects and premium changes must align with enrollees");
  const auto loss = exec == Exec::serial ? kernels::serial::losses(me, premium_change)
                                         : kernels::omp::losses(me, premium_change);

  std::vector<LossBandRow> rows;
  for (const auto& b : bands) rows.push_back({b});
  double baseline = 0.0, lost = 0.0;
  for (std::size_t i = 0; i < enrollees.size(); ++i) {
    const Person& p = enrollees[i];
    auto it = std::find_if(bands.begin(), bands.end(), [&](const IncomeBand& b) { return b.contains(p.fpl); });
    if (it == bands.end())
      throw DataError("person " + std::to_string(p.person_id) + " falls in no projection band");
    auto& row = rows[std::size_t(it - bands.begin())];
    row.baseline += p.weight;
    row.loss += p.weight * loss[i];
    baseline += p.weight;
    lost += p.weight * loss[i];
  }
  return make_projection(baseline, baseline - lost, std::move(rows));
}

EnrolleeDelta regime_deltas(std::span<const Person> enrollees, const Regime& current, const Regime& lapsed,
                            const Market& market, const PovertyGuidelines& guidelines, Exec exec) {
  const auto a = quote_population(enrollees, current, market, guidelines, exec);
  const auto b = quote_population(enrollees, lapsed, market, guidelines, exec);
  EnrolleeDelta d;
  d.premium_change.resize(enrollees.size());
  d.headroom.resize(enrollees.size());
  for (std::size_t i = 0; i < enrollees.size(); ++i) {
    if (!a[i] || !b[i])
      throw DataError("enrollee " + std::to_string(enrollees[i].person_id) + ": rating area " +
                      std::to_string(enrollees[i].rating_area) + ", year " + std::to_string(enrollees[i].year) +
                      " is unquotable");
    const QuoteDelta q = quote_delta(*a[i], *b[i]);
    d.premium_change[i] = q.premium_change;
    d.headroom[i] = q.headroom;
  }
  return d;
}

LossProjection project_losses(std::span<const Person> enrollees, const DemandFit& fit, const Regime& current,
                              const Regime& lapsed, const Market& market, const PovertyGuidelines& guidelines,
                              std::span<const IncomeBand> bands, Exec exec) {
  const auto d = regime_deltas(enrollees, current, lapsed, market, guidelines, exec);
  const auto me = person_marginal_effects(enrollees, fit);
  return project_losses(enrollees, me, d.premium_change, bands, exec);
}

// ------------------------------------------------------------------ allocation

FillOrder::FillOrder(std::span<const Candidate> candidates) : candidates_(candidates) {
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (!std::isfinite(c.cap) || c.cap < 0.0 || !std::isfinite(c.me))
      throw ConfigError("candidate " + std::to_string(c.person_id) + " has an invalid cap or marginal effect");
    if (c.cap > 0.0 && c.me != 0.0) order_.push_back(i);
  }
  std::sort(order_.begin(), order_.end(), [&](std::size_t x, std::size_t y) {
    const auto &a = candidates[x], &b = candidates[y];
    const double ma = std::abs(a.me), mb = std::abs(b.me);
    if (ma != mb) return ma > mb;
    if (a.cap != b.cap) return a.cap < b.cap;
    if (a.person_id != b.person_id) return a.person_id < b.person_id;
    return x < y;
  });
  cap_prefix_.assign(order_.size() + 1, 0.0);
  gain_prefix_.assign(order_.size() + 1, 0.0);
  for (std::size_t k = 0; k < order_.size(); ++k) {
    const auto& c = candidates[order_[k]];
    cap_prefix_[k + 1] = cap_prefix_[k] + c.cap;
    gain_prefix_[k + 1] = gain_prefix_[k] + c.cap * std::abs(c.me) / 100.0;
  }
}

FillOrder::Fill FillOrder::fill(double annual_budget) const {
  Fill f;
  const double pool = annual_budget / kMonthsPerYear;
  // Largest k with cap_prefix_[k] <= pool.
  const auto it = std::upper_bound(cap_prefix_.begin(), cap_prefix_.end(), pool);
  f.full = std::size_t(it - cap_prefix_.begin()) - 1;
  f.gain = gain_prefix_[f.full];
  f.monthly_spend = cap_prefix_[f.full];
  if (f.full < order_.size()) {
    f.partial = pool - cap_prefix_[f.full];
    if (f.partial > 0.0) {
      f.gain += f.partial * std::abs(candidates_[order_[f.full]].me) / 100.0;
      f.monthly_spend = pool;
      f.marginal = f.full;
    }
  }
  if (!f.marginal && f.full > 0) f.marginal = f.full - 1;
  return f;
}

namespace {

void check_budget(double b) {
  if (!std::isfinite(b) || b < 0.0) throw ConfigError("budget must be a non-negative number of dollars per year");
}

}  // namespace

AllocationResult allocate(std::span<const Candidate> candidates, double annual_budget) {
  check_budget(annual_budget);
  const FillOrder order(candidates);
  const auto f = order.fill(annual_budget);

  AllocationResult r;
  r.budget = annual_budget;
  r.subsidy.assign(candidates.size(), 0.0);
  for (std::size_t k = 0; k < f.full; ++k) r.subsidy[order.at(k)] = candidates[order.at(k)].cap;
  if (f.partial > 0.0 && f.full < order.size()) r.subsidy[order.at(f.full)] = f.partial;
  r.recipients = f.full + (f.partial > 0.0 ? 1 : 0);
  r.annual_spend = f.monthly_spend * kMonthsPerYear;
  r.gain = f.gain;
  if (f.marginal) {
    const auto& c = candidates[order.at(*f.marginal)];
    r.marginal_fpl = c.fpl;
    r.marginal_me = c.me;
  }
  r.mean_subsidy = f.gain > 0.0 ? f.monthly_spend / f.gain : 0.0;
  r.mean_subsidy_per_recipient = r.recipients ? f.monthly_spend / double(r.recipients) : 0.0;
  r.cost_effectiveness = annual_budget > 0.0 ? f.gain / (annual_budget / kCostEffectivenessUnit) : 0.0;
  return r;
}

std::vector<SweepRow> sweep(std::span<const Candidate> candidates, std::span<const double> budgets) {
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    check_budget(budgets[i]);
    if (i > 0 && budgets[i] < budgets[i - 1]) throw ConfigError("budgets must be ascending");
  }
  const FillOrder order(candidates);
  std::vector<SweepRow> rows;
  double prev_budget = 0.0, prev_gain = 0.0;
  for (double b : budgets) {
    const auto f = order.fill(b);
    SweepRow r;
    r.budget = b;
    r.gain = f.gain;
    r.marginal_gain = f.gain - prev_gain;
    r.annual_spend = f.monthly_spend * kMonthsPerYear;
    r.recipients = f.full + (f.partial > 0.0 ? 1 : 0);
    if (f.marginal) {
      const auto& c = candidates[order.at(*f.marginal)];
      r.marginal_fpl = c.fpl;
      r.marginal_cost_per_point = kMonthsPerYear / std::abs(c.me);
    }
    r.cost_effectiveness = b > 0.0 ? f.gain / (b / kCostEffectivenessUnit) : 0.0;
    r.marginal_cost_effectiveness = b > prev_budget ? r.marginal_gain / ((b - prev_budget) / kCostEffectivenessUnit) : 0.0;
    r.mean_subsidy = f.gain > 0.0 ? f.monthly_spend / f.gain : 0.0;
    r.mean_subsidy_per_recipient = r.recipients ? f.monthly_spend / double(r.recipients) : 0.0;
    rows.push_back(r);
    prev_budget = b;
    prev_gain = f.gain;
  }
  return rows;
}

std::vector<double> budget_grid(double step, double last) {
  if (!(step > 0.0) || !(last >= 0.0)) throw ConfigError("budget grid needs a positive step and a non-negative end");
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor(last / step + 1e-9));
  for (long k = 1; k <= n; ++k) out.push_back(double(k) * step);
  return out;
}

std::vector<bool> realize_retention(std::span<const Candidate> candidates, const AllocationResult& result,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, "retention"));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<bool> out(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double p = std::min(1.0, result.subsidy[i] * std::abs(candidates[i].me) / 100.0);
    out[i] = u(rng) < p;
  }
  return out;
}

}  // namespace subsim
