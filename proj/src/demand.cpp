#include "subsim/demand.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <unordered_map>

#include "subsim/error.hpp"
#include "subsim/kernels.hpp"
#include "subsim/seed.hpp"

namespace subsim {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::ordered_json;

const char* to_string(FitMethod m) noexcept { return m == FitMethod::ols ? "OLS" : "2SLS"; }

FplNorm weighted_fpl_norm(std::span<const double> fpl, std::span<const double> weight) {
  double sw = 0.0, swx = 0.0;
  for (std::size_t i = 0; i < fpl.size(); ++i) {
    sw += weight[i];
    swx += weight[i] * fpl[i];
  }
  if (!(sw > 0.0)) throw NumericalError("zero weight sum");
  const double mean = swx / sw;
  double ss = 0.0;
  for (std::size_t i = 0; i < fpl.size(); ++i) ss += weight[i] * (fpl[i] - mean) * (fpl[i] - mean);
  const double sd = std::sqrt(ss / sw);
  if (!(sd > 0.0)) throw NumericalError("FPL has no variation; cannot normalise");
  return {mean, sd};
}

int DesignMatrix::fe_count() const noexcept {
  return fe_group.empty() ? 0 : *std::max_element(fe_group.begin(), fe_group.end()) + 1;
}

DesignMatrix build_design(std::span<const Person> persons, std::span<const std::optional<SubsidyQuote>> actual,
                          std::span<const std::optional<SubsidyQuote>> counterfactual, const DesignOptions& options) {
  if (actual.size() != persons.size() || counterfactual.size() != persons.size())
    throw DataError("quote vectors must align with persons");

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < persons.size(); ++i)
    if (actual[i] && counterfactual[i]) keep.push_back(i);

  DesignMatrix d;
  d.excluded_rows = persons.size() - keep.size();
  d.income_threshold = options.income_threshold;
  const auto n = static_cast<Eigen::Index>(keep.size());
  if (n == 0) throw DataError("no quotable persons for the design matrix");

  std::vector<double> fpl(keep.size()), w(keep.size());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    fpl[r] = persons[keep[r]].fpl;
    w[r] = persons[keep[r]].weight;
  }
  d.norm = weighted_fpl_norm(fpl, w);

  const int k_exog = options.polynomial_fpl ? 5 : 3;
  d.exogenous_names = {"female", "age", "fpl"};
  if (options.polynomial_fpl) {
    d.exogenous_names.push_back("fpl_sq");
    d.exogenous_names.push_back("fpl_cu");
  }
  d.outcome.resize(n);
  d.endogenous.resize(n, kPremiumTerms);
  d.instruments.resize(n, kPremiumTerms);
  d.exogenous.resize(n, k_exog);
  d.weight.resize(n);
  d.fe_group.resize(keep.size());
  d.cluster.resize(keep.size());
  d.fpl = fpl;
  d.year.resize(keep.size());
  d.person_id.resize(keep.size());

  std::map<std::pair<int, int>, int> fe_ids;
  for (Eigen::Index r = 0; r < n; ++r) {
    const Person& p = persons[keep[r]];
    const double z = d.norm.z(p.fpl);
    const double above = p.fpl > options.income_threshold ? 1.0 : 0.0;
    const double pa = actual[keep[r]]->post_subsidy_premium;
    const double pc = counterfactual[keep[r]]->post_subsidy_premium;
    d.outcome[r] = p.insured ? 100.0 : 0.0;
    d.endogenous.row(r) << pa, pa * z, pa * above;
    d.instruments.row(r) << pc, pc * z, pc * above;
    d.exogenous(r, 0) = p.female ? 1.0 : 0.0;
    d.exogenous(r, 1) = p.age;
    d.exogenous(r, 2) = z;
    if (options.polynomial_fpl) {
      d.exogenous(r, 3) = z * z;
      d.exogenous(r, 4) = z * z * z;
    }
    d.weight[r] = p.weight;
    auto [it, fresh] = fe_ids.emplace(std::make_pair(p.rating_area, p.year), int(fe_ids.size()));
    (void)fresh;
    d.fe_group[r] = it->second;
    d.cluster[r] = p.hiu_id;
    d.year[r] = p.year;
    d.person_id[r] = p.person_id;
  }
  return d;
}

// ------------------------------------------------------------------ estimator

namespace {

/// Weighted within-transformation by FE group. Groups with zero total weight
/// are left untouched (their rows carry no weight anyway).
void demean(MatrixXd& m, const std::vector<int>& group, const VectorXd& w, int groups) {
  if (groups == 0) return;
  MatrixXd sums = MatrixXd::Zero(groups, m.cols());
  VectorXd wsum = VectorXd::Zero(groups);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    sums.row(group[r]) += w[r] * m.row(r);
    wsum[group[r]] += w[r];
  }
  for (int g = 0; g < groups; ++g)
    if (wsum[g] > 0.0) sums.row(g) /= wsum[g];
  for (Eigen::Index r = 0; r < m.rows(); ++r) m.row(r) -= sums.row(group[r]);
}

struct Stacked {
  MatrixXd x, z;  // regressors and instruments, same column count
  VectorXd y;
};

Stacked stack(const DesignMatrix& d, const MatrixXd& premium_block, const MatrixXd& instrument_block) {
  const Eigen::Index n = d.outcome.size(), k = kPremiumTerms + d.exogenous.cols();
  Stacked s;
  s.x.resize(n, k);
  s.z.resize(n, k);
  s.x << premium_block, d.exogenous;
  s.z << instrument_block, d.exogenous;
  s.y = d.outcome;
  return s;
}

struct CoreResult {
  VectorXd beta;
  MatrixXd vcov;
  std::size_t clusters = 0;
};

void check_inputs(const VectorXd& w) {
  if ((w.array() < 0.0).any() || !w.allFinite()) throw DataError("weights must be finite and non-negative");
  if (!(w.sum() > 0.0)) throw NumericalError("zero weight sum");
}

/// Exactly identified IV on already-demeaned data (Z == X gives OLS).
VectorXd solve_core(const MatrixXd& x, const MatrixXd& z, const VectorXd& y, const VectorXd& w, MatrixXd* bread) {
  const MatrixXd zw = z.transpose() * w.asDiagonal();
  const MatrixXd a = zw * x;
  // Rank check on the weighted regressor and instrument columns.
  const VectorXd sw = w.cwiseSqrt();
  Eigen::ColPivHouseholderQR<MatrixXd> qx(sw.asDiagonal() * x), qz(sw.asDiagonal() * z);
  if (qx.rank() < x.cols() || qz.rank() < z.cols())
    throw NumericalError("design is rank deficient after fixed-effect absorption");
  Eigen::FullPivLU<MatrixXd> lu(a);
  if (!lu.isInvertible()) throw NumericalError("instrument cross-product is singular");
  if (bread) *bread = lu.inverse();
  return lu.solve(zw * y);
}

CoreResult estimate(const DesignMatrix& d, Stacked s, Covariance cov, std::span<const std::int64_t> cluster) {
  const VectorXd& w = d.weight;
  check_inputs(w);
  const int groups = d.fe_count();
  demean(s.x, d.fe_group, w, groups);
  demean(s.z, d.fe_group, w, groups);
  MatrixXd ym = s.y;
  demean(ym, d.fe_group, w, groups);
  const VectorXd y = ym.col(0);

  CoreResult res;
  MatrixXd bread;
  res.beta = solve_core(s.x, s.z, y, w, &bread);
  const VectorXd u = y - s.x * res.beta;
  const Eigen::Index k = s.x.cols();

  std::size_t n_pos = 0;
  std::set<int> fe_used;
  for (Eigen::Index r = 0; r < w.size(); ++r)
    if (w[r] > 0.0) {
      ++n_pos;
      if (groups) fe_used.insert(d.fe_group[r]);
    }
  const double n = double(n_pos);
  const double dof_k = double(k) + double(fe_used.size());
  if (!(n > dof_k)) throw NumericalError("not enough observations for the parameter count");

  MatrixXd meat = MatrixXd::Zero(k, k);
  double scale = 1.0;
  if (cov == Covariance::hc1) {
    for (Eigen::Index r = 0; r < w.size(); ++r) {
      if (w[r] == 0.0) continue;
      const VectorXd sc = (w[r] * u[r]) * s.z.row(r).transpose();
      meat.noalias() += sc * sc.transpose();
    }
    res.clusters = n_pos;
    scale = n / (n - dof_k);
  } else {
    std::unordered_map<std::int64_t, Eigen::Index> slot;
    MatrixXd scores(0, k);
    std::vector<VectorXd> acc;
    for (Eigen::Index r = 0; r < w.size(); ++r) {
      if (w[r] == 0.0) continue;
      auto [it, fresh] = slot.emplace(cluster[r], Eigen::Index(acc.size()));
      if (fresh) acc.push_back(VectorXd::Zero(k));
      acc[it->second].noalias() += (w[r] * u[r]) * s.z.row(r).transpose();
    }
    const double g = double(acc.size());
    if (acc.size() < 2) throw NumericalError("cluster-robust covariance needs at least two clusters");
    for (const auto& sc : acc) meat.noalias() += sc * sc.transpose();
    res.clusters = acc.size();
    scale = g / (g - 1.0) * (n - 1.0) / (n - dof_k);
  }
  res.vcov = scale * bread * meat * bread.transpose();
  res.vcov = 0.5 * (res.vcov + res.vcov.transpose()).eval();
  return res;
}

VectorXd fixed_effect_estimates(const DesignMatrix& d, const MatrixXd& x, const VectorXd& beta) {
  const int groups = d.fe_count();
  VectorXd sums = VectorXd::Zero(groups), wsum = VectorXd::Zero(groups);
  const VectorXd resid = d.outcome - x * beta;
  for (Eigen::Index r = 0; r < resid.size(); ++r) {
    sums[d.fe_group[r]] += d.weight[r] * resid[r];
    wsum[d.fe_group[r]] += d.weight[r];
  }
  for (int g = 0; g < groups; ++g) sums[g] = wsum[g] > 0.0 ? sums[g] / wsum[g] : 0.0;
  return sums;
}

const std::array<std::string, kPremiumTerms> kEndogNames = {"premium", "premium_x_fpl", "premium_x_above200"};
const std::array<std::string, kPremiumTerms> kInstrNames = {"cf_premium", "cf_premium_x_fpl",
                                                            "cf_premium_x_above200"};

DemandFit make_fit(const DesignMatrix& d, FitMethod method, Covariance cov, const Stacked& raw, CoreResult core) {
  DemandFit fit;
  fit.method = method;
  fit.covariance = cov;
  fit.names.assign(kEndogNames.begin(), kEndogNames.end());
  fit.names.insert(fit.names.end(), d.exogenous_names.begin(), d.exogenous_names.end());
  fit.coef = std::move(core.beta);
  fit.vcov = std::move(core.vcov);
  fit.fixed_effects = fixed_effect_estimates(d, raw.x, fit.coef);
  fit.norm = d.norm;
  fit.income_threshold = d.income_threshold;
  fit.n_obs = d.rows();
  fit.n_clusters = core.clusters;
  fit.n_fe = d.fe_count();
  return fit;
}

void validate_design(const DesignMatrix& d) {
  const auto n = d.outcome.size();
  if (d.endogenous.rows() != n || d.instruments.rows() != n || d.exogenous.rows() != n || d.weight.size() != n ||
      Eigen::Index(d.fe_group.size()) != n || Eigen::Index(d.cluster.size()) != n)
    throw DataError("design matrix blocks have inconsistent row counts");
  if (d.endogenous.cols() != kPremiumTerms || d.instruments.cols() != kPremiumTerms)
    throw DataError("design needs exactly three endogenous terms and three instruments");
  if (!(d.norm.sd > 0.0)) throw NumericalError("FPL normalisation sd must be positive");
}

}  // namespace

double DemandFit::marginal_effect(double fpl_z, double above) const noexcept {
  return coef[0] + coef[1] * fpl_z + coef[2] * above;
}

double DemandFit::marginal_effect(double fpl) const noexcept {
  return marginal_effect(norm.z(fpl), fpl > income_threshold ? 1.0 : 0.0);
}

DemandFit fit_ols(const DesignMatrix& d, Covariance cov) {
  validate_design(d);
  const Stacked raw = stack(d, d.endogenous, d.endogenous);
  return make_fit(d, FitMethod::ols, cov, raw, estimate(d, raw, cov, d.cluster));
}

DemandFit fit_2sls(const DesignMatrix& d, Covariance cov) {
  validate_design(d);
  const Stacked raw = stack(d, d.endogenous, d.instruments);
  DemandFit fit = make_fit(d, FitMethod::two_sls, cov, raw, estimate(d, raw, cov, d.cluster));

  // First stages: each premium term on the instruments and controls.
  for (int j = 0; j < kPremiumTerms; ++j) {
    Stacked fs;
    fs.x = raw.z;
    fs.z = raw.z;
    fs.y = d.endogenous.col(j);
    const CoreResult r = estimate(d, fs, cov, d.cluster);
    FirstStage out;
    out.endogenous = kEndogNames[j];
    out.instruments = kInstrNames;
    out.coef = r.beta.head<kPremiumTerms>();
    out.se = r.vcov.diagonal().head<kPremiumTerms>().cwiseSqrt();
    const Eigen::Matrix3d v = r.vcov.topLeftCorner<kPremiumTerms, kPremiumTerms>();
    Eigen::FullPivLU<Eigen::Matrix3d> lu(v);
    out.f_stat = lu.isInvertible() ? out.coef.dot(lu.solve(out.coef)) / kPremiumTerms
                                   : std::numeric_limits<double>::quiet_NaN();
    fit.first_stage.push_back(out);
  }
  return fit;
}

VectorXd fit_2sls_coefficients(const DesignMatrix& d, std::span<const double> frequency) {
  Stacked s = stack(d, d.endogenous, d.instruments);
  VectorXd w = d.weight;
  for (Eigen::Index r = 0; r < w.size(); ++r) w[r] *= frequency[r];
  if (!(w.sum() > 0.0)) throw NumericalError("zero weight sum");
  const int groups = d.fe_count();
  demean(s.x, d.fe_group, w, groups);
  demean(s.z, d.fe_group, w, groups);
  MatrixXd ym = s.y;
  demean(ym, d.fe_group, w, groups);
  return solve_core(s.x, s.z, ym.col(0), w, nullptr);
}

// --------------------------------------------------------------------- effects

std::vector<IncomeBand> default_effect_bands() {
  return {{"138-400", 138, 400, true}, {"138-150", 138, 150, true}, {"151-200", 150, 200, false},
          {"201-250", 200, 250, false}, {"251-300", 250, 300, false}, {"301-400", 300, 400, false}};
}

EffectsRow band_means(const DesignMatrix& d, const IncomeBand& band) {
  EffectsRow row;
  row.band = band;
  double sw = 0.0, sp = 0.0, sy = 0.0, sf = 0.0, sa = 0.0, covered = 0.0;
  std::set<int> years(d.year.begin(), d.year.end());
  for (std::size_t r = 0; r < d.rows(); ++r) {
    if (!band.contains(d.fpl[r])) continue;
    const double w = d.weight[r];
    sw += w;
    sp += w * d.endogenous(r, 0);
    sy += w * d.outcome[r];
    sf += w * d.fpl[r];
    sa += w * (d.fpl[r] > d.income_threshold ? 1.0 : 0.0);
    if (d.outcome[r] > 0.0) covered += w;
  }
  if (!(sw > 0.0)) throw DataError("income band " + band.label + " is empty under the weights");
  row.weighted_count = sw;
  row.mean_premium = sp / sw;
  row.enrollment_rate = sy / sw;
  row.mean_fpl = sf / sw;
  row.share_above = sa / sw;
  row.mean_annual_enrollment = covered / double(std::max<std::size_t>(years.size(), 1));
  return row;
}

void apply_fit(EffectsRow& row, const DemandFit& fit) {
  if (!(row.enrollment_rate > 0.0))
    throw DataError("income band " + row.band.label + " has a zero enrollment rate");
  const Eigen::Vector3d g(1.0, fit.norm.z(row.mean_fpl), row.share_above);
  const Eigen::Matrix3d v = fit.vcov.topLeftCorner<kPremiumTerms, kPremiumTerms>();
  row.marginal_effect = g.dot(fit.alphas());
  row.marginal_effect_se = std::sqrt(std::max(0.0, g.dot(v * g)));
  row.semi_elasticity = 100.0 * row.marginal_effect / row.enrollment_rate;
  row.semi_elasticity_se = 100.0 * row.marginal_effect_se / row.enrollment_rate;
  row.elasticity = row.semi_elasticity * row.mean_premium / 100.0;
  row.elasticity_se = row.semi_elasticity_se * row.mean_premium / 100.0;
}

EffectsRow effects(const DemandFit& fit, const DesignMatrix& design, const IncomeBand& band) {
  EffectsRow row = band_means(design, band);
  apply_fit(row, fit);
  return row;
}

// ------------------------------------------------------------------- bootstrap

namespace detail {

ClusterIndex index_clusters(std::span<const std::int64_t> cluster) {
  ClusterIndex idx;
  std::unordered_map<std::int64_t, int> ids;
  idx.row_cluster.resize(cluster.size());
  for (std::size_t r = 0; r < cluster.size(); ++r) {
    auto [it, fresh] = ids.emplace(cluster[r], int(ids.size()));
    (void)fresh;
    idx.row_cluster[r] = it->second;
  }
  idx.clusters = int(ids.size());
  return idx;
}

std::optional<VectorXd> bootstrap_replicate(const DesignMatrix& design, const ClusterIndex& index, std::uint64_t seed,
                                            std::size_t replicate) {
  std::mt19937_64 rng(derive_seed(seed, std::uint64_t(replicate)));
  std::uniform_int_distribution<int> pick(0, index.clusters - 1);
  std::vector<double> count(index.clusters, 0.0);
  for (int c = 0; c < index.clusters; ++c) count[pick(rng)] += 1.0;
  std::vector<double> freq(design.rows());
  for (std::size_t r = 0; r < freq.size(); ++r) freq[r] = count[index.row_cluster[r]];
  try {
    return fit_2sls_coefficients(design, freq);
  } catch (const NumericalError&) {
    return std::nullopt;
  }
}

}  // namespace detail

BootstrapSummary bootstrap_effects(const DesignMatrix& design, std::span<const IncomeBand> bands, int replicates,
                                   std::uint64_t seed, Exec exec) {
  if (replicates < 2) throw ConfigError("bootstrap needs at least two replicates");
  const DemandFit fit = fit_2sls(design);
  BootstrapSummary out;
  out.replicates = std::size_t(replicates);
  for (const auto& b : bands) out.point.push_back(effects(fit, design, b));

  const auto index = detail::index_clusters(design.cluster);
  const auto draws = exec == Exec::serial ? kernels::serial::bootstrap(design, index, seed, out.replicates)
                                          : kernels::omp::bootstrap(design, index, seed, out.replicates);

  out.me_draws.assign(bands.size(), {});
  for (const auto& coef : draws) {
    if (!coef) {
      ++out.failed;
      continue;
    }
    for (std::size_t b = 0; b < bands.size(); ++b) {
      const auto& row = out.point[b];
      const Eigen::Vector3d g(1.0, fit.norm.z(row.mean_fpl), row.share_above);
      out.me_draws[b].push_back(g.dot(coef->head<kPremiumTerms>()));
    }
  }
  for (std::size_t b = 0; b < bands.size(); ++b) {
    const auto& x = out.me_draws[b];
    if (x.size() < 2) throw NumericalError("too few successful bootstrap replicates");
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= double(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / double(x.size() - 1));
    const auto& row = out.point[b];
    out.me_se.push_back(se);
    out.semi_se.push_back(100.0 * se / row.enrollment_rate);
    out.elasticity_se.push_back(100.0 * se / row.enrollment_rate * row.mean_premium / 100.0);
  }
  return out;
}

// ------------------------------------------------------------------------ JSON

ordered_json fit_to_json(const DemandFit& fit) {
  ordered_json j;
  j["method"] = to_string(fit.method);
  j["covariance"] = fit.covariance == Covariance::cluster ? "cluster(hiu)" : "hc1";
  j["n_obs"] = fit.n_obs;
  j["n_clusters"] = fit.n_clusters;
  j["n_fixed_effects"] = fit.n_fe;
  j["fpl_norm"] = {{"weighted_mean", fit.norm.mean}, {"weighted_sd", fit.norm.sd}};
  j["income_threshold"] = fit.income_threshold;
  auto coefs = ordered_json::array();
  const VectorXd se = fit.se();
  for (std::size_t i = 0; i < fit.names.size(); ++i)
    coefs.push_back({{"name", fit.names[i]}, {"estimate", fit.coef[i]}, {"se", se[i]}});
  j["coefficients"] = std::move(coefs);
  auto vc = ordered_json::array();
  for (Eigen::Index r = 0; r < fit.vcov.rows(); ++r) {
    auto row = ordered_json::array();
    for (Eigen::Index c = 0; c < fit.vcov.cols(); ++c) row.push_back(fit.vcov(r, c));
    vc.push_back(std::move(row));
  }
  j["vcov"] = std::move(vc);
  if (!fit.first_stage.empty()) {
    auto fs = ordered_json::array();
    for (const auto& s : fit.first_stage) {
      auto rows = ordered_json::array();
      for (int i = 0; i < kPremiumTerms; ++i)
        rows.push_back({{"instrument", s.instruments[i]}, {"estimate", s.coef[i]}, {"se", s.se[i]}});
      fs.push_back({{"endogenous", s.endogenous}, {"instruments", std::move(rows)}, {"f_statistic", s.f_stat}});
    }
    j["first_stage"] = std::move(fs);
  }
  return j;
}

}  // namespace subsim
