#pragma once

// Linear-probability coverage demand: OLS and exactly identified 2SLS with
// simulated counterfactual premiums as instruments, rating-area-by-year fixed
// effects absorbed by within-transformation, and HIU-clustered sandwich
// covariance. Band-level marginal effects and (semi-)elasticities carry
// delta-method standard errors.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "subsim/exec.hpp"
#include "subsim/population.hpp"
#include "subsim/premium_engine.hpp"

namespace subsim {

inline constexpr int kPremiumTerms = 3;  // P, P*FPLz, P*1[FPL>200]

struct FplNorm {
  double mean = 0.0;
  double sd = 1.0;
  double z(double fpl) const noexcept { return (fpl - mean) / sd; }
};

/// Weighted mean and (population) standard deviation of FPL.
FplNorm weighted_fpl_norm(std::span<const double> fpl, std::span<const double> weight);

struct DesignOptions {
  double income_threshold = 200.0;  // indicator is fpl > threshold
  bool polynomial_fpl = false;      // adds FPLz^2 and FPLz^3 to the controls
};

struct DesignMatrix {
  Eigen::VectorXd outcome;      // coverage, 0 or 100
  Eigen::MatrixXd endogenous;   // n x 3: P, P*FPLz, P*above
  Eigen::MatrixXd instruments;  // n x 3: same interactions of the counterfactual premium
  Eigen::MatrixXd exogenous;    // n x k: female, age, FPLz [, FPLz^2, FPLz^3]
  std::vector<std::string> exogenous_names;
  std::vector<int> fe_group;  // dense ids 0..G-1 (rating area x year)
  std::vector<std::int64_t> cluster;
  Eigen::VectorXd weight;

  // Row metadata used by effects() and the bootstrap.
  std::vector<double> fpl;
  std::vector<int> year;
  std::vector<std::int64_t> person_id;
  FplNorm norm;
  double income_threshold = 200.0;
  std::size_t excluded_rows = 0;  // persons without both quotes

  std::size_t rows() const noexcept { return std::size_t(outcome.size()); }
  int fe_count() const noexcept;
};

/// Premium of row i is the actual-regime post-subsidy premium; the
/// instrument is the counterfactual-regime premium. Persons with a missing
/// quote under either regime are excluded and counted.
DesignMatrix build_design(std::span<const Person> persons, std::span<const std::optional<SubsidyQuote>> actual,
                          std::span<const std::optional<SubsidyQuote>> counterfactual,
                          const DesignOptions& options = {});

enum class FitMethod { ols, two_sls };
enum class Covariance { cluster, hc1 };

struct FirstStage {
  std::string endogenous;
  std::array<std::string, kPremiumTerms> instruments;
  Eigen::Vector3d coef;
  Eigen::Vector3d se;
  double f_stat = 0.0;  // joint Wald F of the excluded instruments
};

struct DemandFit {
  FitMethod method = FitMethod::two_sls;
  Covariance covariance = Covariance::cluster;
  std::vector<std::string> names;  // premium terms, then controls
  Eigen::VectorXd coef;
  Eigen::MatrixXd vcov;
  Eigen::VectorXd fixed_effects;  // per FE group
  FplNorm norm;
  double income_threshold = 200.0;
  std::vector<FirstStage> first_stage;  // 2SLS only
  std::size_t n_obs = 0;
  std::size_t n_clusters = 0;
  int n_fe = 0;

  Eigen::Vector3d alphas() const { return coef.head<kPremiumTerms>(); }
  Eigen::VectorXd se() const { return vcov.diagonal().cwiseSqrt(); }
  /// Change in coverage (pp) per $1/month, at the given FPL.
  double marginal_effect(double fpl) const noexcept;
  /// Linear combination at arbitrary (FPLz, indicator) values.
  double marginal_effect(double fpl_z, double above) const noexcept;
};

DemandFit fit_ols(const DesignMatrix& design, Covariance cov = Covariance::cluster);
DemandFit fit_2sls(const DesignMatrix& design, Covariance cov = Covariance::cluster);

/// 2SLS point estimates only, with per-row frequency multipliers applied to
/// the weights (cluster bootstrap).
Eigen::VectorXd fit_2sls_coefficients(const DesignMatrix& design, std::span<const double> frequency);

struct IncomeBand {
  std::string label;
  double lo = kFplMin;
  double hi = kFplMax;
  bool closed_low = true;  // include lo itself
  bool contains(double fpl) const noexcept { return (closed_low ? fpl >= lo : fpl > lo) && fpl <= hi; }
};

/// The six bands of the published effects table.
std::vector<IncomeBand> default_effect_bands();

struct EffectsRow {
  IncomeBand band;
  double mean_annual_enrollment = 0.0;  // covered persons per year in band
  double weighted_count = 0.0;
  double mean_premium = 0.0;     // $/month, weighted
  double enrollment_rate = 0.0;  // %, weighted
  double mean_fpl = 0.0;
  double share_above = 0.0;  // weighted share above the income threshold
  double marginal_effect = 0.0, marginal_effect_se = 0.0;
  double semi_elasticity = 0.0, semi_elasticity_se = 0.0;
  double elasticity = 0.0, elasticity_se = 0.0;
};

/// Throws DataError for an empty band or a zero enrollment rate.
EffectsRow effects(const DemandFit& fit, const DesignMatrix& design, const IncomeBand& band);

/// Band summary statistics without the fit-dependent columns.
EffectsRow band_means(const DesignMatrix& design, const IncomeBand& band);
/// Fills the fit-dependent columns of a row from band means.
void apply_fit(EffectsRow& row, const DemandFit& fit);

struct BootstrapSummary {
  std::size_t replicates = 0;
  std::size_t failed = 0;
  std::vector<EffectsRow> point;  // delta-method rows
  std::vector<double> me_se, semi_se, elasticity_se;
  std::vector<std::vector<double>> me_draws;  // [band][replicate]
};

/// Cluster bootstrap of the 2SLS band effects with band means held at their
/// full-sample values. Replicate r uses derive_seed(seed, r).
BootstrapSummary bootstrap_effects(const DesignMatrix& design, std::span<const IncomeBand> bands, int replicates,
                                   std::uint64_t seed, Exec exec = Exec::parallel);

nlohmann::ordered_json fit_to_json(const DemandFit& fit);

const char* to_string(FitMethod m) noexcept;

}  // namespace subsim
