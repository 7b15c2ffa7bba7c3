#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Deliberately naive: dense dummies, dense DP tables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "subsim/demand.hpp"

namespace oracle {

/// Exactly identified IV with every fixed-effect group as an explicit dummy
/// column, solved from the weighted normal equations. Returns the full
/// coefficient vector (premium terms, controls, dummies) and the CR1 or HC1
/// sandwich with the textbook small-sample factor using all columns.
struct NaiveIv {
  Eigen::VectorXd beta;
  Eigen::MatrixXd vcov;
};

inline NaiveIv naive_iv(const subsim::DesignMatrix& d, bool instruments_are_regressors, bool hc1) {
  const Eigen::Index n = d.outcome.size();
  const int g = d.fe_count();
  const Eigen::Index k = 3 + d.exogenous.cols() + g;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, k), z = Eigen::MatrixXd::Zero(n, k);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int j = 0; j < 3; ++j) {
      x(r, j) = d.endogenous(r, j);
      z(r, j) = instruments_are_regressors ? d.endogenous(r, j) : d.instruments(r, j);
    }
    for (Eigen::Index j = 0; j < d.exogenous.cols(); ++j) x(r, 3 + j) = z(r, 3 + j) = d.exogenous(r, j);
    x(r, 3 + d.exogenous.cols() + d.fe_group[r]) = 1.0;
    z(r, 3 + d.exogenous.cols() + d.fe_group[r]) = 1.0;
  }
  Eigen::MatrixXd ztwx = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd ztwy = Eigen::VectorXd::Zero(k);
  for (Eigen::Index r = 0; r < n; ++r) {
    ztwx += d.weight[r] * z.row(r).transpose() * x.row(r);
    ztwy += d.weight[r] * d.outcome[r] * z.row(r).transpose();
  }
  NaiveIv out;
  const Eigen::MatrixXd inv = ztwx.inverse();
  out.beta = inv * ztwy;
  const Eigen::VectorXd u = d.outcome - x * out.beta;

  std::map<std::int64_t, Eigen::VectorXd> scores;
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::int64_t key = hc1 ? std::int64_t(r) : d.cluster[r];
    auto it = scores.find(key);
    if (it == scores.end()) it = scores.emplace(key, Eigen::VectorXd::Zero(k)).first;
    it->second += d.weight[r] * u[r] * z.row(r).transpose();
  }
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
  for (const auto& [key, s] : scores) meat += s * s.transpose();
  const double nn = double(n), kk = double(k), gg = double(scores.size());
  const double c = hc1 ? nn / (nn - kk) : gg / (gg - 1.0) * (nn - 1.0) / (nn - kk);
  out.vcov = c * inv * meat * inv.transpose();
  return out;
}

/// Best integer objective sum(s_i * me_i) with integer 0 <= s_i <= cap_i and
/// sum(s_i) <= budget, by exhaustive DP over a 1-unit grid.
inline std::int64_t knapsack_dp(const std::vector<int>& me, const std::vector<int>& cap, int budget) {
  std::vector<std::int64_t> best(std::size_t(budget) + 1, 0);
  for (std::size_t i = 0; i < me.size(); ++i) {
    std::vector<std::int64_t> next = best;
    for (int b = 0; b <= budget; ++b)
      for (int s = 1; s <= cap[i] && s <= b; ++s)
        next[std::size_t(b)] = std::max(next[std::size_t(b)], best[std::size_t(b - s)] + std::int64_t(s) * me[i]);
    best = std::move(next);
  }
  return best[std::size_t(budget)];
}

/// A synthetic design with a known linear-probability structure. Premiums are
/// endogenous (correlated with the error) and instrumented by a simulated
/// counterfactual premium.
struct SyntheticOptions {
  int clusters = 60;
  int max_cluster_size = 3;
  int fe_groups = 4;
  bool singleton_clusters = false;
  double alpha[3] = {-0.5, 0.08, 0.2};
  double noise = 20.0;
};

inline subsim::DesignMatrix synthetic_design(std::uint64_t seed, const SyntheticOptions& o = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> nrm(0.0, 1.0);
  std::uniform_int_distribution<int> size(1, o.singleton_clusters ? 1 : o.max_cluster_size);
  std::uniform_int_distribution<int> fe(0, o.fe_groups - 1);

  std::vector<double> fpl, female, age, p, pc, w, y;
  std::vector<int> group;
  std::vector<std::int64_t> cl;
  for (int c = 0; c < o.clusters; ++c) {
    const int m = size(rng);
    const double shock = nrm(rng);
    const double base_fpl = 138.0 + 262.0 * u(rng);
    const int g = fe(rng);
    for (int k = 0; k < m; ++k) {
      const double f = std::clamp(base_fpl + 10.0 * nrm(rng), 138.0, 400.0);
      const double sim = std::max(0.0, 0.6 * (f - 138.0) + 40.0 * nrm(rng));
      const double actual = std::max(0.0, sim * 0.7 + 15.0 * nrm(rng) + 10.0 * shock);
      fpl.push_back(f);
      female.push_back(u(rng) < 0.55 ? 1.0 : 0.0);
      age.push_back(18.0 + std::floor(47.0 * u(rng)));
      p.push_back(actual);
      pc.push_back(sim);
      w.push_back(0.5 + 1.5 * u(rng));
      group.push_back(g);
      cl.push_back(1000 + c);
      y.push_back(0.0);  // filled below
    }
  }
  subsim::DesignMatrix d;
  const auto n = Eigen::Index(fpl.size());
  d.norm = subsim::weighted_fpl_norm(fpl, w);
  d.outcome.resize(n);
  d.endogenous.resize(n, 3);
  d.instruments.resize(n, 3);
  d.exogenous.resize(n, 3);
  d.exogenous_names = {"female", "age", "fpl"};
  d.weight.resize(n);
  std::vector<double> fe_effect(std::size_t(o.fe_groups));
  for (auto& e : fe_effect) e = 10.0 * nrm(rng);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double z = d.norm.z(fpl[r]);
    const double above = fpl[r] > 200.0 ? 1.0 : 0.0;
    d.endogenous.row(r) << p[r], p[r] * z, p[r] * above;
    d.instruments.row(r) << pc[r], pc[r] * z, pc[r] * above;
    d.exogenous.row(r) << female[r], age[r], z;
    const double me = o.alpha[0] + o.alpha[1] * z + o.alpha[2] * above;
    d.outcome[r] = 60.0 + me * p[r] + 3.0 * female[r] + 0.1 * age[r] - 2.0 * z + fe_effect[group[r]] +
                   o.noise * nrm(rng);
    d.weight[r] = w[r];
  }
  d.fe_group = group;
  d.cluster = cl;
  d.fpl = fpl;
  d.year.assign(fpl.size(), 2023);
  d.person_id.resize(fpl.size());
  for (std::size_t i = 0; i < fpl.size(); ++i) d.person_id[i] = std::int64_t(i + 1);
  return d;
}

inline double rel_diff(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace oracle
