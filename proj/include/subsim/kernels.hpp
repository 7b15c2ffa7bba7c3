#pragma once

// Data-parallel loops. Each kernel exists twice: a plain serial loop kept as
// the reference, and an OpenMP loop. Per-item work is shared, every item
// writes its own output slot, and reductions happen afterwards in index
// order, so both variants are bit-identical.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "subsim/premium_engine.hpp"

namespace subsim {

struct DesignMatrix;

namespace detail {

/// Row-to-cluster map for resampling whole clusters.
struct ClusterIndex {
  std::vector<int> row_cluster;  // dense cluster id per row
  int clusters = 0;
};
ClusterIndex index_clusters(std::span<const std::int64_t> cluster);

/// One cluster-bootstrap replicate; nullopt if the resample is degenerate.
std::optional<Eigen::VectorXd> bootstrap_replicate(const DesignMatrix& design, const ClusterIndex& index,
                                                   std::uint64_t seed, std::size_t replicate);

/// Coverage probability lost (0..1) when premium rises by `premium_change`
/// with marginal effect `me` in pp per dollar, from a baseline of 100%.
double clamped_loss(double me, double premium_change) noexcept;

}  // namespace detail

namespace kernels {

namespace serial {
std::vector<std::optional<SubsidyQuote>> quote_all(std::span<const Person> persons, const Regime& regime,
                                                   const Market& market, const PovertyGuidelines& guidelines);
std::vector<std::optional<Eigen::VectorXd>> bootstrap(const DesignMatrix& design, const detail::ClusterIndex& index,
                                                      std::uint64_t seed, std::size_t replicates);
std::vector<double> losses(std::span<const double> me, std::span<const double> premium_change);
}  // namespace serial

namespace omp {
std::vector<std::optional<SubsidyQuote>> quote_all(std::span<const Person> persons, const Regime& regime,
                                                   const Market& market, const PovertyGuidelines& guidelines);
std::vector<std::optional<Eigen::VectorXd>> bootstrap(const DesignMatrix& design, const detail::ClusterIndex& index,
                                                      std::uint64_t seed, std::size_t replicates);
std::vector<double> losses(std::span<const double> me, std::span<const double> premium_change);
}  // namespace omp

}  // namespace kernels
}  // namespace subsim
