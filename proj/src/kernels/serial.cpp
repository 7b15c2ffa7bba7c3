#include "subsim/demand.hpp"
#include "subsim/kernels.hpp"

namespace subsim::kernels::serial {

std::vector<std::optional<SubsidyQuote>> quote_all(std::span<const Person> persons, const Regime& regime,
                                                   const Market& market, const PovertyGuidelines& guidelines) {
  std::vector<std::optional<SubsidyQuote>> out(persons.size());
  for (std::size_t i = 0; i < persons.size(); ++i) out[i] = try_quote(persons[i], regime, market, guidelines);
  return out;
}

std::vector<std::optional<Eigen::VectorXd>> bootstrap(const DesignMatrix& design, const detail::ClusterIndex& index,
                                                      std::uint64_t seed, std::size_t replicates) {
  std::vector<std::optional<Eigen::VectorXd>> out(replicates);
  for (std::size_t r = 0; r < replicates; ++r) out[r] = detail::bootstrap_replicate(design, index, seed, r);
  return out;
}

std::vector<double> losses(std::span<const double> me, std::span<const double> premium_change) {
  std::vector<double> out(me.size());
  for (std::size_t i = 0; i < me.size(); ++i) out[i] = detail::clamped_loss(me[i], premium_change[i]);
  return out;
}

}  // namespace subsim::kernels::serial
