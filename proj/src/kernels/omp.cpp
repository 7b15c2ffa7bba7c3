#include "subsim/demand.hpp"
#include "subsim/kernels.hpp"

#ifdef SUBSIM_HAVE_OPENMP
#include <omp.h>
#endif

namespace subsim {

int max_threads() noexcept {
#ifdef SUBSIM_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace kernels::omp {

std::vector<std::optional<SubsidyQuote>> quote_all(std::span<const Person> persons, const Regime& regime,
                                                   const Market& market, const PovertyGuidelines& guidelines) {
  std::vector<std::optional<SubsidyQuote>> out(persons.size());
  const auto n = static_cast<std::ptrdiff_t>(persons.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = try_quote(persons[i], regime, market, guidelines);
  return out;
}

std::vector<std::optional<Eigen::VectorXd>> bootstrap(const DesignMatrix& design, const detail::ClusterIndex& index,
                                                      std::uint64_t seed, std::size_t replicates) {
  std::vector<std::optional<Eigen::VectorXd>> out(replicates);
  const auto n = static_cast<std::ptrdiff_t>(replicates);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t r = 0; r < n; ++r) out[r] = detail::bootstrap_replicate(design, index, seed, std::size_t(r));
  return out;
}

std::vector<double> losses(std::span<const double> me, std::span<const double> premium_change) {
  std::vector<double> out(me.size());
  const auto n = static_cast<std::ptrdiff_t>(me.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = detail::clamped_loss(me[i], premium_change[i]);
  return out;
}

}  // namespace kernels::omp
}  // namespace subsim
