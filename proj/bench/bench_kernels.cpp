// Serial vs OpenMP kernels on a scaled copy of the shipped population.

#include <benchmark/benchmark.h>

#include <random>

#include "subsim/demand.hpp"
#include "subsim/kernels.hpp"
#include "subsim/population.hpp"
#include "subsim/premium_engine.hpp"
#include "subsim/regimes.hpp"

using namespace subsim;

namespace {

struct Fixture {
  RegimeBook book = load_regime_book(SUBSIM_SOURCE_DIR "/config/regimes.json");
  Population pop;
  std::optional<Market> market;
  DesignMatrix design;
  detail::ClusterIndex index;
  std::vector<double> me, dp;

  Fixture() {
    PopulationSpec spec = load_population_spec(SUBSIM_SOURCE_DIR "/config/population.json");
    for (auto& y : spec.years) {
      y.enrollees /= 10;
      y.potential_population /= 10;
    }
    pop = generate(spec);
    market.emplace(pop.plans);
    const auto a = quote_population(pop.persons, book.find("IRA"), *market, book.guidelines);
    const auto b = quote_population(pop.persons, book.find("ACA"), *market, book.guidelines);
    design = build_design(pop.persons, a, b);
    index = detail::index_clusters(design.cluster);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 1'000'000; ++i) {
      me.push_back(-u(rng));
      dp.push_back(300 * u(rng));
    }
  }
};

Fixture& fx() {
  static Fixture f;
  return f;
}

void BM_QuoteSerial(benchmark::State& s) {
  auto& f = fx();
  for (auto _ : s)
    benchmark::DoNotOptimize(kernels::serial::quote_all(f.pop.persons, f.book.find("IRA"), *f.market, f.book.guidelines));
  s.SetItemsProcessed(s.iterations() * std::int64_t(f.pop.persons.size()));
}
void BM_QuoteOmp(benchmark::State& s) {
  auto& f = fx();
  for (auto _ : s)
    benchmark::DoNotOptimize(kernels::omp::quote_all(f.pop.persons, f.book.find("IRA"), *f.market, f.book.guidelines));
  s.SetItemsProcessed(s.iterations() * std::int64_t(f.pop.persons.size()));
}
void BM_BootstrapSerial(benchmark::State& s) {
  auto& f = fx();
  for (auto _ : s) benchmark::DoNotOptimize(kernels::serial::bootstrap(f.design, f.index, 1, 8));
}
void BM_BootstrapOmp(benchmark::State& s) {
  auto& f = fx();
  for (auto _ : s) benchmark::DoNotOptimize(kernels::omp::bootstrap(f.design, f.index, 1, 8));
}
void BM_LossesSerial(benchmark::State& s) {
  auto& f = fx();
  for (auto _ : s) benchmark::DoNotOptimize(kernels::serial::losses(f.me, f.dp));
}
void BM_LossesOmp(benchmark::State& s) {
  auto& f = fx();
  for (auto _ : s) benchmark::DoNotOptimize(kernels::omp::losses(f.me, f.dp));
}

}  // namespace

BENCHMARK(BM_QuoteSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_QuoteOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BootstrapSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BootstrapOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LossesSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LossesOmp)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
