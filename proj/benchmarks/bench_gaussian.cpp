#include <benchmark/benchmark.h>

#include "ldlc/gaussian.hpp"
#include "ldlc/rng.hpp"

namespace {

ldlc::GaussianMixture make_mixture(std::size_t k, std::uint64_t seed) {
  ldlc::CounterRng rng(ldlc::derive_stream(seed, 0xbe, 0));
  ldlc::GaussianMixture m;
  for (std::size_t i = 0; i < k; ++i)
    m.components.push_back({3.0 * rng.next_gaussian(), 0.2 + rng.next_unit(),
                            0.1 + rng.next_unit()});
  return ldlc::normalize(m);
}

void bm_gql_pair(benchmark::State& state) {
  const auto m = make_mixture(2, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(ldlc::gql_pair(m.components[0], m.components[1]));
}
BENCHMARK(bm_gql_pair);

void bm_reduce(benchmark::State& state) {
  const auto m = make_mixture(static_cast<std::size_t>(state.range(0)), 2);
  const ldlc::ReductionParams params{0.5, 6};
  for (auto _ : state) benchmark::DoNotOptimize(ldlc::reduce(m, params));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(bm_reduce)->RangeMultiplier(2)->Range(8, 64)->Complexity();

void bm_density_at(benchmark::State& state) {
  const auto m = make_mixture(6, 3);
  double z = -3.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ldlc::density_at(m, z));
    z += 1e-3;
  }
}
BENCHMARK(bm_density_at);

}  // namespace
