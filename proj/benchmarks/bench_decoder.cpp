#include <benchmark/benchmark.h>

#include <vector>

#include "ldlc/decoder.hpp"
#include "ldlc/lattice.hpp"
#include "ldlc/rng.hpp"
#include "ldlc/sim.hpp"

namespace {

struct Fixture {
  ldlc::MagicSquareH h;
  std::vector<double> y;
  double sigma2;

  Fixture(int n, int d, double db) : h(ldlc::generate(n, d, 99)) {
    sigma2 = ldlc::sigma2_from_db(db);
    ldlc::CounterRng rng(ldlc::derive_stream(7, 1, 1));
    y.resize(static_cast<std::size_t>(n));
    for (auto& v : y) v = std::sqrt(sigma2) * rng.next_gaussian();
  }
};

void bm_mix_ops(benchmark::State& state) {
  ldlc::CounterRng rng(ldlc::derive_stream(5, 2, 0));
  ldlc::GaussianMixture a, b;
  for (int i = 0; i < 4; ++i) {
    a.components.push_back({rng.next_gaussian(), 0.5 + rng.next_unit(), 0.25});
    b.components.push_back({rng.next_gaussian(), 0.5 + rng.next_unit(), 0.25});
  }
  ldlc::DecoderParams p;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ldlc::convolve_pair(a, b, p));
    benchmark::DoNotOptimize(ldlc::product_pair(a, b, p));
  }
}
BENCHMARK(bm_mix_ops);

void bm_node_updates(benchmark::State& state) {
  Fixture f(100, 5, 4.0);
  ldlc::DecoderParams p;
  ldlc::DecoderState st = ldlc::init_channel_messages(f.y, f.sigma2, f.h);
  for (int row = 0; row < f.h.n; ++row) ldlc::check_node_update(st, row, p);
  for (auto _ : state) {
    ldlc::check_node_update(st, 0, p);
    ldlc::variable_node_update(st, 0, p);
  }
}
BENCHMARK(bm_node_updates);

void bm_decode(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Fixture f(n, 5, 4.0);
  ldlc::DecoderParams p;
  for (auto _ : state)
    benchmark::DoNotOptimize(ldlc::decode(f.y, f.h, f.sigma2, p));
  state.SetComplexityN(n);
}
BENCHMARK(bm_decode)->Arg(25)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond)->Complexity();

}  // namespace

BENCHMARK_MAIN();
