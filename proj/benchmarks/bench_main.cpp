// Throughput benchmarks for the hot loops: single-ring event application,
// the coupled pair, walker refreshes on top of it, and the measure kit
// that every replicate touches at setup.  Rates are reported as events/s
// (items_processed), so regressions show up independent of ring size.

#include <benchmark/benchmark.h>

#include "depsim/coupling.hpp"
#include "depsim/measures.hpp"
#include "depsim/microconcavity.hpp"
#include "depsim/rates.hpp"
#include "depsim/simulator.hpp"

#include <cstdint>
#include <optional>

using namespace depsim;

namespace {

void bench_ring(benchmark::State& state, const RateSpec& spec, double rho) {
  const int L = static_cast<int>(state.range(0));
  const double slice = 8.0;
  RingState s = init_stationary(spec, rho, L, RngStream(17, 0));
  std::uint64_t events = 0;
  for (auto _ : state) {
    events += run(s, spec, s.time + slice);
    benchmark::DoNotOptimize(s.occ.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(events));
}

void BM_ring_asep(benchmark::State& state) {
  bench_ring(state, make_asep(1.0), 0.5);
}

void BM_ring_zrp(benchmark::State& state) {
  bench_ring(state, make_zrp(GeomExpF{1.0}), 1.0);
}

void BM_ring_bricklayers(benchmark::State& state) {
  bench_ring(state, make_bricklayers_exp(1.0), 0.0);
}

// coupled pair with the lone stationary discrepancy, the second-class
// particle workload of the displacement experiments
void BM_coupled_pair(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  RateSpec spec = make_zrp(GeomExpF{1.0});
  CoupledState s = make_discrepancy_pair(spec, 1.0, L, RngStream(17, 1));
  std::uint64_t events = 0;
  for (auto _ : state) {
    events += run_coupled(s, spec, s.time + 4.0);
    benchmark::DoNotOptimize(s.configs[0].data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(events));
}

// walker pair riding a two-density background; measures the refresh
// overhead against BM_coupled_pair
void BM_walker_pair(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  RateSpec spec = make_zrp(GeomExpF{1.0});
  std::uint64_t stream = 2;
  auto fresh = [&] {
    RngStream bg(17, stream++);
    RngStream rf(17, stream++);
    return MicroState(make_two_density_pair(spec, 0.8, 1.0, L, bg), spec, rf);
  };
  std::optional<MicroState> ms(fresh());
  std::uint64_t events = 0;
  for (auto _ : state) {
    // restart well before the carriers can drift into the ring cut
    if (ms->time() > 0.1 * L) {
      state.PauseTiming();
      ms.emplace(fresh());
      state.ResumeTiming();
    }
    events += ms->run_to(ms->time() + 4.0);
    benchmark::DoNotOptimize(ms->y());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(events));
}

// setup cost paid once per replicate: invert the density map and build the
// tilted single-site law
void BM_tilted_build(benchmark::State& state) {
  RateSpec spec = make_zrp(GeomExpF{1.0});
  for (auto _ : state) {
    TiltedMeasure m = tilted(spec, theta_of_density(spec, 1.0));
    benchmark::DoNotOptimize(m.dist);
  }
}

void BM_stationary_draw(benchmark::State& state) {
  RateSpec spec = make_zrp(GeomExpF{1.0});
  DiscreteDist dist = tilted(spec, theta_of_density(spec, 1.0)).dist;
  RngStream rng(17, 4);
  long long acc = 0;
  for (auto _ : state) acc += dist.sample(rng);
  benchmark::DoNotOptimize(acc);
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}

} // namespace

BENCHMARK(BM_ring_asep)->Arg(256)->Arg(2048);
BENCHMARK(BM_ring_zrp)->Arg(256)->Arg(2048);
BENCHMARK(BM_ring_bricklayers)->Arg(256);
BENCHMARK(BM_coupled_pair)->Arg(256)->Arg(2048);
BENCHMARK(BM_walker_pair)->Arg(256);
BENCHMARK(BM_tilted_build);
BENCHMARK(BM_stationary_draw);

BENCHMARK_MAIN();
