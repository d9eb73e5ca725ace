#include <benchmark/benchmark.h>

#include "skyglow/markov.hpp"
#include "skyglow/stats.hpp"
#include "skyglow/streaming.hpp"
#include "skyglow/synth.hpp"

using namespace skyglow;

namespace {

// A moderately sized synthetic pair shared across the streaming benchmarks.
struct PairFixture {
  PanelSpec spec;
  RasterGrid prev;
  RasterGrid curr;

  static PairFixture make(std::uint32_t width, std::uint32_t height) {
    PanelSpec spec;
    spec.geometry = GridGeometry::from_extent(0, width, 0, height, 1.0);
    spec.year_start = 2000;
    spec.year_end = 2001;
    spec.seed = 42;
    spec.active_fraction = {0.03};
    spec.sigma = SigmaSchedule::constant(3.0);
    PanelGenerator gen(spec);
    RasterGrid prev = gen.take_year();
    RasterGrid curr = gen.take_year();
    return PairFixture{spec, std::move(prev), std::move(curr)};
  }
};

const PairFixture& fixture() {
  static const PairFixture f = PairFixture::make(4320, 1680);
  return f;
}

void BM_ScanPairSums(benchmark::State& state) {
  const PairFixture& f = fixture();
  const BandPlan plan{f.prev.geometry().height, 256};
  for (auto _ : state) {
    PairSums sums = scan_pair_sums(f.prev, f.curr, ScopeFilter::world(), plan,
                                   static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(sums);
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(f.prev.geometry().pixel_count()));
}
BENCHMARK(BM_ScanPairSums)->Arg(1)->Arg(2)->Arg(4);

void BM_ScanSquaredSum(benchmark::State& state) {
  const PairFixture& f = fixture();
  const BandPlan plan{f.prev.geometry().height, 256};
  const PairSums sums = scan_pair_sums(f.prev, f.curr, ScopeFilter::world(), plan, 1);
  for (auto _ : state) {
    double ss = scan_squared_sum(f.prev, f.curr, ScopeFilter::world(), sums, plan,
                                 static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(ss);
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(f.prev.geometry().pixel_count()));
}
BENCHMARK(BM_ScanSquaredSum)->Arg(1)->Arg(2)->Arg(4);

void BM_ScanClassify(benchmark::State& state) {
  const PairFixture& f = fixture();
  const BandPlan plan{f.prev.geometry().height, 256};
  const PairSums sums = scan_pair_sums(f.prev, f.curr, ScopeFilter::world(), plan, 1);
  const double ss = scan_squared_sum(f.prev, f.curr, ScopeFilter::world(), sums, plan, 1);
  const double sigma = std::sqrt(ss / static_cast<double>(sums.active_count));
  PackedStatePlane states(f.prev.geometry().width, f.prev.geometry().height);
  for (auto _ : state) {
    TransitionCounts tc = scan_classify(f.prev, f.curr, ScopeFilter::world(), sums,
                                        sigma, states, plan,
                                        static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(tc);
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(f.prev.geometry().pixel_count()));
}
BENCHMARK(BM_ScanClassify)->Arg(1)->Arg(2)->Arg(4);

void BM_StationarySolve(benchmark::State& state) {
  std::array<std::array<std::int64_t, 3>, 3> counts{};
  for (int i = 0; i < 3; ++i) {
    counts[i][0] = 50 + 13 * i;
    counts[i][1] = 400;
    counts[i][2] = 60 - 9 * i;
  }
  const TransitionMatrix m = transitions_from_counts(2001, Scope::world(), counts);
  for (auto _ : state) {
    StationaryResult s = stationary(m);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_StationarySolve);

void BM_Moments(benchmark::State& state) {
  std::vector<double> values(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<double>(rng::uniform(1, i, 0, 0)) - 0.5;
  }
  for (auto _ : state) {
    MomentSummary m = moments(values);
    benchmark::DoNotOptimize(m);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Moments)->Arg(1 << 16)->Arg(1 << 20);

}  // namespace

BENCHMARK_MAIN();
