#include <doctest.h>

#include <cmath>
#include <cstring>

#include "oracle.hpp"
#include "skyglow/markov.hpp"
#include "skyglow/stats.hpp"
#include "skyglow/synth.hpp"

using namespace skyglow;

namespace {

GridGeometry geom(std::uint32_t w, std::uint32_t h) {
  return GridGeometry::from_extent(0, w, 0, h, 1.0);
}

DemeanedDiffGrid plane_of(std::vector<double> values, int year = 2001) {
  DemeanedDiffGrid d;
  d.geometry = geom(static_cast<std::uint32_t>(values.size()), 1);
  d.year = year;
  d.values = std::move(values);
  d.active.assign(d.values.size(), 0);
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    if (!std::isnan(d.values[i])) {
      d.active[i] = 1;
      ++d.active_count;
    }
  }
  return d;
}

StateGrid states_of(const std::vector<std::uint8_t>& codes, int year) {
  StateGrid s;
  s.geometry = geom(static_cast<std::uint32_t>(codes.size()), 1);
  s.year = year;
  s.codes = codes;
  for (std::uint8_t c : codes) {
    if (c != kStateNone) ++s.state_counts[c - 1];
  }
  return s;
}

constexpr std::uint8_t N = kStateNeg, Z = kStateNeu, P = kStatePos;

const Kernel3 kBirthDeath{{{0.5, 0.5, 0.0}, {0.25, 0.5, 0.25}, {0.0, 0.5, 0.5}}};

}  // namespace

TEST_CASE("classification against the sigma threshold") {
  const StateGrid s = classify(plane_of({2.0, -1.6, 0.3}), 1.5);
  CHECK(s.codes[0] == P);
  CHECK(s.codes[1] == N);
  CHECK(s.codes[2] == Z);
  CHECK(s.stateful_count() == 3);
}

TEST_CASE("classification boundary is inclusive into neutral") {
  const StateGrid s = classify(plane_of({1.5, -1.5, 1.5000001}), 1.5);
  CHECK(s.codes[0] == Z);
  CHECK(s.codes[1] == Z);
  CHECK(s.codes[2] == P);
}

TEST_CASE("zero sigma sends every nonzero value to a signed state") {
  const StateGrid s = classify(plane_of({0.4, -0.4, 0.0}), 0.0);
  CHECK(s.codes[0] == P);
  CHECK(s.codes[1] == N);
  CHECK(s.codes[2] == Z);
  CHECK_THROWS_AS(classify(plane_of({1.0}), -1.0), ArgumentError);
}

TEST_CASE("states are assigned exactly on active pixels") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const StateGrid s = classify(plane_of({2.0, nan, -0.2, nan}), 1.0);
  CHECK(s.codes[1] == kStateNone);
  CHECK(s.codes[3] == kStateNone);
  CHECK(s.stateful_count() == 2);
}

TEST_CASE("scaling values and sigma together leaves states unchanged") {
  std::vector<double> values(500);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = oracle::normal(3, i);
  const StateGrid a = classify(plane_of(values), 1.0);
  std::vector<double> scaled;
  for (double v : values) scaled.push_back(4.0 * v);
  const StateGrid b = classify(plane_of(scaled), 4.0);
  CHECK(a.codes == b.codes);
}

TEST_CASE("transition tally over the six-pixel example") {
  // prev = [+,+,0,-,0,+], curr = [+,0,0,-,+,+]
  const StateGrid prev = states_of({P, P, Z, N, Z, P}, 2001);
  const StateGrid curr = states_of({P, Z, Z, N, P, P}, 2002);
  const TransitionMatrix m = estimate_transitions(prev, curr);
  CHECK(m.counts[2][2] == 2);  // + -> +
  CHECK(m.counts[2][1] == 1);  // + -> 0
  CHECK(m.p[2][2] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(m.p[2][1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(m.p[1][1] == doctest::Approx(0.5));
  CHECK(m.p[1][2] == doctest::Approx(0.5));
  CHECK(m.p[0][0] == 1.0);
  CHECK(m.total_pairs() == 6);
  for (int f = 0; f < 3; ++f) {
    if (m.row_total(f) == 0) continue;
    CHECK(m.p[f][0] + m.p[f][1] + m.p[f][2] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("identical state grids give a diagonal matrix on occupied rows") {
  const StateGrid prev = states_of({P, N, Z, P, kStateNone}, 2001);
  const StateGrid curr = states_of({P, N, Z, P, kStateNone}, 2002);
  const TransitionMatrix m = estimate_transitions(prev, curr);
  CHECK(m.p[0][0] == 1.0);
  CHECK(m.p[1][1] == 1.0);
  CHECK(m.p[2][2] == 1.0);
}

TEST_CASE("pixels without a state in both years contribute no pair") {
  const StateGrid prev = states_of({P, kStateNone, Z}, 2001);
  const StateGrid curr = states_of({kStateNone, N, Z}, 2002);
  const TransitionMatrix m = estimate_transitions(prev, curr);
  CHECK(m.total_pairs() == 1);
  CHECK(m.counts[1][1] == 1);
  CHECK(std::isnan(m.p[2][0]));  // + row never observed
}

TEST_CASE("disjoint state grids raise an empty-estimate error") {
  const StateGrid prev = states_of({P, kStateNone}, 2001);
  const StateGrid curr = states_of({kStateNone, N}, 2002);
  CHECK_THROWS_AS(estimate_transitions(prev, curr), EmptyEstimateError);
}

TEST_CASE("simulated sequences recover the planted kernel") {
  const std::size_t n_pixels = 500000;
  const std::size_t n_years = 3;  // two transitions per pixel
  const auto seq = gen_state_sequences(kBirthDeath, n_pixels, n_years, 77);
  std::array<std::array<std::int64_t, 3>, 3> counts{};
  for (std::size_t p = 0; p < n_pixels; ++p) {
    for (std::size_t t = 1; t < n_years; ++t) {
      ++counts[seq[p * n_years + t - 1]][seq[p * n_years + t]];
    }
  }
  const TransitionMatrix m = transitions_from_counts(2002, Scope::world(), counts);
  for (int f = 0; f < 3; ++f) {
    for (int t = 0; t < 3; ++t) {
      CHECK(std::abs(m.p[f][t] - kBirthDeath[f][t]) < 0.01);
    }
  }
}

TEST_CASE("stationary limit of a rank-one chain is itself") {
  std::array<std::array<std::int64_t, 3>, 3> counts{};
  for (int f = 0; f < 3; ++f) {
    counts[f][0] = 2;
    counts[f][1] = 5;
    counts[f][2] = 3;
  }
  const StationaryResult s =
      stationary(transitions_from_counts(2001, Scope::world(), counts));
  CHECK(s.converged);
  CHECK(s.ergodic);
  CHECK(s.pi[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(s.pi[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.pi[2] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(s.a_mm == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(s.a_00 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.a_pp == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("stationary law of the birth-death chain by detailed balance") {
  TransitionMatrix m;
  m.year = 2001;
  m.p = kBirthDeath;
  for (int f = 0; f < 3; ++f) {
    for (int t = 0; t < 3; ++t) {
      m.counts[f][t] = static_cast<std::int64_t>(kBirthDeath[f][t] * 400);
    }
  }
  const StationaryResult s = stationary(m);
  CHECK(s.converged);
  CHECK(s.ergodic);
  CHECK(std::abs(s.pi[0] - 0.25) < 1e-10);
  CHECK(std::abs(s.pi[1] - 0.5) < 1e-10);
  CHECK(std::abs(s.pi[2] - 0.25) < 1e-10);

  const auto expect = oracle::stationary_3x3(kBirthDeath);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(s.pi[k] - expect[k]) < 1e-10);

  // Symmetric chain: no growth-decay asymmetry.
  CHECK(std::abs(gap(s)) < 1e-10);
}

TEST_CASE("identity chain converges without ergodicity") {
  std::array<std::array<std::int64_t, 3>, 3> counts{};
  for (int f = 0; f < 3; ++f) counts[f][f] = 10;
  const StationaryResult s =
      stationary(transitions_from_counts(2001, Scope::world(), counts));
  CHECK(s.converged);
  CHECK_FALSE(s.ergodic);
  CHECK(s.a_pp == 1.0);
  CHECK(s.a_00 == 1.0);
  CHECK(s.a_mm == 1.0);
  CHECK(std::isnan(gap(s)));
}

TEST_CASE("unestimated rows make the chain undefined") {
  std::array<std::array<std::int64_t, 3>, 3> counts{};
  counts[1][1] = 5;
  counts[2][2] = 5;
  CHECK_THROWS_AS(stationary(transitions_from_counts(2001, Scope::world(), counts)),
                  UndefinedChainError);
}

TEST_CASE("random ergodic chains satisfy the fixed-point equations") {
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    TransitionMatrix m;
    m.year = 2001;
    for (int f = 0; f < 3; ++f) {
      double row_sum = 0.0;
      for (int t = 0; t < 3; ++t) {
        const double u = 0.02 + oracle::uniform01(trial * 31 + 7, 3 * f + t);
        m.p[f][t] = u;
        row_sum += u;
      }
      for (int t = 0; t < 3; ++t) {
        m.p[f][t] /= row_sum;
        m.counts[f][t] = 100;
      }
    }
    const StationaryResult s = stationary(m);
    REQUIRE(s.converged);
    REQUIRE(s.ergodic);
    // pi P = pi
    for (int j = 0; j < 3; ++j) {
      const double pj = s.pi[0] * m.p[0][j] + s.pi[1] * m.p[1][j] + s.pi[2] * m.p[2][j];
      CHECK(std::abs(pj - s.pi[j]) < 1e-10);
    }
    CHECK(std::abs(s.pi[0] + s.pi[1] + s.pi[2] - 1.0) < 1e-12);
    // Rank-one limit: diagonals equal pi componentwise.
    CHECK(std::abs(s.a_mm - s.pi[0]) < 1e-10);
    CHECK(std::abs(s.a_00 - s.pi[1]) < 1e-10);
    CHECK(std::abs(s.a_pp - s.pi[2]) < 1e-10);
  }
}

TEST_CASE("published-magnitude gap arithmetic") {
  StationaryResult world9306;
  world9306.converged = world9306.ergodic = true;
  world9306.a_pp = 0.099;
  world9306.a_mm = 0.083;
  CHECK(100.0 * gap(world9306) == doctest::Approx(1.6).epsilon(1e-12));

  StationaryResult us0713;
  us0713.converged = us0713.ergodic = true;
  us0713.a_pp = 0.116;
  us0713.a_mm = 0.094;
  CHECK(100.0 * gap(us0713) == doctest::Approx(2.2).epsilon(1e-12));
}

TEST_CASE("period means skip non-converged entries") {
  std::vector<StationaryResult> series(3);
  series[0].year = 2001;
  series[0].converged = series[0].ergodic = true;
  series[0].a_pp = 0.10;
  series[0].a_00 = 0.80;
  series[0].a_mm = 0.10;
  series[1].year = 2002;
  series[1].converged = false;
  series[1].a_pp = series[1].a_00 = series[1].a_mm =
      std::numeric_limits<double>::quiet_NaN();
  series[2].year = 2003;
  series[2].converged = series[2].ergodic = true;
  series[2].a_pp = 0.12;
  series[2].a_00 = 0.78;
  series[2].a_mm = 0.10;

  const PeriodMeans one = period_means(series, {2001, 2001});
  CHECK(one.a_pp == doctest::Approx(0.10));
  CHECK(one.n_used == 1);

  const PeriodMeans both = period_means(series, {2001, 2003});
  CHECK(both.n_used == 2);
  CHECK(both.a_pp == doctest::Approx(0.11).epsilon(1e-12));

  const PeriodMeans none = period_means(series, {2002, 2002});
  CHECK(none.n_used == 0);
  CHECK(std::isnan(none.a_pp));
}

TEST_CASE("streaming classification matches the materialized path") {
  const GridGeometry g = geom(40, 30);
  std::vector<std::uint8_t> y0(g.pixel_count()), y1(g.pixel_count()),
      y2(g.pixel_count());
  for (std::size_t i = 0; i < y0.size(); ++i) {
    y0[i] = static_cast<std::uint8_t>(20 + oracle::mix(i) % 20);
    y1[i] = static_cast<std::uint8_t>(20 + oracle::mix(i + 1234567) % 20);
    y2[i] = static_cast<std::uint8_t>(20 + oracle::mix(i + 7654321) % 20);
  }
  const RasterGrid g0(g, 2000, y0), g1(g, 2001, y1), g2(g, 2002, y2);
  const BandPlan plan{g.height, 8};

  // Materialized route, banded the same way as the streaming scans.
  const DiffGrid d1 = diff_year(g0, g1);
  const DemeanedDiffGrid m1 = demean(d1);
  const double s1 = cross_sectional_sigma(m1, 8).sigma;
  const DiffGrid d2 = diff_year(g1, g2);
  const DemeanedDiffGrid m2 = demean(d2);
  const double s2 = cross_sectional_sigma(m2, 8).sigma;
  const TransitionMatrix expected =
      estimate_transitions(classify(m1, s1), classify(m2, s2));

  // Streaming route, both thread counts.
  for (int threads : {1, 3}) {
    PackedStatePlane states(g.width, g.height);
    const PairSums sums1 = scan_pair_sums(g0, g1, ScopeFilter::world(), plan, threads);
    const double ss1 =
        scan_squared_sum(g0, g1, ScopeFilter::world(), sums1, plan, threads);
    const double sig1 = std::sqrt(ss1 / static_cast<double>(sums1.active_count));
    scan_classify(g0, g1, ScopeFilter::world(), sums1, sig1, states, plan, threads);

    const PairSums sums2 = scan_pair_sums(g1, g2, ScopeFilter::world(), plan, threads);
    const double ss2 =
        scan_squared_sum(g1, g2, ScopeFilter::world(), sums2, plan, threads);
    const double sig2 = std::sqrt(ss2 / static_cast<double>(sums2.active_count));
    const TransitionCounts tc =
        scan_classify(g1, g2, ScopeFilter::world(), sums2, sig2, states, plan, threads);

    CHECK(sig2 == s2);
    CHECK(tc.counts == expected.counts);
  }
}
