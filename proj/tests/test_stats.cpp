#include <doctest.h>

#include <cmath>
#include <cstring>

#include "oracle.hpp"
#include "skyglow/stats.hpp"

using namespace skyglow;

namespace {

GridGeometry geom(std::uint32_t w, std::uint32_t h) {
  return GridGeometry::from_extent(0, w, 0, h, 1.0);
}

// Wraps explicit demeaned values (NaN = inactive) into the plane type.
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

Panel panel_of(const GridGeometry& g, int first_year,
               std::vector<std::vector<std::uint8_t>> years) {
  std::vector<RasterGrid> grids;
  int year = first_year;
  for (auto& v : years) grids.emplace_back(g, year++, std::move(v));
  return Panel(std::move(grids));
}

}  // namespace

TEST_CASE("cross-sectional sigma of the demeaning example") {
  const DemeanedDiffGrid d = plane_of({2.0 / 3.0, -7.0 / 3.0, 5.0 / 3.0});
  const SigmaResult r = cross_sectional_sigma(d);
  CHECK(r.n == 3);
  CHECK(r.sigma == doctest::Approx(std::sqrt(78.0 / 27.0)).epsilon(1e-14));
  CHECK(r.sigma == doctest::Approx(1.699673).epsilon(1e-6));
  CHECK(r.sigma ==
        doctest::Approx(oracle::sigma({{0, 2.0 / 3.0}, {1, -7.0 / 3.0}, {2, 5.0 / 3.0}}))
            .epsilon(1e-14));
}

TEST_CASE("sigma degenerate cases") {
  CHECK(cross_sectional_sigma(plane_of({0.0, 0.0, 0.0})).sigma == 0.0);
  CHECK(cross_sectional_sigma(plane_of({1.75, -1.75})).sigma ==
        doctest::Approx(1.75).epsilon(1e-15));
  CHECK_THROWS_AS(cross_sectional_sigma(plane_of({1.0})), InsufficientDataError);
}

TEST_CASE("sigma series: constant panel yields NaN entries") {
  const GridGeometry g = geom(3, 1);
  const Panel panel = panel_of(g, 2000, {{5, 6, 7}, {5, 6, 7}, {5, 6, 7}});
  const SigmaSeries s = sigma_series(panel, nullptr, Scope::world());
  REQUIRE(s.entries.size() == 2);
  for (const SigmaEntry& e : s.entries) {
    CHECK(std::isnan(e.sigma));
    CHECK(e.n == 0);
  }
}

TEST_CASE("sigma scales linearly with the deltas") {
  const GridGeometry g = geom(6, 1);
  const Panel p1 = panel_of(g, 2000, {{20, 20, 20, 20, 20, 20},
                                      {22, 19, 23, 20, 18, 21}});
  const Panel p2 = panel_of(g, 2000, {{20, 20, 20, 20, 20, 20},
                                      {24, 18, 26, 20, 16, 22}});
  const double s1 = sigma_series(p1, nullptr, Scope::world()).entries[0].sigma;
  const double s2 = sigma_series(p2, nullptr, Scope::world()).entries[0].sigma;
  CHECK(s2 == doctest::Approx(2.0 * s1).epsilon(1e-12));
}

TEST_CASE("moments of the symmetric two-point law") {
  std::vector<double> v;
  for (int i = 0; i < 500; ++i) {
    v.push_back(-1.0);
    v.push_back(1.0);
  }
  const MomentSummary m = moments(v);
  CHECK(m.mean == 0.0);
  CHECK(m.std == 1.0);
  CHECK(m.skewness == 0.0);
  CHECK(m.excess_kurtosis == -2.0);
}

TEST_CASE("moments preconditions and degenerate dispersion") {
  CHECK_THROWS_AS(moments(std::vector<double>{1.0, 2.0, 3.0}), InsufficientDataError);
  const MomentSummary flat = moments(std::vector<double>{2.0, 2.0, 2.0, 2.0});
  CHECK(flat.std == 0.0);
  CHECK(std::isnan(flat.skewness));
  CHECK(std::isnan(flat.excess_kurtosis));
}

TEST_CASE("moments of a large seeded normal sample") {
  std::vector<double> v(1000000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = oracle::normal(20240901, i);
  const MomentSummary m = moments(v);
  CHECK(std::abs(m.mean) < 0.005);
  CHECK(m.std == doctest::Approx(1.0).epsilon(0.01));
  CHECK(std::abs(m.skewness) < 0.01);
  CHECK(std::abs(m.excess_kurtosis) < 0.05);

  const oracle::Moments om = oracle::moments(v);
  CHECK(m.skewness == doctest::Approx(om.skew).epsilon(1e-9));
  CHECK(m.excess_kurtosis == doctest::Approx(om.exkurt).epsilon(1e-9));
}

TEST_CASE("moments shape statistics are affine invariant") {
  std::vector<double> v(5000), w(5000);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = oracle::normal(7, i) + 0.3 * oracle::normal(8, i) * oracle::normal(9, i);
    w[i] = 10.0 + 2.5 * v[i];
  }
  const MomentSummary mv = moments(v);
  const MomentSummary mw = moments(w);
  CHECK(mw.mean == doctest::Approx(10.0 + 2.5 * mv.mean).epsilon(1e-12));
  CHECK(mw.skewness == doctest::Approx(mv.skewness).epsilon(1e-10));
  CHECK(mw.excess_kurtosis == doctest::Approx(mv.excess_kurtosis).epsilon(1e-10));
}

TEST_CASE("empirical quantile places order statistics at (k-0.5)/n") {
  const std::vector<double> sorted{1.0, 2.0, 3.0, 4.0};
  CHECK(empirical_quantile(sorted, 0.125) == 1.0);
  CHECK(empirical_quantile(sorted, 0.375) == 2.0);
  CHECK(empirical_quantile(sorted, 0.875) == 4.0);
  CHECK(empirical_quantile(sorted, 0.25) == 1.5);
  CHECK(empirical_quantile(sorted, 0.0) == 1.0);
  CHECK(empirical_quantile(sorted, 1.0) == 4.0);
}

TEST_CASE("qq of a collection against itself lies on the diagonal") {
  std::vector<double> a(1000);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = oracle::normal(42, i);
  for (const auto& [qa, qb] : qq_data(a, a, 99)) CHECK(qa == qb);
}

TEST_CASE("qq of a doubled collection lies on the slope-2 line") {
  std::vector<double> a(777), b(777);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = oracle::normal(43, i);
    b[i] = 2.0 * a[i];
  }
  for (const auto& [qa, qb] : qq_data(a, b, 51)) CHECK(qb == 2.0 * qa);
}

TEST_CASE("qq of two samples from one law stays near the diagonal") {
  std::vector<double> a(100000), b(100000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = oracle::normal(1001, i);
    b[i] = oracle::normal(2002, i);
  }
  double max_diff = 0.0;
  for (const auto& [qa, qb] : qq_data(a, b, 99)) {
    max_diff = std::max(max_diff, std::abs(qa - qb));
  }
  CHECK(max_diff < 0.1);
}

TEST_CASE("qq input validation") {
  const std::vector<double> empty;
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(qq_data(empty, one, 9), ArgumentError);
  CHECK_THROWS_AS(qq_data(one, one, 1), ArgumentError);
}

TEST_CASE("pearson identities") {
  std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  std::vector<double> y{2.0, 1.0, 4.0, 3.0};
  CHECK(pearson(x, x) == 1.0);
  std::vector<double> neg;
  for (double v : x) neg.push_back(-v);
  CHECK(pearson(x, neg) == -1.0);
  CHECK(pearson(x, y) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(pearson(x, y) == doctest::Approx(oracle::pearson(x, y)).epsilon(1e-15));
}

TEST_CASE("pearson is invariant under positive affine maps") {
  std::vector<double> x(200), y(200);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = oracle::normal(5, i);
    y[i] = 0.4 * x[i] + oracle::normal(6, i);
  }
  const double r = pearson(x, y);
  std::vector<double> xs;
  for (double v : x) xs.push_back(3.0 + 7.0 * v);
  CHECK(pearson(xs, y) == doctest::Approx(r).epsilon(1e-12));
  CHECK(r >= -1.0);
  CHECK(r <= 1.0);
}

TEST_CASE("pearson input validation") {
  std::vector<double> x{1.0, 1.0, 1.0};
  std::vector<double> y{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(pearson(x, y), ArgumentError);          // zero variance
  std::vector<double> shorter{1.0, 2.0};
  CHECK_THROWS_AS(pearson(shorter, y), ArgumentError);    // length mismatch
  std::vector<double> single{1.0};
  CHECK_THROWS_AS(pearson(single, single), InsufficientDataError);
}

TEST_CASE("growth scatter pairs period sums per pixel") {
  const GridGeometry g = geom(2, 1);
  // Pixel 0 demeaned: year1 +2, year2 -1; pixel 1 is the mirror.
  const Panel panel = panel_of(g, 2000, {{20, 20}, {22, 18}, {21, 19}});
  const ScatterSet s = growth_scatter(panel, nullptr, Scope::world(),
                                      {2001, 2001}, {2002, 2002});
  REQUIRE(s.points.size() == 2);
  CHECK(s.points[0].i == 0);
  CHECK(s.points[0].a == doctest::Approx(2.0));
  CHECK(s.points[0].b == doctest::Approx(-1.0));
  CHECK(s.points[0].total == doctest::Approx(1.0));
  CHECK(s.points[1].a == doctest::Approx(-2.0));
  CHECK(s.points[1].total == doctest::Approx(-1.0));
}

TEST_CASE("growth scatter drops pixels inactive in both periods") {
  const GridGeometry g = geom(3, 1);
  const Panel panel = panel_of(g, 2000, {{20, 20, 20}, {22, 18, 20}, {21, 19, 20}});
  const ScatterSet s = growth_scatter(panel, nullptr, Scope::world(),
                                      {2001, 2001}, {2002, 2002});
  CHECK(s.points.size() == 2);  // pixel 2 never moves
  for (const ScatterPoint& p : s.points) CHECK(p.i != 2);
}

TEST_CASE("growth scatter matches a direct oracle on a random panel") {
  const GridGeometry g = geom(6, 3);
  std::vector<std::vector<std::uint8_t>> years;
  std::vector<std::uint8_t> level(g.pixel_count(), 30);
  years.push_back(level);
  for (int t = 1; t <= 4; ++t) {
    for (std::size_t i = 0; i < level.size(); ++i) {
      const int delta =
          static_cast<int>(oracle::mix(static_cast<std::uint64_t>(t) * 917 + i) % 5) -
          2;
      level[i] = static_cast<std::uint8_t>(std::clamp(int(level[i]) + delta, 0, 63));
    }
    years.push_back(level);
  }
  const Panel panel = panel_of(g, 2000, years);

  std::vector<std::vector<std::optional<int>>> deltas;
  for (std::size_t t = 1; t < years.size(); ++t) {
    std::vector<std::optional<int>> dy;
    for (std::size_t i = 0; i < years[t].size(); ++i) {
      dy.push_back(int(years[t][i]) - int(years[t - 1][i]));
    }
    deltas.push_back(std::move(dy));
  }
  const auto sum_a = oracle::cumulative({deltas[0], deltas[1]});
  const auto sum_b = oracle::cumulative({deltas[2], deltas[3]});
  const auto total = oracle::cumulative(deltas);

  const ScatterSet s = growth_scatter(panel, nullptr, Scope::world(),
                                      {2001, 2002}, {2003, 2004});
  std::size_t expected_points = 0;
  for (std::size_t i = 0; i < g.pixel_count(); ++i) {
    if (sum_a.count(i) || sum_b.count(i)) ++expected_points;
  }
  CHECK(s.points.size() == expected_points);
  for (const ScatterPoint& p : s.points) {
    const std::size_t idx = g.index_of(p.i, p.j);
    const double ea = sum_a.count(idx) ? sum_a.at(idx) : 0.0;
    const double eb = sum_b.count(idx) ? sum_b.at(idx) : 0.0;
    CHECK(p.a == doctest::Approx(ea).epsilon(1e-12));
    CHECK(p.b == doctest::Approx(eb).epsilon(1e-12));
    const double et = total.count(idx) ? total.at(idx) : 0.0;
    CHECK(p.total == doctest::Approx(et).epsilon(1e-12));
  }
}

TEST_CASE("growth scatter rejects overlapping periods") {
  const GridGeometry g = geom(2, 1);
  const Panel panel = panel_of(g, 2000, {{20, 20}, {22, 18}, {21, 19}});
  CHECK_THROWS_AS(growth_scatter(panel, nullptr, Scope::world(), {2001, 2002},
                                 {2002, 2002}),
                  ArgumentError);
}
