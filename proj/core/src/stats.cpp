#include "skyglow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "skyglow/streaming.hpp"

namespace skyglow {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Band-structured compensated sum over the active values of a plane. Bands
// follow grid rows so the result matches the streaming path bit-for-bit.
double banded_squared_sum(const DemeanedDiffGrid& d, std::uint32_t chunk_rows) {
  const BandPlan plan{d.geometry.height, chunk_rows};
  CompensatedSum total;
  const std::uint32_t width = d.geometry.width;
  for (std::size_t band = 0; band < plan.band_count(); ++band) {
    CompensatedSum acc;
    const std::size_t begin = std::size_t(plan.row_begin(band)) * width;
    const std::size_t end = std::size_t(plan.row_end(band)) * width;
    for (std::size_t i = begin; i < end; ++i) {
      if (!d.active[i]) continue;
      acc.add(d.values[i] * d.values[i]);
    }
    total.merge(acc);
  }
  return total.value();
}
}  // namespace

SigmaResult cross_sectional_sigma(const DemeanedDiffGrid& d,
                                  std::uint32_t chunk_rows) {
  if (d.active_count < 2) {
    throw InsufficientDataError("cross-sectional sigma needs at least 2 values, got " +
                                std::to_string(d.active_count));
  }
  const double ss = banded_squared_sum(d, chunk_rows);
  return SigmaResult{std::sqrt(ss / static_cast<double>(d.active_count)),
                     d.active_count};
}

SigmaSeries sigma_series(const Panel& panel, const RegionMask* mask, Scope scope) {
  if (panel.size() < 2) {
    throw SequencingError("sigma series needs at least two panel years");
  }
  SigmaSeries out;
  out.scope = scope;
  for (int year : panel.diff_years()) {
    SigmaEntry e;
    e.year = year;
    try {
      const DiffGrid diff = diff_year(panel.grid_for(year - 1), panel.grid_for(year));
      const DemeanedDiffGrid dm = demean(diff, active_mask(diff), mask, scope);
      const SigmaResult r = cross_sectional_sigma(dm);
      e.sigma = r.sigma;
      e.n = r.n;
    } catch (const EmptyScopeError&) {
      e.sigma = kNan;
      e.n = 0;
    } catch (const InsufficientDataError&) {
      e.sigma = kNan;
      e.n = 1;
    }
    out.entries.push_back(e);
  }
  return out;
}

MomentSummary moments(std::span<const double> values) {
  const std::int64_t n = static_cast<std::int64_t>(values.size());
  if (n < 4) {
    throw InsufficientDataError("moments need at least 4 values, got " +
                                std::to_string(n));
  }
  CompensatedSum s1;
  for (double v : values) s1.add(v);
  const double mean = s1.value() / static_cast<double>(n);

  CompensatedSum s2, s3, s4;
  for (double v : values) {
    const double c = v - mean;
    const double c2 = c * c;
    s2.add(c2);
    s3.add(c2 * c);
    s4.add(c2 * c2);
  }
  const double m2 = s2.value() / static_cast<double>(n);
  const double m3 = s3.value() / static_cast<double>(n);
  const double m4 = s4.value() / static_cast<double>(n);

  MomentSummary out;
  out.mean = mean;
  out.std = std::sqrt(m2);
  out.n = n;
  if (out.std == 0.0) {
    out.skewness = kNan;
    out.excess_kurtosis = kNan;
  } else {
    out.skewness = m3 / (m2 * out.std);
    out.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return out;
}

double empirical_quantile(std::span<const double> sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 0) throw ArgumentError("quantile of empty collection");
  const double h = static_cast<double>(n) * p + 0.5;
  if (h <= 1.0) return sorted.front();
  if (h >= static_cast<double>(n)) return sorted.back();
  const std::size_t k = static_cast<std::size_t>(h);  // 1-based lower neighbor
  const double frac = h - static_cast<double>(k);
  return sorted[k - 1] + frac * (sorted[k] - sorted[k - 1]);
}

std::vector<std::pair<double, double>> qq_data(std::span<const double> a,
                                               std::span<const double> b, int q) {
  if (a.empty() || b.empty()) throw ArgumentError("qq_data: empty input");
  if (q < 2) throw ArgumentError("qq_data: need at least 2 quantiles");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<std::size_t>(q));
  for (int k = 1; k <= q; ++k) {
    const double p = (k - 0.5) / q;
    out.emplace_back(empirical_quantile(sa, p), empirical_quantile(sb, p));
  }
  return out;
}

ScatterSet growth_scatter(const Panel& panel, const RegionMask* mask, Scope scope,
                          YearRange period_a, YearRange period_b) {
  period_a.validate();
  period_b.validate();
  if (period_a.last >= period_b.first && period_b.last >= period_a.first) {
    throw ArgumentError("scatter periods must be disjoint");
  }
  const CumulativeChangeGrid ca = period_sum(panel, mask, scope, period_a);
  const CumulativeChangeGrid cb = period_sum(panel, mask, scope, period_b);
  const YearRange span{std::min(period_a.first, period_b.first),
                       std::max(period_a.last, period_b.last)};
  const CumulativeChangeGrid ct = period_sum(panel, mask, scope, span);

  ScatterSet out;
  out.scope = scope;
  out.period_a = period_a;
  out.period_b = period_b;
  const GridGeometry& g = panel.geometry();
  for (std::uint32_t j = 0; j < g.height; ++j) {
    for (std::uint32_t i = 0; i < g.width; ++i) {
      const std::size_t idx = g.index_of(i, j);
      const bool in_a = ca.active_years[idx] > 0;
      const bool in_b = cb.active_years[idx] > 0;
      if (!in_a && !in_b) continue;
      ScatterPoint p;
      p.i = i;
      p.j = j;
      p.a = in_a ? ca.values[idx] : 0.0;
      p.b = in_b ? cb.values[idx] : 0.0;
      p.total = ct.active_years[idx] > 0 ? ct.values[idx] : 0.0;
      out.points.push_back(p);
    }
  }
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("pearson: length mismatch");
  const std::int64_t n = static_cast<std::int64_t>(x.size());
  if (n < 2) throw InsufficientDataError("pearson needs at least 2 points");
  CompensatedSum sx, sy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx.add(x[i]);
    sy.add(y[i]);
  }
  const double mx = sx.value() / static_cast<double>(n);
  const double my = sy.value() / static_cast<double>(n);
  CompensatedSum sxx, syy, sxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx.add(dx * dx);
    syy.add(dy * dy);
    sxy.add(dx * dy);
  }
  const double vx = sxx.value();
  const double vy = syy.value();
  if (vx == 0.0 || vy == 0.0) {
    throw ArgumentError("pearson: zero variance input");
  }
  const double r = sxy.value() / std::sqrt(vx * vy);
  return std::clamp(r, -1.0, 1.0);
}

}  // namespace skyglow
