#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "skyglow/pipeline.hpp"

namespace skyglow {

struct SigmaResult {
  double sigma = 0.0;
  std::int64_t n = 0;
};

// Population standard deviation of the active demeaned values. The mean is
// zero by construction, so sigma = sqrt(sum(v^2)/n).
SigmaResult cross_sectional_sigma(const DemeanedDiffGrid& d,
                                  std::uint32_t chunk_rows = 256);

struct SigmaEntry {
  int year = 0;
  double sigma = 0.0;  // NaN when the scope was empty that year
  std::int64_t n = 0;
};

struct SigmaSeries {
  Scope scope = Scope::world();
  std::vector<SigmaEntry> entries;
};

// One sigma per consecutive year pair, each computed after scope-specific
// demeaning. Years with no active in-scope pixel yield a NaN entry.
SigmaSeries sigma_series(const Panel& panel, const RegionMask* mask, Scope scope);

struct MomentSummary {
  double mean = 0.0;
  double std = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  std::int64_t n = 0;
};

// Population central moments: skewness = m3/s^3, excess kurtosis = m4/s^4 - 3.
// Requires n >= 4; a zero standard deviation reports NaN shape moments.
MomentSummary moments(std::span<const double> values);

// Empirical quantile of sorted data at probability p, with the order
// statistic x_(k) placed at probability (k - 0.5)/n and linear interpolation
// between neighbors.
double empirical_quantile(std::span<const double> sorted, double p);

// q matched quantile pairs at probabilities (k - 0.5)/q, k = 1..q.
std::vector<std::pair<double, double>> qq_data(std::span<const double> a,
                                               std::span<const double> b, int q);

struct ScatterPoint {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  double a = 0.0;      // cumulative change in period A
  double b = 0.0;      // cumulative change in period B
  double total = 0.0;  // cumulative change over the covering span
};

struct ScatterSet {
  Scope scope = Scope::world();
  YearRange period_a;
  YearRange period_b;
  std::vector<ScatterPoint> points;
};

// One point per pixel active in at least one of the two (disjoint) periods.
// A pixel inactive throughout a period contributes 0 on that axis.
ScatterSet growth_scatter(const Panel& panel, const RegionMask* mask, Scope scope,
                          YearRange period_a, YearRange period_b);

// Pearson correlation; requires equal lengths >= 2 and nonzero variances.
double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace skyglow
