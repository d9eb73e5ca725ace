#pragma once

#include <span>
#include <string>
#include <vector>

#include "skyglow/raster.hpp"
#include "skyglow/regions.hpp"

namespace skyglow {

struct AggregateEntry {
  int year = 0;
  double total_light = 0.0;  // sum of valid DN over the scope
  double log_light = 0.0;    // NaN when the total is zero
};

struct AggregateSeries {
  Scope scope = Scope::world();
  std::string label;
  std::vector<AggregateEntry> entries;

  const AggregateEntry* find(int year) const;
};

AggregateSeries build_aggregate_series(const Panel& panel, const RegionMask* mask,
                                       Scope scope);

// Per-year effects from a two-way least-squares fit of log totals on region
// intercepts, region linear trends, and year effects. The year effects are
// identified by a double normalization: zero sum and zero linear trend across
// years, so common trend mass stays in the region slopes.
struct YearEffects {
  std::vector<int> years;
  std::vector<double> gamma;

  double at(int year) const;
  bool covers(int year) const;
  static YearEffects zero(std::vector<int> years);
};

// Needs >= 2 series and >= 3 distinct years; rank-deficient designs raise
// IdentificationError. Years with undefined logs are dropped from the fit.
YearEffects fit_year_effects(std::span<const AggregateSeries> all_series);

struct GrowthEstimate {
  std::string label;
  YearRange period;
  double y_hat = 0.0;    // percent per annum
  double sigma_y = 0.0;  // percent, population std of annual residualized growth
  int n_years = 0;
};

// Annual residualized growth g_t = (log L_t - gamma_t) - (log L_{t-1} -
// gamma_{t-1}) for t in the period; y_hat = 100*mean(g), sigma_y =
// 100*population std(g). The series must cover period.first - 1.
GrowthEstimate estimate_growth(const AggregateSeries& series,
                               const YearEffects& effects, YearRange period);

}  // namespace skyglow
