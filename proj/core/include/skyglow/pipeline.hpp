#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "skyglow/raster.hpp"
#include "skyglow/regions.hpp"

namespace skyglow {

// Year-over-year DN change. A pixel's delta is defined only where both years
// carry data; deltas live in [-63, 63].
struct DiffGrid {
  GridGeometry geometry;
  int year_from = 0;
  int year_to = 0;
  std::vector<std::int8_t> deltas;
  std::vector<std::uint8_t> defined;

  bool is_active(std::size_t i) const { return defined[i] && deltas[i] != 0; }
};

// Defined pixels whose change is nonzero. Kept as an explicit object so
// robustness checks can hold the mask fixed while shifting deltas.
struct ActiveMask {
  GridGeometry geometry;
  std::vector<std::uint8_t> flags;

  std::int64_t count() const;
};

ActiveMask active_mask(const DiffGrid& diff);

// Per-pixel change after subtracting the scope-wide mean of active changes.
// Values exist exactly on active in-scope pixels; everywhere else the plane
// holds NaN. delta_sum/active_count are the exact integer pass-1 sums, so
// scope_mean is reproducible bit-for-bit.
struct DemeanedDiffGrid {
  GridGeometry geometry;
  int year = 0;  // the later year of the pair
  Scope scope = Scope::world();
  double scope_mean = 0.0;
  std::int64_t delta_sum = 0;
  std::int64_t active_count = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> active;
};

// Mean of the active in-scope deltas subtracted from each of them. The mask
// pointer may be null for world scope. Throws EmptyScopeError when no pixel
// is active in scope.
DemeanedDiffGrid demean(const DiffGrid& diff, const ActiveMask& active,
                        const RegionMask* mask, Scope scope);
DemeanedDiffGrid demean(const DiffGrid& diff, const RegionMask& mask, Scope scope);
DemeanedDiffGrid demean(const DiffGrid& diff);  // world scope, no mask

DiffGrid diff_year(const RasterGrid& prev, const RasterGrid& curr);

// Sum (or annual average) of demeaned changes per pixel across years.
// Pixels never active in the covered years carry no value (NaN).
struct CumulativeChangeGrid {
  GridGeometry geometry;
  YearRange years;  // diff years covered
  Scope scope = Scope::world();
  std::vector<double> values;
  std::vector<std::uint16_t> active_years;  // per-pixel count of contributing years

  std::int64_t valued_count() const;
};

CumulativeChangeGrid cumulative_change(const Panel& panel, const RegionMask* mask,
                                       Scope scope);
// Per-pixel sum of demeaned values over the diff years in `years`.
CumulativeChangeGrid period_sum(const Panel& panel, const RegionMask* mask,
                                Scope scope, YearRange years);
// Per-pixel mean of demeaned values over the diff years in `years`, divided
// by the number of years the pixel was active.
CumulativeChangeGrid period_average(const Panel& panel, const RegionMask* mask,
                                    Scope scope, YearRange years);

// NLD1 dump: NLG1 header layout with magic "NLD1", dtype 1 and an f32
// payload; inactive pixels are NaN. For inspection, not analysis.
void write_demeaned_grid(const DemeanedDiffGrid& grid,
                         const std::filesystem::path& path);
DemeanedDiffGrid load_demeaned_grid(const std::filesystem::path& path);

// Sparse text export for tiny grids: header i,j,value then one row per
// active pixel in row-major order.
void write_sparse_csv(const DemeanedDiffGrid& grid,
                      const std::filesystem::path& path);

}  // namespace skyglow
