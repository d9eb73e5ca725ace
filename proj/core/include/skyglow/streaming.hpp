#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "skyglow/raster.hpp"
#include "skyglow/regions.hpp"

namespace skyglow {

// Neumaier-compensated accumulator. Band partials are merged in band index
// order so a reduction's result depends only on the band size, never on the
// thread count.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  void merge(const CompensatedSum& o) {
    add(o.sum);
    comp += o.comp;
  }
  double value() const { return sum + comp; }
};

// Fixed partition of grid rows into bands of chunk_rows. Bands are processed
// by up to `threads` workers; callers store per-band results and merge them
// sequentially by band index.
struct BandPlan {
  std::uint32_t height = 0;
  std::uint32_t chunk_rows = 256;

  std::size_t band_count() const {
    return (height + chunk_rows - 1) / chunk_rows;
  }
  std::uint32_t row_begin(std::size_t band) const {
    return static_cast<std::uint32_t>(band) * chunk_rows;
  }
  std::uint32_t row_end(std::size_t band) const {
    const std::uint64_t e = static_cast<std::uint64_t>(band + 1) * chunk_rows;
    return e > height ? height : static_cast<std::uint32_t>(e);
  }
};

// Runs fn(band_index) for every band, on `threads` workers (1 = inline).
void run_bands(const BandPlan& plan, int threads,
               const std::function<void(std::size_t)>& fn);

// Non-owning view of one year's DN plane. Lets full-scale callers stream
// grid pairs without copying 700MB planes into RasterGrid objects.
struct GridView {
  const std::uint8_t* values = nullptr;
  GridGeometry geometry;
  int year = 0;
  std::uint8_t nodata = kNoData;

  GridView(const RasterGrid& g)  // NOLINT: implicit by design
      : values(g.data()), geometry(g.geometry()), year(g.year()), nodata(g.nodata()) {}
  GridView(const std::uint8_t* values, const GridGeometry& geometry, int year,
           std::uint8_t nodata = kNoData)
      : values(values), geometry(geometry), year(year), nodata(nodata) {}
};

// Scope predicate against an optional id plane.
struct ScopeFilter {
  const std::uint16_t* ids = nullptr;  // null means world
  std::uint16_t id = 0;

  bool contains(std::size_t i) const { return ids == nullptr || ids[i] == id; }

  static ScopeFilter world() { return ScopeFilter{}; }
  static ScopeFilter region(const RegionMask& mask, std::uint16_t id) {
    return ScopeFilter{mask.data(), id};
  }
};

// Growth-state codes used by the packed plane: 0 = no state.
enum : std::uint8_t {
  kStateNone = 0,
  kStateNeg = 1,
  kStateNeu = 2,
  kStatePos = 3,
};

// 2-bit-per-pixel state plane. Rows are byte-aligned so whole-row bands
// never share a byte and can be written concurrently.
class PackedStatePlane {
 public:
  PackedStatePlane() = default;
  PackedStatePlane(std::uint32_t width, std::uint32_t height);

  std::uint8_t get(std::uint32_t i, std::uint32_t j) const {
    const std::size_t bit = (std::size_t(j) * row_stride_ + (i >> 2));
    return (bytes_[bit] >> ((i & 3u) * 2)) & 3u;
  }
  void set(std::uint32_t i, std::uint32_t j, std::uint8_t code) {
    std::uint8_t& b = bytes_[std::size_t(j) * row_stride_ + (i >> 2)];
    const unsigned shift = (i & 3u) * 2;
    b = static_cast<std::uint8_t>((b & ~(3u << shift)) | (unsigned(code) << shift));
  }
  void clear();
  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }
  bool empty() const { return bytes_.empty(); }

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::size_t row_stride_ = 0;
  std::vector<std::uint8_t> bytes_;
};

// One year pair's exact integer sums over active in-scope pixels.
struct PairSums {
  std::int64_t delta_sum = 0;
  std::int64_t active_count = 0;
};

// Streaming equivalents of diff_year + demean + sigma + classify. Deltas are
// recomputed on the fly from the two resident DN planes, so the only large
// allocations at global scale are the planes themselves. Each function is
// bit-stable for a fixed chunk_rows regardless of thread count, and matches
// the materialized pipeline/stats results for the same chunk_rows.
PairSums scan_pair_sums(const GridView& prev, const GridView& curr,
                        const ScopeFilter& scope, const BandPlan& plan, int threads);

// Compensated sum of squared demeaned values (mean is zero by construction);
// sigma = sqrt(result / active_count).
double scan_squared_sum(const GridView& prev, const GridView& curr,
                        const ScopeFilter& scope, PairSums sums,
                        const BandPlan& plan, int threads);

struct TransitionCounts {
  std::array<std::array<std::int64_t, 3>, 3> counts{};  // [from][to], Neg,Neu,Pos
  std::array<std::int64_t, 3> state_totals{};           // current-year occupancy

  std::int64_t total_pairs() const;
  void merge(const TransitionCounts& o);
};

// Classifies the current pair's demeaned values against sigma, tallies
// transitions against prev_states, and overwrites prev_states with the new
// states (pixels without a value this year become stateless).
TransitionCounts scan_classify(const GridView& prev, const GridView& curr,
                               const ScopeFilter& scope, PairSums sums,
                               double sigma, PackedStatePlane& states,
                               const BandPlan& plan, int threads);

// Adds each active in-scope demeaned value into the per-pixel accumulator
// planes (used for cumulative and period-average maps).
void scan_accumulate(const GridView& prev, const GridView& curr,
                     const ScopeFilter& scope, PairSums sums,
                     std::vector<double>& value_sums,
                     std::vector<std::uint16_t>& year_counts, const BandPlan& plan,
                     int threads);

// Collects the active in-scope demeaned values into a dense vector
// (row-major order), for quantile work on one year.
std::vector<double> collect_demeaned(const GridView& prev, const GridView& curr,
                                     const ScopeFilter& scope, PairSums sums);

// Per-region and world DN totals for one year (exact integer sums).
struct YearTotals {
  std::int64_t world = 0;
  std::vector<std::int64_t> by_region;  // indexed by region id (0..65535)
};
YearTotals scan_year_totals(const GridView& grid, const std::uint16_t* ids,
                            const BandPlan& plan, int threads);

}  // namespace skyglow
