#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "skyglow/geometry.hpp"

namespace skyglow {

// Stable-lights DN ceiling. The 6-bit detector saturates at 63.
inline constexpr std::uint8_t kMaxDn = 63;
// Sentinel for missing observations, outside the valid DN range.
inline constexpr std::uint8_t kNoData = 255;

// One year of luminosity intensities on a fixed lattice. Immutable after
// construction and safe to share across threads.
class RasterGrid {
 public:
  RasterGrid(GridGeometry geometry, int year, std::vector<std::uint8_t> values,
             std::uint8_t nodata = kNoData);

  const GridGeometry& geometry() const { return geometry_; }
  int year() const { return year_; }
  std::uint8_t nodata() const { return nodata_; }
  std::span<const std::uint8_t> values() const { return values_; }
  const std::uint8_t* data() const { return values_.data(); }

  std::uint8_t at(std::size_t index) const { return values_[index]; }
  std::uint8_t at(std::uint32_t i, std::uint32_t j) const {
    return values_[geometry_.index_of(i, j)];
  }
  bool is_nodata(std::size_t index) const { return values_[index] == nodata_; }

 private:
  GridGeometry geometry_;
  int year_;
  std::uint8_t nodata_;
  std::vector<std::uint8_t> values_;
};

// Consecutive annual grids sharing one geometry.
class Panel {
 public:
  explicit Panel(std::vector<RasterGrid> grids);

  const GridGeometry& geometry() const { return grids_.front().geometry(); }
  const std::vector<RasterGrid>& grids() const { return grids_; }
  std::size_t size() const { return grids_.size(); }
  int first_year() const { return grids_.front().year(); }
  int last_year() const { return grids_.back().year(); }

  const RasterGrid& grid_for(int year) const;

  // Years for which a year-over-year difference exists (first_year + 1 ..).
  std::vector<int> diff_years() const;

 private:
  std::vector<RasterGrid> grids_;
};

}  // namespace skyglow
