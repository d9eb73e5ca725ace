#include "skyglow/raster.hpp"

#include <string>

namespace skyglow {

RasterGrid::RasterGrid(GridGeometry geometry, int year,
                       std::vector<std::uint8_t> values, std::uint8_t nodata)
    : geometry_(geometry), year_(year), nodata_(nodata), values_(std::move(values)) {
  geometry_.validate();
  if (nodata_ <= kMaxDn) {
    throw ArgumentError("nodata sentinel must lie outside the DN range");
  }
  if (values_.size() != geometry_.pixel_count()) {
    throw ArgumentError("value count " + std::to_string(values_.size()) +
                        " does not match geometry " +
                        std::to_string(geometry_.pixel_count()));
  }
  for (std::uint8_t v : values_) {
    if (v > kMaxDn && v != nodata_) {
      throw RangeError("DN value " + std::to_string(int(v)) +
                       " outside [0, " + std::to_string(int(kMaxDn)) + "]");
    }
  }
}

Panel::Panel(std::vector<RasterGrid> grids) : grids_(std::move(grids)) {
  if (grids_.empty()) throw ArgumentError("panel has no grids");
  for (std::size_t k = 1; k < grids_.size(); ++k) {
    if (!(grids_[k].geometry() == grids_.front().geometry())) {
      throw ShapeError("panel grids do not share one geometry");
    }
    if (grids_[k].year() != grids_[k - 1].year() + 1) {
      throw SequencingError("panel years must be consecutive: " +
                            std::to_string(grids_[k - 1].year()) + " then " +
                            std::to_string(grids_[k].year()));
    }
  }
}

const RasterGrid& Panel::grid_for(int year) const {
  if (year < first_year() || year > last_year()) {
    throw SequencingError("year " + std::to_string(year) + " not in panel");
  }
  return grids_[static_cast<std::size_t>(year - first_year())];
}

std::vector<int> Panel::diff_years() const {
  std::vector<int> years;
  for (std::size_t k = 1; k < grids_.size(); ++k) years.push_back(grids_[k].year());
  return years;
}

}  // namespace skyglow
