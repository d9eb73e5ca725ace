#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>

#include "skyglow/errors.hpp"

namespace skyglow {

// Regular lon/lat lattice. Row 0 is the northernmost row; storage is
// row-major. Pixel (i,j) covers the cell centered at lon_at(i), lat_at(j).
struct GridGeometry {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  double lon_min = 0.0;
  double lon_max = 0.0;
  double lat_min = 0.0;
  double lat_max = 0.0;
  double cell_size = 0.0;

  static GridGeometry from_extent(double lon_min, double lon_max,
                                  double lat_min, double lat_max,
                                  double cell_size) {
    if (cell_size <= 0.0 || lon_max <= lon_min || lat_max <= lat_min) {
      throw ArgumentError("grid extent is degenerate");
    }
    GridGeometry g;
    g.lon_min = lon_min;
    g.lon_max = lon_max;
    g.lat_min = lat_min;
    g.lat_max = lat_max;
    g.cell_size = cell_size;
    g.width = static_cast<std::uint32_t>(std::llround((lon_max - lon_min) / cell_size));
    g.height = static_cast<std::uint32_t>(std::llround((lat_max - lat_min) / cell_size));
    g.validate();
    return g;
  }

  // 30 arc-second global stable-lights lattice: 43200 x 16800 pixels.
  static GridGeometry dmsp_global() {
    return from_extent(-180.0, 180.0, -65.0, 75.0, 1.0 / 120.0);
  }

  void validate() const {
    if (width == 0 || height == 0 || cell_size <= 0.0) {
      throw ArgumentError("grid geometry has empty dimensions");
    }
    const double w = (lon_max - lon_min) / cell_size;
    const double h = (lat_max - lat_min) / cell_size;
    if (std::llround(w) != static_cast<long long>(width) ||
        std::llround(h) != static_cast<long long>(height) ||
        std::fabs(w - width) > 1e-6 * width + 1e-9 ||
        std::fabs(h - height) > 1e-6 * height + 1e-9) {
      throw ArgumentError("grid extent does not divide evenly into cells");
    }
  }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }

  double lon_at(std::uint32_t i) const { return lon_min + (i + 0.5) * cell_size; }
  double lat_at(std::uint32_t j) const { return lat_max - (j + 0.5) * cell_size; }

  std::size_t index_of(std::uint32_t i, std::uint32_t j) const {
    return static_cast<std::size_t>(j) * width + i;
  }

  bool operator==(const GridGeometry& o) const {
    return width == o.width && height == o.height && lon_min == o.lon_min &&
           lon_max == o.lon_max && lat_min == o.lat_min && lat_max == o.lat_max &&
           cell_size == o.cell_size;
  }
};

// Inclusive calendar-year range.
struct YearRange {
  int first = 0;
  int last = 0;

  bool contains(int year) const { return year >= first && year <= last; }
  int count() const { return last - first + 1; }

  void validate() const {
    if (last < first) throw ArgumentError("year range is empty");
  }
};

}  // namespace skyglow
