#pragma once

#include <filesystem>

#include "skyglow/raster.hpp"

namespace skyglow {

// NLG1: little-endian annual DN composite.
//   magic "NLG1", version u16 = 1, width u32, height u32,
//   lon_min/lon_max/lat_min/lat_max f64, year u16, dtype u8 (0 = u8 DN),
//   nodata u8, 6 reserved zero bytes, then width*height DN bytes
//   row-major with row 0 = north.
struct RasterHeader {
  GridGeometry geometry;
  int year = 0;
  std::uint8_t dtype = 0;
  std::uint8_t nodata = kNoData;
};

RasterHeader load_raster_header(const std::filesystem::path& path);
RasterGrid load_raster(const std::filesystem::path& path);
void write_raster(const RasterGrid& grid, const std::filesystem::path& path);

// ESRI-style ASCII grid: ncols/nrows/xllcorner/yllcorner/cellsize and an
// optional NODATA_value header line, then whitespace-separated cell values.
// Values outside [0, 63] that are not NODATA are rejected, not clamped.
RasterGrid import_ascii_grid(const std::filesystem::path& path, int year);

}  // namespace skyglow
