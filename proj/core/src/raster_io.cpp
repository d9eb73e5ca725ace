#include "skyglow/raster_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "skyglow/detail/binio.hpp"

namespace skyglow {

namespace {

constexpr char kMagic[4] = {'N', 'L', 'G', '1'};
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kReservedBytes = 6;

RasterHeader read_header(std::istream& in, const std::filesystem::path& path) {
  char magic[4];
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kMagic)) {
    throw FormatError(path.string() + ": not an NLG1 file (bad magic)");
  }
  const auto version = detail::read_le<std::uint16_t>(in);
  if (version != kVersion) {
    throw FormatError(path.string() + ": unsupported NLG1 version " +
                      std::to_string(version));
  }
  RasterHeader h;
  GridGeometry& g = h.geometry;
  g.width = detail::read_le<std::uint32_t>(in);
  g.height = detail::read_le<std::uint32_t>(in);
  g.lon_min = detail::read_f64(in);
  g.lon_max = detail::read_f64(in);
  g.lat_min = detail::read_f64(in);
  g.lat_max = detail::read_f64(in);
  h.year = detail::read_le<std::uint16_t>(in);
  h.dtype = detail::read_le<std::uint8_t>(in);
  h.nodata = detail::read_le<std::uint8_t>(in);
  char reserved[kReservedBytes];
  in.read(reserved, kReservedBytes);
  if (!in) throw TruncationError(path.string() + ": truncated header");
  if (g.width == 0 || g.height == 0) {
    throw FormatError(path.string() + ": empty grid dimensions");
  }
  g.cell_size = (g.lon_max - g.lon_min) / g.width;
  try {
    g.validate();
  } catch (const Error& e) {
    throw FormatError(path.string() + ": inconsistent geometry (" + e.what() + ")");
  }
  return h;
}

void write_header(std::ostream& out, const RasterHeader& h) {
  out.write(kMagic, 4);
  detail::write_le(out, kVersion);
  detail::write_le(out, h.geometry.width);
  detail::write_le(out, h.geometry.height);
  detail::write_f64(out, h.geometry.lon_min);
  detail::write_f64(out, h.geometry.lon_max);
  detail::write_f64(out, h.geometry.lat_min);
  detail::write_f64(out, h.geometry.lat_max);
  detail::write_le(out, static_cast<std::uint16_t>(h.year));
  detail::write_le(out, h.dtype);
  detail::write_le(out, h.nodata);
  const char reserved[kReservedBytes] = {0, 0, 0, 0, 0, 0};
  out.write(reserved, kReservedBytes);
}

}  // namespace

RasterHeader load_raster_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_header(in, path);
}

RasterGrid load_raster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const RasterHeader h = read_header(in, path);
  if (h.dtype != 0) {
    throw FormatError(path.string() + ": dtype " + std::to_string(int(h.dtype)) +
                      " is not u8 DN");
  }
  const std::size_t n = h.geometry.pixel_count();
  std::vector<std::uint8_t> values(n);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw TruncationError(path.string() + ": payload has " +
                          std::to_string(in.gcount()) + " of " +
                          std::to_string(n) + " bytes");
  }
  for (std::uint8_t v : values) {
    if (v > kMaxDn && v != h.nodata) {
      throw RangeError(path.string() + ": DN value " + std::to_string(int(v)) +
                       " outside [0, 63] and not nodata");
    }
  }
  return RasterGrid(h.geometry, h.year, std::move(values), h.nodata);
}

void write_raster(const RasterGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  RasterHeader h;
  h.geometry = grid.geometry();
  h.year = grid.year();
  h.dtype = 0;
  h.nodata = grid.nodata();
  write_header(out, h);
  out.write(reinterpret_cast<const char*>(grid.data()),
            static_cast<std::streamsize>(grid.values().size()));
  if (!out) throw IoError("write failed for " + path.string());
}

RasterGrid import_ascii_grid(const std::filesystem::path& path, int year) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  long long ncols = -1, nrows = -1;
  double xll = 0.0, yll = 0.0, cell = 0.0;
  std::optional<long long> nodata_token;
  bool have_xll = false, have_yll = false, have_cell = false;

  // Header: a run of "<key> <value>" lines before the first bare number.
  std::string token;
  while (in >> token) {
    std::string key = token;
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (key == "ncols") {
      if (!(in >> ncols)) throw FormatError(path.string() + ": bad ncols");
    } else if (key == "nrows") {
      if (!(in >> nrows)) throw FormatError(path.string() + ": bad nrows");
    } else if (key == "xllcorner") {
      if (!(in >> xll)) throw FormatError(path.string() + ": bad xllcorner");
      have_xll = true;
    } else if (key == "yllcorner") {
      if (!(in >> yll)) throw FormatError(path.string() + ": bad yllcorner");
      have_yll = true;
    } else if (key == "cellsize") {
      if (!(in >> cell)) throw FormatError(path.string() + ": bad cellsize");
      have_cell = true;
    } else if (key == "nodata_value") {
      long long nd;
      if (!(in >> nd)) throw FormatError(path.string() + ": bad NODATA_value");
      nodata_token = nd;
    } else {
      break;  // first data token
    }
    token.clear();
  }
  if (ncols <= 0 || nrows <= 0 || !have_xll || !have_yll || !have_cell || cell <= 0) {
    throw FormatError(path.string() + ": incomplete ASCII grid header");
  }

  GridGeometry geom = GridGeometry::from_extent(xll, xll + ncols * cell, yll,
                                                yll + nrows * cell, cell);
  const std::size_t n = geom.pixel_count();
  std::vector<std::uint8_t> values;
  values.reserve(n);

  auto push_value = [&](const std::string& tok) {
    std::size_t pos = 0;
    long long v;
    try {
      v = std::stoll(tok, &pos);
    } catch (const std::exception&) {
      throw FormatError(path.string() + ": non-numeric cell value '" + tok + "'");
    }
    if (pos != tok.size()) {
      throw FormatError(path.string() + ": non-integer cell value '" + tok + "'");
    }
    if (nodata_token && v == *nodata_token) {
      values.push_back(kNoData);
      return;
    }
    if (v < 0 || v > kMaxDn) {
      throw RangeError(path.string() + ": cell value " + std::to_string(v) +
                       " outside [0, 63]");
    }
    values.push_back(static_cast<std::uint8_t>(v));
  };

  if (!token.empty()) push_value(token);
  while (in >> token) {
    if (values.size() == n) {
      throw FormatError(path.string() + ": more cells than ncols*nrows");
    }
    push_value(token);
  }
  if (values.size() != n) {
    throw TruncationError(path.string() + ": " + std::to_string(values.size()) +
                          " cells, expected " + std::to_string(n));
  }
  return RasterGrid(geom, year, std::move(values), kNoData);
}

}  // namespace skyglow
