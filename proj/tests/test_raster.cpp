#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oracle.hpp"
#include "skyglow/raster_io.hpp"

using namespace skyglow;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "skyglow_test_raster";
  fs::create_directories(dir);
  return dir;
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

GridGeometry small_geom(std::uint32_t w, std::uint32_t h) {
  return GridGeometry::from_extent(0.0, w * 0.25, -(h * 0.25), 0.0, 0.25);
}

}  // namespace

TEST_CASE("global 30 arc-second lattice dimensions") {
  const GridGeometry g = GridGeometry::dmsp_global();
  CHECK(g.width == 43200);
  CHECK(g.height == 16800);
  CHECK(g.pixel_count() == 725760000ull);
  // Row 0 is north; centers offset half a cell inward.
  CHECK(g.lat_at(0) == doctest::Approx(75.0 - 0.5 / 120.0));
  CHECK(g.lon_at(0) == doctest::Approx(-180.0 + 0.5 / 120.0));
  CHECK(g.lat_at(g.height - 1) == doctest::Approx(-65.0 + 0.5 / 120.0));
}

TEST_CASE("geometry rejects extents that do not divide into cells") {
  CHECK_THROWS_AS(GridGeometry::from_extent(0.0, 1.0, 0.0, 1.0, 0.3), ArgumentError);
  CHECK_THROWS_AS(GridGeometry::from_extent(0.0, 0.0, 0.0, 1.0, 0.5), ArgumentError);
}

TEST_CASE("raster grid construction enforces invariants") {
  const GridGeometry g = small_geom(2, 2);
  CHECK_THROWS_AS(RasterGrid(g, 2000, {0, 1, 2}), ArgumentError);
  CHECK_THROWS_AS(RasterGrid(g, 2000, {0, 1, 2, 64}), RangeError);
  CHECK_THROWS_AS(RasterGrid(g, 2000, {0, 1, 2, 3}, 40), ArgumentError);
  const RasterGrid ok(g, 2000, {0, 63, kNoData, 5});
  CHECK(ok.is_nodata(2));
  CHECK(ok.at(1, 0) == 63);
}

TEST_CASE("NLG1 round-trip reproduces header and payload") {
  const fs::path path = temp_dir() / "roundtrip.nlg1";
  const GridGeometry g = small_geom(4, 2);
  const RasterGrid grid(g, 2000, {0, 5, 63, 0, 0, 0, 7, 0});
  write_raster(grid, path);

  const RasterGrid back = load_raster(path);
  CHECK(back.geometry() == g);
  CHECK(back.year() == 2000);
  CHECK(back.nodata() == kNoData);
  CHECK(std::equal(back.values().begin(), back.values().end(),
                   grid.values().begin()));

  const fs::path path2 = temp_dir() / "roundtrip2.nlg1";
  write_raster(grid, path2);
  CHECK(read_bytes(path) == read_bytes(path2));
}

TEST_CASE("NLG1 preserves the nodata sentinel") {
  const fs::path path = temp_dir() / "sentinel.nlg1";
  const RasterGrid grid(small_geom(2, 1), 1999, {kNoData, 10});
  write_raster(grid, path);
  const RasterGrid back = load_raster(path);
  CHECK(back.is_nodata(0));
  CHECK(back.at(std::size_t{1}) == 10);
}

TEST_CASE("NLG1 rejects bad magic") {
  const fs::path path = temp_dir() / "badmagic.nlg1";
  std::ofstream(path, std::ios::binary) << "XXXX then some trailing bytes";
  CHECK_THROWS_AS(load_raster(path), FormatError);
}

TEST_CASE("NLG1 rejects truncated payload") {
  const fs::path good = temp_dir() / "full.nlg1";
  write_raster(RasterGrid(small_geom(4, 2), 2001, {0, 5, 63, 0, 0, 0, 7, 0}), good);
  auto bytes = read_bytes(good);
  bytes.pop_back();  // header claims 8 payload bytes, file now has 7
  const fs::path bad = temp_dir() / "truncated.nlg1";
  std::ofstream(bad, std::ios::binary)
      .write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  CHECK_THROWS_AS(load_raster(bad), TruncationError);
}

TEST_CASE("NLG1 rejects out-of-range DN values") {
  const fs::path good = temp_dir() / "patched.nlg1";
  write_raster(RasterGrid(small_geom(2, 1), 2001, {1, 2}), good);
  auto bytes = read_bytes(good);
  bytes[bytes.size() - 1] = 100;  // not 0..63, not the sentinel
  std::ofstream(good, std::ios::binary)
      .write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  CHECK_THROWS_AS(load_raster(good), RangeError);
}

TEST_CASE("round-trip holds for generated grids") {
  const fs::path path = temp_dir() / "fuzz.nlg1";
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    const std::uint32_t w = 1 + static_cast<std::uint32_t>(oracle::mix(trial) % 17);
    const std::uint32_t h =
        1 + static_cast<std::uint32_t>(oracle::mix(trial + 100) % 9);
    std::vector<std::uint8_t> values(static_cast<std::size_t>(w) * h);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const std::uint64_t r = oracle::mix(trial * 10007 + i);
      values[i] = (r % 9 == 0) ? kNoData : static_cast<std::uint8_t>(r % 64);
    }
    const RasterGrid grid(GridGeometry::from_extent(0, w, 0, h, 1.0),
                          1992 + int(trial), values);
    write_raster(grid, path);
    const RasterGrid back = load_raster(path);
    CHECK(back.geometry() == grid.geometry());
    CHECK(std::equal(back.values().begin(), back.values().end(), values.begin()));
  }
}

TEST_CASE("ASCII grid import maps header and values") {
  const fs::path path = temp_dir() / "grid.asc";
  std::ofstream(path) << "ncols 3\nnrows 1\nxllcorner 10\nyllcorner -5\n"
                         "cellsize 0.25\nNODATA_value -9999\n0 12 63\n";
  const RasterGrid grid = import_ascii_grid(path, 2004);
  CHECK(grid.geometry().width == 3);
  CHECK(grid.geometry().height == 1);
  CHECK(grid.geometry().cell_size == doctest::Approx(0.25));
  CHECK(grid.geometry().lon_min == doctest::Approx(10.0));
  CHECK(grid.year() == 2004);
  CHECK(grid.at(std::size_t{0}) == 0);
  CHECK(grid.at(std::size_t{1}) == 12);
  CHECK(grid.at(std::size_t{2}) == 63);
}

TEST_CASE("ASCII grid import rejects values above the DN ceiling") {
  const fs::path path = temp_dir() / "over.asc";
  std::ofstream(path) << "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\n"
                         "cellsize 1\n0 64\n";
  CHECK_THROWS_AS(import_ascii_grid(path, 2000), RangeError);
}

TEST_CASE("ASCII grid import maps NODATA tokens to the sentinel") {
  const fs::path path = temp_dir() / "nodata.asc";
  std::ofstream(path) << "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\n"
                         "cellsize 1\nNODATA_value -9999\n-9999 3\n";
  const RasterGrid grid = import_ascii_grid(path, 2000);
  CHECK(grid.is_nodata(0));
  CHECK(grid.at(std::size_t{1}) == 3);
}

TEST_CASE("ASCII grid import rejects malformed headers") {
  const fs::path path = temp_dir() / "noheader.asc";
  std::ofstream(path) << "ncols 2\nnrows 1\n0 1\n";
  CHECK_THROWS_AS(import_ascii_grid(path, 2000), FormatError);
}

TEST_CASE("panel requires consecutive years and one geometry") {
  const GridGeometry g = small_geom(2, 1);
  std::vector<RasterGrid> grids;
  grids.emplace_back(g, 2000, std::vector<std::uint8_t>{1, 2});
  grids.emplace_back(g, 2002, std::vector<std::uint8_t>{1, 2});
  CHECK_THROWS_AS(Panel(std::move(grids)), SequencingError);

  std::vector<RasterGrid> mixed;
  mixed.emplace_back(g, 2000, std::vector<std::uint8_t>{1, 2});
  mixed.emplace_back(small_geom(1, 2), 2001, std::vector<std::uint8_t>{1, 2});
  CHECK_THROWS_AS(Panel(std::move(mixed)), ShapeError);

  std::vector<RasterGrid> ok;
  ok.emplace_back(g, 2000, std::vector<std::uint8_t>{1, 2});
  ok.emplace_back(g, 2001, std::vector<std::uint8_t>{3, 4});
  const Panel panel(std::move(ok));
  CHECK(panel.diff_years() == std::vector<int>{2001});
  CHECK(panel.grid_for(2001).at(std::size_t{0}) == 3);
}
