#include "skyglow/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>

#include "skyglow/detail/binio.hpp"

namespace skyglow {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

bool in_scope(const std::uint16_t* ids, Scope scope, std::size_t i) {
  return scope.is_world() || ids[i] == scope.region_id();
}
}  // namespace

std::int64_t ActiveMask::count() const {
  std::int64_t n = 0;
  for (std::uint8_t f : flags) n += f;
  return n;
}

ActiveMask active_mask(const DiffGrid& diff) {
  ActiveMask m;
  m.geometry = diff.geometry;
  m.flags.resize(diff.deltas.size());
  for (std::size_t i = 0; i < diff.deltas.size(); ++i) {
    m.flags[i] = diff.defined[i] && diff.deltas[i] != 0;
  }
  return m;
}

DiffGrid diff_year(const RasterGrid& prev, const RasterGrid& curr) {
  if (!(prev.geometry() == curr.geometry())) {
    throw ShapeError("diff_year: geometry mismatch");
  }
  if (curr.year() != prev.year() + 1) {
    throw SequencingError("diff_year: years " + std::to_string(prev.year()) +
                          " and " + std::to_string(curr.year()) +
                          " are not consecutive");
  }
  DiffGrid d;
  d.geometry = prev.geometry();
  d.year_from = prev.year();
  d.year_to = curr.year();
  const std::size_t n = prev.values().size();
  d.deltas.resize(n, 0);
  d.defined.resize(n, 0);
  const std::uint8_t* a = prev.data();
  const std::uint8_t* b = curr.data();
  const std::uint8_t nd_a = prev.nodata();
  const std::uint8_t nd_b = curr.nodata();
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] == nd_a || b[i] == nd_b) continue;
    d.defined[i] = 1;
    d.deltas[i] = static_cast<std::int8_t>(int(b[i]) - int(a[i]));
  }
  return d;
}

DemeanedDiffGrid demean(const DiffGrid& diff, const ActiveMask& active,
                        const RegionMask* mask, Scope scope) {
  if (!(diff.geometry == active.geometry)) {
    throw ShapeError("demean: active mask geometry mismatch");
  }
  if (!scope.is_world()) {
    if (mask == nullptr) {
      throw ArgumentError("demean: region scope requires a mask");
    }
    if (!(mask->geometry() == diff.geometry)) {
      throw ShapeError("demean: region mask geometry mismatch");
    }
    if (!mask->has(scope.region_id())) {
      throw LookupError("demean: region id " + std::to_string(scope.region_id()) +
                        " not in mask table");
    }
  }
  const std::uint16_t* ids = mask ? mask->data() : nullptr;
  const std::size_t n = diff.deltas.size();

  // Pass 1: exact integer sum and count over active in-scope pixels.
  std::int64_t sum = 0;
  std::int64_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!active.flags[i] || !in_scope(ids, scope, i)) continue;
    sum += diff.deltas[i];
    ++count;
  }
  if (count == 0) {
    throw EmptyScopeError("demean: no active pixel in scope for year " +
                          std::to_string(diff.year_to));
  }

  DemeanedDiffGrid out;
  out.geometry = diff.geometry;
  out.year = diff.year_to;
  out.scope = scope;
  out.delta_sum = sum;
  out.active_count = count;
  out.scope_mean = static_cast<double>(sum) / static_cast<double>(count);
  out.values.assign(n, kNan);
  out.active.assign(n, 0);

  // Pass 2: value = delta - sum/count, evaluated as (delta*count - sum)/count.
  // The numerator is an exact integer, so shifting every active delta by a
  // constant c shifts sum by c*count and leaves each value bit-identical.
  const double denom = static_cast<double>(count);
  for (std::size_t i = 0; i < n; ++i) {
    if (!active.flags[i] || !in_scope(ids, scope, i)) continue;
    const std::int64_t numer = static_cast<std::int64_t>(diff.deltas[i]) * count - sum;
    out.values[i] = static_cast<double>(numer) / denom;
    out.active[i] = 1;
  }
  return out;
}

DemeanedDiffGrid demean(const DiffGrid& diff, const RegionMask& mask, Scope scope) {
  return demean(diff, active_mask(diff), &mask, scope);
}

DemeanedDiffGrid demean(const DiffGrid& diff) {
  return demean(diff, active_mask(diff), nullptr, Scope::world());
}

std::int64_t CumulativeChangeGrid::valued_count() const {
  std::int64_t n = 0;
  for (std::uint16_t c : active_years) n += (c > 0);
  return n;
}

namespace {

CumulativeChangeGrid accumulate_changes(const Panel& panel, const RegionMask* mask,
                                        Scope scope, YearRange years, bool average) {
  years.validate();
  if (panel.size() < 2) {
    throw SequencingError("panel needs at least two years for differencing");
  }
  const auto diff_years = panel.diff_years();
  if (years.first < diff_years.front() || years.last > diff_years.back()) {
    throw ArgumentError("year range " + std::to_string(years.first) + "-" +
                        std::to_string(years.last) + " outside panel diff years");
  }
  CumulativeChangeGrid out;
  out.geometry = panel.geometry();
  out.years = years;
  out.scope = scope;
  const std::size_t n = out.geometry.pixel_count();
  out.values.assign(n, 0.0);
  out.active_years.assign(n, 0);

  for (int year = years.first; year <= years.last; ++year) {
    const DiffGrid diff = diff_year(panel.grid_for(year - 1), panel.grid_for(year));
    const DemeanedDiffGrid dm = demean(diff, active_mask(diff), mask, scope);
    for (std::size_t i = 0; i < n; ++i) {
      if (!dm.active[i]) continue;
      out.values[i] += dm.values[i];
      ++out.active_years[i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (out.active_years[i] == 0) {
      out.values[i] = kNan;
    } else if (average) {
      out.values[i] /= out.active_years[i];
    }
  }
  return out;
}

}  // namespace

CumulativeChangeGrid cumulative_change(const Panel& panel, const RegionMask* mask,
                                       Scope scope) {
  const auto dy = panel.diff_years();
  return accumulate_changes(panel, mask, scope, YearRange{dy.front(), dy.back()},
                            /*average=*/false);
}

CumulativeChangeGrid period_sum(const Panel& panel, const RegionMask* mask,
                                Scope scope, YearRange years) {
  return accumulate_changes(panel, mask, scope, years, /*average=*/false);
}

CumulativeChangeGrid period_average(const Panel& panel, const RegionMask* mask,
                                    Scope scope, YearRange years) {
  return accumulate_changes(panel, mask, scope, years, /*average=*/true);
}

namespace {
constexpr char kDemeanMagic[4] = {'N', 'L', 'D', '1'};
constexpr std::uint16_t kDemeanVersion = 1;
}  // namespace

void write_demeaned_grid(const DemeanedDiffGrid& grid,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kDemeanMagic, 4);
  detail::write_le(out, kDemeanVersion);
  const GridGeometry& g = grid.geometry;
  detail::write_le(out, g.width);
  detail::write_le(out, g.height);
  detail::write_f64(out, g.lon_min);
  detail::write_f64(out, g.lon_max);
  detail::write_f64(out, g.lat_min);
  detail::write_f64(out, g.lat_max);
  detail::write_le(out, static_cast<std::uint16_t>(grid.year));
  detail::write_le(out, std::uint8_t{1});  // dtype 1 = f32
  detail::write_le(out, std::uint8_t{0});
  const char reserved[6] = {0, 0, 0, 0, 0, 0};
  out.write(reserved, 6);
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    const float v = grid.active[i] ? static_cast<float>(grid.values[i])
                                   : std::numeric_limits<float>::quiet_NaN();
    detail::write_f32(out, v);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

DemeanedDiffGrid load_demeaned_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kDemeanMagic)) {
    throw FormatError(path.string() + ": not an NLD1 file (bad magic)");
  }
  const auto version = detail::read_le<std::uint16_t>(in);
  if (version != kDemeanVersion) {
    throw FormatError(path.string() + ": unsupported NLD1 version");
  }
  DemeanedDiffGrid g;
  g.geometry.width = detail::read_le<std::uint32_t>(in);
  g.geometry.height = detail::read_le<std::uint32_t>(in);
  g.geometry.lon_min = detail::read_f64(in);
  g.geometry.lon_max = detail::read_f64(in);
  g.geometry.lat_min = detail::read_f64(in);
  g.geometry.lat_max = detail::read_f64(in);
  g.geometry.cell_size = (g.geometry.lon_max - g.geometry.lon_min) / g.geometry.width;
  g.year = detail::read_le<std::uint16_t>(in);
  const auto dtype = detail::read_le<std::uint8_t>(in);
  if (dtype != 1) throw FormatError(path.string() + ": dtype is not f32");
  detail::read_le<std::uint8_t>(in);
  char reserved[6];
  in.read(reserved, 6);
  if (!in) throw TruncationError(path.string() + ": truncated header");
  const std::size_t n = g.geometry.pixel_count();
  g.values.assign(n, kNan);
  g.active.assign(n, 0);
  std::int64_t sum_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const float v = detail::read_f32(in);
    if (!std::isnan(v)) {
      g.values[i] = v;
      g.active[i] = 1;
      ++sum_count;
    }
  }
  g.active_count = sum_count;
  return g;
}

void write_sparse_csv(const DemeanedDiffGrid& grid,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "i,j,value\n";
  char buf[64];
  for (std::uint32_t j = 0; j < grid.geometry.height; ++j) {
    for (std::uint32_t i = 0; i < grid.geometry.width; ++i) {
      const std::size_t idx = grid.geometry.index_of(i, j);
      if (!grid.active[idx]) continue;
      std::snprintf(buf, sizeof buf, "%u,%u,%.17g\n", i, j, grid.values[idx]);
      out << buf;
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace skyglow
