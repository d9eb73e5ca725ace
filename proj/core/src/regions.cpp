#include "skyglow/regions.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "skyglow/detail/binio.hpp"

namespace skyglow {

RegionMask::RegionMask(GridGeometry geometry, std::vector<std::uint16_t> ids,
                       std::vector<RegionInfo> table)
    : geometry_(geometry), ids_(std::move(ids)), table_(std::move(table)) {
  geometry_.validate();
  if (ids_.size() != geometry_.pixel_count()) {
    throw ArgumentError("mask id count does not match geometry");
  }
  std::unordered_set<std::uint16_t> seen;
  for (const RegionInfo& r : table_) {
    if (r.id == 0) throw ConsistencyError("region table contains reserved id 0");
    if (!seen.insert(r.id).second) {
      throw ConsistencyError("region table has duplicate id " + std::to_string(r.id));
    }
  }
  for (std::uint16_t id : ids_) {
    if (id != 0 && !seen.count(id)) {
      throw ConsistencyError("mask id " + std::to_string(id) +
                             " missing from region table");
    }
  }
  std::sort(table_.begin(), table_.end(),
            [](const RegionInfo& a, const RegionInfo& b) { return a.id < b.id; });
}

const RegionInfo* RegionMask::find(std::uint16_t id) const {
  auto it = std::lower_bound(
      table_.begin(), table_.end(), id,
      [](const RegionInfo& r, std::uint16_t v) { return r.id < v; });
  if (it != table_.end() && it->id == id) return &*it;
  return nullptr;
}

const RegionInfo* RegionMask::find(std::string_view name) const {
  for (const RegionInfo& r : table_) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

std::string Scope::label(const RegionMask* mask) const {
  if (world_) return "World";
  if (mask != nullptr) {
    if (const RegionInfo* r = mask->find(id_)) return r->name;
  }
  return "region-" + std::to_string(id_);
}

ScopePixelRange pixels_in(const RegionMask& mask, Scope scope) {
  if (!scope.is_world() && !mask.has(scope.region_id())) {
    throw LookupError("region id " + std::to_string(scope.region_id()) +
                      " not in mask table");
  }
  return ScopePixelRange(mask.data(), mask.ids().size(), scope.region_id(),
                         scope.is_world());
}

namespace {

constexpr char kMaskMagic[4] = {'R', 'M', 'S', 'K'};
constexpr std::uint16_t kMaskVersion = 1;

// Minimal CSV field splitter with double-quote support (names such as
// "Korea, Rep." stay intact).
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::vector<RegionInfo> load_region_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty table");
  auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "name" ||
      header[2] != "kind") {
    throw FormatError(path.string() + ": expected header id,name,kind");
  }
  std::vector<RegionInfo> table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() < 3) {
      throw FormatError(path.string() + ": malformed row '" + line + "'");
    }
    RegionInfo r;
    const long id = std::stol(fields[0]);
    if (id <= 0 || id > 0xFFFF) {
      throw FormatError(path.string() + ": region id out of range: " + fields[0]);
    }
    r.id = static_cast<std::uint16_t>(id);
    r.name = fields[1];
    if (fields[2] == "country") {
      r.kind = RegionKind::Country;
    } else if (fields[2] == "state") {
      r.kind = RegionKind::State;
    } else {
      throw FormatError(path.string() + ": kind must be country or state, got '" +
                        fields[2] + "'");
    }
    table.push_back(std::move(r));
  }
  return table;
}

}  // namespace

RegionMask load_mask(const std::filesystem::path& raster_path,
                     const std::filesystem::path& table_path) {
  std::ifstream in(raster_path, std::ios::binary);
  if (!in) throw IoError("cannot open " + raster_path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kMaskMagic)) {
    throw FormatError(raster_path.string() + ": not an RMSK file (bad magic)");
  }
  const auto version = detail::read_le<std::uint16_t>(in);
  if (version != kMaskVersion) {
    throw FormatError(raster_path.string() + ": unsupported RMSK version " +
                      std::to_string(version));
  }
  GridGeometry g;
  g.width = detail::read_le<std::uint32_t>(in);
  g.height = detail::read_le<std::uint32_t>(in);
  g.lon_min = detail::read_f64(in);
  g.lon_max = detail::read_f64(in);
  g.lat_min = detail::read_f64(in);
  g.lat_max = detail::read_f64(in);
  if (g.width == 0 || g.height == 0) {
    throw FormatError(raster_path.string() + ": empty grid dimensions");
  }
  g.cell_size = (g.lon_max - g.lon_min) / g.width;

  const std::size_t n = g.pixel_count();
  std::vector<std::uint16_t> ids(n);
  in.read(reinterpret_cast<char*>(ids.data()),
          static_cast<std::streamsize>(n * sizeof(std::uint16_t)));
  if (static_cast<std::size_t>(in.gcount()) != n * sizeof(std::uint16_t)) {
    throw TruncationError(raster_path.string() + ": truncated id payload");
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& id : ids) id = detail::byteswap(id);
  }
  return RegionMask(g, std::move(ids), load_region_table(table_path));
}

void write_mask(const RegionMask& mask, const std::filesystem::path& raster_path,
                const std::filesystem::path& table_path) {
  {
    std::ofstream out(raster_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + raster_path.string());
    out.write(kMaskMagic, 4);
    detail::write_le(out, kMaskVersion);
    const GridGeometry& g = mask.geometry();
    detail::write_le(out, g.width);
    detail::write_le(out, g.height);
    detail::write_f64(out, g.lon_min);
    detail::write_f64(out, g.lon_max);
    detail::write_f64(out, g.lat_min);
    detail::write_f64(out, g.lat_max);
    for (std::uint16_t id : mask.ids()) detail::write_le(out, id);
    if (!out) throw IoError("write failed for " + raster_path.string());
  }
  std::ofstream out(table_path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + table_path.string());
  out << "id,name,kind\n";
  for (const RegionInfo& r : mask.table()) {
    const bool needs_quotes = r.name.find_first_of(",\"") != std::string::npos;
    out << r.id << ',';
    if (needs_quotes) {
      out << '"';
      for (char c : r.name) {
        if (c == '"') out << '"';
        out << c;
      }
      out << '"';
    } else {
      out << r.name;
    }
    out << ',' << (r.kind == RegionKind::Country ? "country" : "state") << '\n';
  }
  if (!out) throw IoError("write failed for " + table_path.string());
}

}  // namespace skyglow
