#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skyglow/geometry.hpp"

namespace skyglow {

enum class RegionKind : std::uint8_t { Country, State };

struct RegionInfo {
  std::uint16_t id = 0;
  std::string name;
  RegionKind kind = RegionKind::Country;
};

// Pixel -> region-id map plus the region table. Id 0 means unassigned
// (ocean, gas flares, anything the mask supplier excluded). Immutable and
// shareable across threads.
class RegionMask {
 public:
  RegionMask(GridGeometry geometry, std::vector<std::uint16_t> ids,
             std::vector<RegionInfo> table);

  const GridGeometry& geometry() const { return geometry_; }
  std::span<const std::uint16_t> ids() const { return ids_; }
  const std::uint16_t* data() const { return ids_.data(); }
  const std::vector<RegionInfo>& table() const { return table_; }

  const RegionInfo* find(std::uint16_t id) const;
  const RegionInfo* find(std::string_view name) const;
  bool has(std::uint16_t id) const { return find(id) != nullptr; }

 private:
  GridGeometry geometry_;
  std::vector<std::uint16_t> ids_;
  std::vector<RegionInfo> table_;
};

// Analysis scope: every pixel, or the pixels of one region.
class Scope {
 public:
  static Scope world() { return Scope(); }
  static Scope region(std::uint16_t id) { return Scope(id); }

  bool is_world() const { return world_; }
  std::uint16_t region_id() const { return id_; }

  // "World" or the region's table name.
  std::string label(const RegionMask* mask) const;

  bool operator==(const Scope& o) const { return world_ == o.world_ && id_ == o.id_; }

 private:
  Scope() = default;
  explicit Scope(std::uint16_t id) : world_(false), id_(id) {}
  bool world_ = true;
  std::uint16_t id_ = 0;
};

// Lazy row-major walk over the pixel indices of a scope.
class ScopePixelRange {
 public:
  class iterator {
   public:
    using value_type = std::size_t;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    iterator(const std::uint16_t* ids, std::size_t pos, std::size_t end,
             std::uint16_t id, bool world)
        : ids_(ids), pos_(pos), end_(end), id_(id), world_(world) {
      skip();
    }

    std::size_t operator*() const { return pos_; }
    iterator& operator++() {
      ++pos_;
      skip();
      return *this;
    }
    iterator operator++(int) {
      iterator tmp = *this;
      ++*this;
      return tmp;
    }
    bool operator==(const iterator& o) const { return pos_ == o.pos_; }

   private:
    void skip() {
      if (world_) return;
      while (pos_ < end_ && ids_[pos_] != id_) ++pos_;
    }
    const std::uint16_t* ids_ = nullptr;
    std::size_t pos_ = 0;
    std::size_t end_ = 0;
    std::uint16_t id_ = 0;
    bool world_ = true;
  };

  ScopePixelRange(const std::uint16_t* ids, std::size_t count, std::uint16_t id,
                  bool world)
      : ids_(ids), count_(count), id_(id), world_(world) {}

  iterator begin() const { return iterator(ids_, 0, count_, id_, world_); }
  iterator end() const { return iterator(ids_, count_, count_, id_, world_); }

 private:
  const std::uint16_t* ids_;
  std::size_t count_;
  std::uint16_t id_;
  bool world_;
};

// Row-major iteration over the pixels of `scope`. Region scopes must name an
// id present in the mask table.
ScopePixelRange pixels_in(const RegionMask& mask, Scope scope);

// RMSK: magic "RMSK", version u16 = 1, width u32, height u32,
// lon_min/lon_max/lat_min/lat_max f64, then width*height u16 ids (LE).
// The table is a UTF-8 CSV with header id,name,kind and kind in
// {country,state}.
RegionMask load_mask(const std::filesystem::path& raster_path,
                     const std::filesystem::path& table_path);
void write_mask(const RegionMask& mask, const std::filesystem::path& raster_path,
                const std::filesystem::path& table_path);

}  // namespace skyglow
