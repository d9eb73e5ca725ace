#include "skyglow/render.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "skyglow/streaming.hpp"

namespace skyglow {

Rgb color_of(double value, double sigma_ref, const Palette& palette) {
  if (!(sigma_ref > 0.0)) {
    throw ArgumentError("color_of: sigma_ref must be positive");
  }
  if (value == 0.0 || std::isnan(value)) return palette.background;
  const double limit = palette.clamp * sigma_ref;
  const double mag = std::abs(value);
  if (mag > limit) {
    return value > 0.0 ? palette.extreme_positive : palette.extreme_negative;
  }
  const auto channel =
      static_cast<std::uint8_t>(std::lround(255.0 * mag / limit));
  if (value > 0.0) return Rgb{channel, 0, 0};
  return Rgb{0, 0, channel};
}

ImageBuffer render_change_map(const CumulativeChangeGrid& grid,
                              const Palette& palette) {
  const std::int64_t n = grid.valued_count();
  if (n == 0) {
    throw EmptyRenderError("change map has no valued pixels");
  }
  // sigma_ref: population std of the valued pixels.
  CompensatedSum s1;
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    if (grid.active_years[i] > 0) s1.add(grid.values[i]);
  }
  const double mean = s1.value() / static_cast<double>(n);
  CompensatedSum s2;
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    if (grid.active_years[i] > 0) {
      const double c = grid.values[i] - mean;
      s2.add(c * c);
    }
  }
  const double sigma_ref = std::sqrt(s2.value() / static_cast<double>(n));

  ImageBuffer img(grid.geometry.width, grid.geometry.height);
  for (std::uint32_t y = 0; y < grid.geometry.height; ++y) {
    for (std::uint32_t x = 0; x < grid.geometry.width; ++x) {
      const std::size_t idx = grid.geometry.index_of(x, y);
      if (grid.active_years[idx] == 0) {
        img.set(x, y, palette.background);
        continue;
      }
      const double v = grid.values[idx];
      if (sigma_ref == 0.0) {
        // Degenerate dispersion: zero stays background, anything else is an
        // extreme by definition.
        img.set(x, y, v == 0.0 ? palette.background
                               : (v > 0.0 ? palette.extreme_positive
                                          : palette.extreme_negative));
      } else {
        img.set(x, y, color_of(v, sigma_ref, palette));
      }
    }
  }
  return img;
}

CumulativeChangeGrid downsample_mean(const CumulativeChangeGrid& grid,
                                     std::uint32_t max_width) {
  if (max_width == 0) throw ArgumentError("downsample: max_width must be positive");
  if (grid.geometry.width <= max_width) return grid;
  const std::uint32_t block =
      (grid.geometry.width + max_width - 1) / max_width;
  CumulativeChangeGrid out;
  out.years = grid.years;
  out.scope = grid.scope;
  out.geometry = grid.geometry;
  out.geometry.width = (grid.geometry.width + block - 1) / block;
  out.geometry.height = (grid.geometry.height + block - 1) / block;
  out.geometry.cell_size = grid.geometry.cell_size * block;
  // Pad the extent so the coarser lattice stays self-consistent.
  out.geometry.lon_max =
      out.geometry.lon_min + out.geometry.width * out.geometry.cell_size;
  out.geometry.lat_min =
      out.geometry.lat_max - out.geometry.height * out.geometry.cell_size;
  const std::size_t n = out.geometry.pixel_count();
  out.values.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.active_years.assign(n, 0);
  for (std::uint32_t oy = 0; oy < out.geometry.height; ++oy) {
    for (std::uint32_t ox = 0; ox < out.geometry.width; ++ox) {
      CompensatedSum sum;
      std::uint32_t count = 0;
      for (std::uint32_t dy = 0; dy < block; ++dy) {
        const std::uint32_t y = oy * block + dy;
        if (y >= grid.geometry.height) break;
        for (std::uint32_t dx = 0; dx < block; ++dx) {
          const std::uint32_t x = ox * block + dx;
          if (x >= grid.geometry.width) break;
          const std::size_t idx = grid.geometry.index_of(x, y);
          if (grid.active_years[idx] == 0) continue;
          sum.add(grid.values[idx]);
          ++count;
        }
      }
      const std::size_t oidx = out.geometry.index_of(ox, oy);
      if (count > 0) {
        out.values[oidx] = sum.value() / count;
        out.active_years[oidx] = 1;
      }
    }
  }
  return out;
}

namespace {

void write_ppm(const ImageBuffer& img, std::ostream& out) {
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.rgb.data()),
            static_cast<std::streamsize>(img.rgb.size()));
}

void put_u32_be(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  buf.push_back(static_cast<std::uint8_t>(v >> 24));
  buf.push_back(static_cast<std::uint8_t>(v >> 16));
  buf.push_back(static_cast<std::uint8_t>(v >> 8));
  buf.push_back(static_cast<std::uint8_t>(v));
}

void write_chunk(std::ostream& out, const char type[4],
                 const std::vector<std::uint8_t>& data) {
  std::vector<std::uint8_t> head;
  put_u32_be(head, static_cast<std::uint32_t>(data.size()));
  out.write(reinterpret_cast<const char*>(head.data()), 4);
  out.write(type, 4);
  if (!data.empty()) {
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
  }
  uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(type), 4);
  if (!data.empty()) {
    crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
  }
  std::vector<std::uint8_t> tail;
  put_u32_be(tail, static_cast<std::uint32_t>(crc));
  out.write(reinterpret_cast<const char*>(tail.data()), 4);
}

void write_png(const ImageBuffer& img, std::ostream& out) {
  static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  out.write(reinterpret_cast<const char*>(sig), 8);

  std::vector<std::uint8_t> ihdr;
  put_u32_be(ihdr, img.width);
  put_u32_be(ihdr, img.height);
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // color type: truecolor RGB
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // no interlace
  write_chunk(out, "IHDR", ihdr);

  // Scanlines with filter byte 0.
  const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
  std::vector<std::uint8_t> raw;
  raw.reserve((stride + 1) * img.height);
  for (std::uint32_t y = 0; y < img.height; ++y) {
    raw.push_back(0);
    const std::uint8_t* row = img.rgb.data() + std::size_t(y) * stride;
    raw.insert(raw.end(), row, row + stride);
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(),
                static_cast<uLong>(raw.size()), Z_BEST_COMPRESSION) != Z_OK) {
    throw IoError("PNG deflate failed");
  }
  compressed.resize(bound);
  write_chunk(out, "IDAT", compressed);
  write_chunk(out, "IEND", {});
}

}  // namespace

void write_image(const ImageBuffer& img, const std::filesystem::path& path,
                 ImageFormat format) {
  if (img.width == 0 || img.height == 0 ||
      img.rgb.size() != static_cast<std::size_t>(img.width) * img.height * 3) {
    throw ArgumentError("write_image: malformed buffer");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  if (format == ImageFormat::Ppm) {
    write_ppm(img, out);
  } else {
    write_png(img, out);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace skyglow
