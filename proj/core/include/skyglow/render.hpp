#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "skyglow/pipeline.hpp"

namespace skyglow {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

// Diverging encoding on a black background: negative values ramp black->blue,
// positive values black->red, and anything beyond clamp*sigma is marked with
// the extreme colors (cyan for decay, orange for growth).
struct Palette {
  Rgb extreme_negative{0, 255, 255};
  Rgb extreme_positive{255, 165, 0};
  Rgb background{0, 0, 0};
  double clamp = 3.0;  // multiples of the reference sigma
};

// Ramp intensity is round(255*|v|/(clamp*sigma_ref)), half away from zero.
// Requires sigma_ref > 0.
Rgb color_of(double value, double sigma_ref, const Palette& palette = {});

struct ImageBuffer {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> rgb;  // row-major triplets

  ImageBuffer() = default;
  ImageBuffer(std::uint32_t w, std::uint32_t h)
      : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

  void set(std::uint32_t x, std::uint32_t y, Rgb c) {
    const std::size_t k = (static_cast<std::size_t>(y) * width + x) * 3;
    rgb[k] = c.r;
    rgb[k + 1] = c.g;
    rgb[k + 2] = c.b;
  }
  Rgb get(std::uint32_t x, std::uint32_t y) const {
    const std::size_t k = (static_cast<std::size_t>(y) * width + x) * 3;
    return Rgb{rgb[k], rgb[k + 1], rgb[k + 2]};
  }
};

// Colors every valued pixel against the grid's own dispersion (population
// std of valued pixels); no-value pixels are background. Throws
// EmptyRenderError when the grid has no valued pixel.
ImageBuffer render_change_map(const CumulativeChangeGrid& grid,
                              const Palette& palette = {});

// Block-mean reduction over valued pixels so global maps stay a practical
// size; blocks with no valued pixel carry no value.
CumulativeChangeGrid downsample_mean(const CumulativeChangeGrid& grid,
                                     std::uint32_t max_width);

enum class ImageFormat { Ppm, Png };

// PPM output is bit-exact binary P6: "P6\n<w> <h>\n255\n" then raw triplets.
// PNG is 8-bit RGB, no interlace.
void write_image(const ImageBuffer& img, const std::filesystem::path& path,
                 ImageFormat format);

}  // namespace skyglow
