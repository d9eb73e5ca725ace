#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include "skyglow/errors.hpp"

// Little-endian primitive I/O. All on-disk formats are explicitly LE so files
// are byte-identical across platforms.

namespace skyglow::detail {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template <typename T>
T byteswap(T v) {
  unsigned char* p = reinterpret_cast<unsigned char*>(&v);
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
    std::swap(p[i], p[sizeof(T) - 1 - i]);
  }
  return v;
}

template <typename T>
T to_le(T v) {
  if constexpr (std::endian::native == std::endian::big) return byteswap(v);
  return v;
}

template <typename T>
void write_le(std::ostream& out, T v) {
  v = to_le(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

inline void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  write_le(out, bits);
}

inline void write_f32(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  write_le(out, bits);
}

template <typename T>
T read_le(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw TruncationError("unexpected end of file");
  return to_le(v);
}

inline double read_f64(std::istream& in) {
  const std::uint64_t bits = read_le<std::uint64_t>(in);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

inline float read_f32(std::istream& in) {
  const std::uint32_t bits = read_le<std::uint32_t>(in);
  float v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace skyglow::detail
