#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include "protac/error.hpp"

namespace protac {

/// 8-bit grayscale raster.
struct Image8 {
  int width = 0, height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  Image8() = default;
  Image8(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<size_t>(w) * static_cast<size_t>(h), fill) {}

  std::uint8_t at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
  bool same_size(const Image8& o) const { return width == o.width && height == o.height; }
};

/// Signed float raster, used for reference-normalized tactile images.
struct FloatImage {
  int width = 0, height = 0;
  std::vector<float> pixels;

  FloatImage() = default;
  FloatImage(int w, int h, float fill = 0.0f)
      : width(w), height(h), pixels(static_cast<size_t>(w) * static_cast<size_t>(h), fill) {}

  float at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
  float& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
};

/// Per-pixel axial depth map (mm). Invalid pixels (no surface hit, or depth
/// the camera cannot express) carry a NaN sentinel and are excluded from all
/// downstream index sets.
struct DepthMap {
  int width = 0, height = 0;
  std::vector<double> depth;

  DepthMap() = default;
  DepthMap(int w, int h)
      : width(w), height(h),
        depth(static_cast<size_t>(w) * static_cast<size_t>(h),
              std::numeric_limits<double>::quiet_NaN()) {}

  double at(int x, int y) const { return depth[static_cast<size_t>(y) * width + x]; }
  double& at(int x, int y) { return depth[static_cast<size_t>(y) * width + x]; }
  bool valid(int x, int y) const { return std::isfinite(at(x, y)); }
  static bool valid_value(double d) { return std::isfinite(d); }
  void invalidate(int x, int y) { at(x, y) = std::numeric_limits<double>::quiet_NaN(); }

  int valid_count() const {
    int n = 0;
    for (double d : depth) n += std::isfinite(d) ? 1 : 0;
    return n;
  }
};

// ---------------------------------------------------------------------------
// PGM (binary, 8-bit)

inline std::string write_pgm(const Image8& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  return out;
}

inline Image8 read_pgm(const std::string& data) {
  if (data.rfind("P5", 0) != 0) throw validation_error("pgm: not a binary PGM (P5) file");
  size_t pos = 2;
  auto next_token = [&]() -> long {
    while (pos < data.size() && (std::isspace(static_cast<unsigned char>(data[pos])) || data[pos] == '#')) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else {
        ++pos;
      }
    }
    size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    if (start == pos) throw validation_error("pgm: truncated header");
    return std::stol(data.substr(start, pos - start));
  };
  const long w = next_token(), h = next_token(), maxval = next_token();
  if (maxval != 255) throw validation_error("pgm: expected maxval 255");
  ++pos;  // single whitespace after maxval
  Image8 img(static_cast<int>(w), static_cast<int>(h));
  if (data.size() - pos < img.pixels.size()) throw validation_error("pgm: truncated pixel data");
  std::memcpy(img.pixels.data(), data.data() + pos, img.pixels.size());
  return img;
}

// ---------------------------------------------------------------------------
// PTDM: depth-map grid, 16-byte header (magic "PTDM", width and height as
// little-endian 32-bit integers, 4 reserved bytes), then row-major 32-bit
// floats in mm. Invalid pixels are stored as NaN.

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline std::uint32_t get_u32_le(const std::string& s, size_t pos) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos])) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos + 1])) << 8) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos + 2])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos + 3])) << 24);
}

}  // namespace detail

inline std::string write_ptdm(const DepthMap& map) {
  std::string out = "PTDM";
  detail::put_u32_le(out, static_cast<std::uint32_t>(map.width));
  detail::put_u32_le(out, static_cast<std::uint32_t>(map.height));
  detail::put_u32_le(out, 0);  // reserved
  for (double d : map.depth) {
    const float f = static_cast<float>(d);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    detail::put_u32_le(out, bits);
  }
  return out;
}

inline DepthMap read_ptdm(const std::string& data) {
  if (data.size() < 16 || data.compare(0, 4, "PTDM") != 0)
    throw validation_error("ptdm: bad magic");
  const int w = static_cast<int>(detail::get_u32_le(data, 4));
  const int h = static_cast<int>(detail::get_u32_le(data, 8));
  if (w <= 0 || h <= 0 || data.size() < 16 + 4 * static_cast<size_t>(w) * static_cast<size_t>(h))
    throw validation_error("ptdm: truncated data");
  DepthMap map(w, h);
  for (size_t i = 0; i < map.depth.size(); ++i) {
    const std::uint32_t bits = detail::get_u32_le(data, 16 + 4 * i);
    float f;
    std::memcpy(&f, &bits, 4);
    map.depth[i] = f;
  }
  return map;
}

}  // namespace protac
