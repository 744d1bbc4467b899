#pragma once

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "gaze/error.hpp"
#include "gaze/saliency.hpp"

namespace gaze {

struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // 3 bytes per pixel, row-major

  static ImageRGB filled(int width, int height, uint8_t r, uint8_t g,
                         uint8_t b) {
    ImageRGB img;
    img.width = width;
    img.height = height;
    img.pixels.resize(size_t(width) * height * 3);
    for (size_t i = 0; i < img.pixels.size(); i += 3) {
      img.pixels[i] = r;
      img.pixels[i + 1] = g;
      img.pixels[i + 2] = b;
    }
    return img;
  }
};

namespace detail {

inline void put_u32_be(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(uint8_t(v >> 24));
  out.push_back(uint8_t(v >> 16));
  out.push_back(uint8_t(v >> 8));
  out.push_back(uint8_t(v));
}

inline void append_chunk(std::vector<uint8_t>& out, const char type[4],
                         const std::vector<uint8_t>& data) {
  put_u32_be(out, uint32_t(data.size()));
  const size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, out.data() + type_at, uInt(4 + data.size()));
  put_u32_be(out, uint32_t(crc));
}

// Minimal PNG encoder: filter 0 scanlines deflated with a fixed zlib level,
// so identical inputs yield identical bytes.
inline void write_png(const std::string& path, int width, int height,
                      int channels, const uint8_t* data) {
  if (width <= 0 || height <= 0) fail_validation("write_png: bad dimensions");
  std::vector<uint8_t> raw;
  raw.reserve(size_t(height) * (1 + size_t(width) * channels));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);  // filter type none
    const uint8_t* row = data + size_t(y) * width * channels;
    raw.insert(raw.end(), row, row + size_t(width) * channels);
  }
  uLongf bound = compressBound(uLong(raw.size()));
  std::vector<uint8_t> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(), uLong(raw.size()), 6) !=
      Z_OK) {
    fail_internal("write_png: deflate failed");
  }
  compressed.resize(bound);

  std::vector<uint8_t> png = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  std::vector<uint8_t> ihdr;
  put_u32_be(ihdr, uint32_t(width));
  put_u32_be(ihdr, uint32_t(height));
  ihdr.push_back(8);                             // bit depth
  ihdr.push_back(channels == 1 ? 0 : 2);         // gray or truecolor
  ihdr.push_back(0);                             // compression
  ihdr.push_back(0);                             // filter
  ihdr.push_back(0);                             // no interlace
  append_chunk(png, "IHDR", ihdr);
  append_chunk(png, "IDAT", compressed);
  append_chunk(png, "IEND", {});

  std::ofstream out(path, std::ios::binary);
  if (!out) fail_io("cannot open image for writing: " + path);
  out.write(reinterpret_cast<const char*>(png.data()),
            std::streamsize(png.size()));
  if (!out) fail_io("failed writing image: " + path);
}

}  // namespace detail

// 8-bit grayscale export, values scaled by the map maximum.
inline void write_png_gray(const std::string& path, const SaliencyMap& map) {
  const double peak = map.max_value();
  const double scale = peak > 0.0 ? 255.0 / peak : 0.0;
  std::vector<uint8_t> bytes(map.size());
  for (size_t i = 0; i < map.size(); ++i) {
    bytes[i] = uint8_t(std::lround(map.values[i] * scale));
  }
  detail::write_png(path, map.width, map.height, 1, bytes.data());
}

// Heat ramp: black -> blue -> red -> yellow -> white.
inline void heat_color(double v, uint8_t& r, uint8_t& g, uint8_t& b) {
  v = std::clamp(v, 0.0, 1.0);
  static constexpr double stops[5][3] = {{0, 0, 0},
                                         {0.1, 0.15, 0.65},
                                         {0.85, 0.2, 0.1},
                                         {1.0, 0.85, 0.1},
                                         {1.0, 1.0, 1.0}};
  const double x = v * 4.0;
  const int lo = std::min(3, int(x));
  const double f = x - lo;
  r = uint8_t(std::lround(255.0 * (stops[lo][0] + f * (stops[lo + 1][0] - stops[lo][0]))));
  g = uint8_t(std::lround(255.0 * (stops[lo][1] + f * (stops[lo + 1][1] - stops[lo][1]))));
  b = uint8_t(std::lround(255.0 * (stops[lo][2] + f * (stops[lo + 1][2] - stops[lo][2]))));
}

inline ImageRGB colormap(const SaliencyMap& map) {
  ImageRGB img;
  img.width = map.width;
  img.height = map.height;
  img.pixels.resize(map.size() * 3);
  const double peak = map.max_value();
  const double scale = peak > 0.0 ? 1.0 / peak : 0.0;
  for (size_t i = 0; i < map.size(); ++i) {
    heat_color(map.values[i] * scale, img.pixels[3 * i], img.pixels[3 * i + 1],
               img.pixels[3 * i + 2]);
  }
  return img;
}

inline void write_png_rgb(const std::string& path, const ImageRGB& img) {
  detail::write_png(path, img.width, img.height, 3, img.pixels.data());
}

inline void write_png_colormapped(const std::string& path,
                                  const SaliencyMap& map) {
  write_png_rgb(path, colormap(map));
}

// Side-by-side panel grid with a light separator, e.g. the six P2 group
// maps of one scene.
inline ImageRGB compose_grid(const std::vector<ImageRGB>& panels, int cols,
                             int pad = 2) {
  if (panels.empty() || cols < 1) {
    fail_validation("compose_grid: nothing to compose");
  }
  const int pw = panels.front().width;
  const int ph = panels.front().height;
  for (const ImageRGB& p : panels) {
    if (p.width != pw || p.height != ph) {
      fail_validation("compose_grid: panel size mismatch");
    }
  }
  const int rows = int((panels.size() + cols - 1) / cols);
  ImageRGB grid = ImageRGB::filled(cols * pw + (cols + 1) * pad,
                                   rows * ph + (rows + 1) * pad, 220, 220, 220);
  for (size_t i = 0; i < panels.size(); ++i) {
    const int cx = int(i) % cols;
    const int cy = int(i) / cols;
    const int x0 = pad + cx * (pw + pad);
    const int y0 = pad + cy * (ph + pad);
    for (int y = 0; y < ph; ++y) {
      std::memcpy(&grid.pixels[3 * (size_t(y0 + y) * grid.width + x0)],
                  &panels[i].pixels[3 * size_t(y) * pw], size_t(pw) * 3);
    }
  }
  return grid;
}

// Raw float export: 16-byte header (8-byte magic, u32 width, u32 height)
// followed by row-major float32 values.
inline constexpr char kRawMapMagic[8] = {'G', 'Z', 'S', 'A', 'L', 'M', 'P', '1'};

inline void write_raw_map(const std::string& path, const SaliencyMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_io("cannot open raw map for writing: " + path);
  out.write(kRawMapMagic, 8);
  const uint32_t w = uint32_t(map.width), h = uint32_t(map.height);
  out.write(reinterpret_cast<const char*>(&w), 4);
  out.write(reinterpret_cast<const char*>(&h), 4);
  std::vector<float> vals(map.values.begin(), map.values.end());
  out.write(reinterpret_cast<const char*>(vals.data()),
            std::streamsize(vals.size() * sizeof(float)));
  if (!out) fail_io("failed writing raw map: " + path);
}

inline SaliencyMap read_raw_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open raw map: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kRawMapMagic, 8) != 0) {
    fail_validation("not a raw saliency map: " + path);
  }
  uint32_t w = 0, h = 0;
  in.read(reinterpret_cast<char*>(&w), 4);
  in.read(reinterpret_cast<char*>(&h), 4);
  if (!in || w == 0 || h == 0) fail_validation("bad raw map header: " + path);
  std::vector<float> vals(size_t(w) * h);
  in.read(reinterpret_cast<char*>(vals.data()),
          std::streamsize(vals.size() * sizeof(float)));
  if (!in) fail_validation("truncated raw map: " + path);
  SaliencyMap map = SaliencyMap::zeros(int(w), int(h));
  for (size_t i = 0; i < vals.size(); ++i) map.values[i] = vals[i];
  return map;
}

}  // namespace gaze
