#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "gaze/error.hpp"
#include "gaze/types.hpp"

namespace gaze {

// Dynamic-resolution tiling: frames are matched against 35 candidate block
// layouts of at most 12 blocks, each block 448x448.
inline constexpr int kTileBase = 448;
inline constexpr int kMaxTileBlocks = 12;

struct TileGrid {
  int cols = 1;  // i
  int rows = 1;  // j

  int blocks() const { return cols * rows; }
  int target_width() const { return kTileBase * cols; }
  int target_height() const { return kTileBase * rows; }

  bool operator==(const TileGrid&) const = default;
};

// All (cols, rows) pairs with cols*rows <= 12, ascending cols then rows.
// There are exactly 35 of them.
inline const std::vector<TileGrid>& candidate_grids() {
  static const std::vector<TileGrid> grids = [] {
    std::vector<TileGrid> out;
    for (int i = 1; i <= kMaxTileBlocks; ++i) {
      for (int j = 1; i * j <= kMaxTileBlocks; ++j) {
        out.push_back(TileGrid{i, j});
      }
    }
    return out;
  }();
  return grids;
}

namespace detail {

// Compares |W/H - i1/j1| vs |W/H - i2/j2| exactly via cross-multiplication:
// |W*j - H*i| / (H*j). Returns <0, 0, >0.
inline int compare_ratio_error(int64_t w, int64_t h, const TileGrid& a,
                               const TileGrid& b) {
  const int64_t na = std::abs(w * a.rows - h * a.cols);
  const int64_t nb = std::abs(w * b.rows - h * b.cols);
  const __int128 lhs = (__int128)na * (h * (int64_t)b.rows);
  const __int128 rhs = (__int128)nb * (h * (int64_t)a.rows);
  if (lhs < rhs) return -1;
  if (lhs > rhs) return 1;
  return 0;
}

}  // namespace detail

// Picks the candidate whose aspect ratio is closest to W:H among candidates
// whose target area stays within 2x the original; if that filter removes
// everything, it is dropped. Ties break toward fewer blocks, then fewer
// columns.
inline TileGrid select_tile_grid(int width, int height) {
  if (width <= 0 || height <= 0) {
    fail_validation("select_tile_grid: dimensions must be positive");
  }
  const auto& all = candidate_grids();
  std::vector<TileGrid> pool;
  const int64_t area_cap = 2LL * width * height;
  for (const TileGrid& g : all) {
    const int64_t target = int64_t(g.target_width()) * g.target_height();
    if (target <= area_cap) pool.push_back(g);
  }
  if (pool.empty()) pool = all;

  TileGrid best = pool.front();
  for (size_t k = 1; k < pool.size(); ++k) {
    const TileGrid& g = pool[k];
    const int cmp = detail::compare_ratio_error(width, height, g, best);
    if (cmp < 0 ||
        (cmp == 0 && (g.blocks() < best.blocks() ||
                      (g.blocks() == best.blocks() && g.cols < best.cols)))) {
      best = g;
    }
  }
  return best;
}

// (x', y') = (x/W * W', y/H * H')
inline std::pair<double, double> rescale_point(double x, double y, double width,
                                               double height, double new_width,
                                               double new_height) {
  if (width <= 0.0 || height <= 0.0) {
    fail_validation("rescale_point: source dimensions must be positive");
  }
  return {x * new_width / width, y * new_height / height};
}

// Pixel -> [0,1000] grid, rounded to the nearest integral grid value.
inline GridPoint normalize_to_grid(double x, double y, double width,
                                   double height) {
  if (width <= 0.0 || height <= 0.0) {
    fail_validation("normalize_to_grid: dimensions must be positive");
  }
  if (!(x >= 0.0 && x <= width && y >= 0.0 && y <= height)) {
    fail_validation("normalize_to_grid: point outside the frame");
  }
  return GridPoint{std::round(kGridMax * x / width),
                   std::round(kGridMax * y / height)};
}

// [0,1000] grid -> pixel.
inline std::pair<double, double> denormalize_from_grid(const GridPoint& p,
                                                       double width,
                                                       double height) {
  if (width <= 0.0 || height <= 0.0) {
    fail_validation("denormalize_from_grid: dimensions must be positive");
  }
  if (!p.in_range()) {
    fail_validation("denormalize_from_grid: point outside the grid");
  }
  return {p.x * width / kGridMax, p.y * height / kGridMax};
}

}  // namespace gaze
