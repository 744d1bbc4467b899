#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "gaze/error.hpp"
#include "gaze/geometry.hpp"
#include "gaze/types.hpp"

namespace gaze {

// Dense row-major attention map at scene resolution. Values are nonnegative
// doubles; `normalized` marks a map whose values sum to 1.
struct SaliencyMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;
  bool normalized = false;

  static SaliencyMap zeros(int width, int height) {
    if (width <= 0 || height <= 0) {
      fail_validation("SaliencyMap: dimensions must be positive");
    }
    SaliencyMap m;
    m.width = width;
    m.height = height;
    m.values.assign(size_t(width) * size_t(height), 0.0);
    return m;
  }

  double& at(int x, int y) { return values[size_t(y) * width + x]; }
  double at(int x, int y) const { return values[size_t(y) * width + x]; }
  size_t size() const { return values.size(); }

  double sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }

  double max_value() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, v);
    return m;
  }

  bool same_shape(const SaliencyMap& other) const {
    return width == other.width && height == other.height;
  }
};

// Isotropic Gaussian splat settings. sigma <= 0 selects the default
// bandwidth of scene_width / 25.
struct KernelConfig {
  double sigma = 0.0;
  double truncate_radius = 3.0;  // in multiples of sigma

  double resolved_sigma(int scene_width) const {
    const double s = sigma > 0.0 ? sigma : double(scene_width) / 25.0;
    if (s <= 0.0) fail_validation("KernelConfig: sigma must be positive");
    return s;
  }

  void validate() const {
    if (truncate_radius < 1.0) {
      fail_validation("KernelConfig: truncate_radius must be >= 1");
    }
  }
};

// Splats each fixation (grid coordinates) as a Gaussian of std sigma at
// native scene resolution, truncated at truncate_radius * sigma.
// Contributions from all points sum; an empty set yields the zero map.
inline SaliencyMap render_heatmap(const FixationSet& points,
                                  const SceneWindow& scene,
                                  const KernelConfig& cfg = {}) {
  cfg.validate();
  SaliencyMap map = SaliencyMap::zeros(scene.width, scene.height);
  if (points.empty()) return map;

  const double sigma = cfg.resolved_sigma(scene.width);
  const double radius = cfg.truncate_radius * sigma;
  const double radius_sq = radius * radius;
  const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);

  for (const GridPoint& p : points) {
    const auto [px, py] = denormalize_from_grid(p, scene.width, scene.height);
    const int x0 = std::max(0, int(std::ceil(px - radius)));
    const int x1 = std::min(scene.width - 1, int(std::floor(px + radius)));
    const int y0 = std::max(0, int(std::ceil(py - radius)));
    const int y1 = std::min(scene.height - 1, int(std::floor(py + radius)));
    for (int y = y0; y <= y1; ++y) {
      const double dy = double(y) - py;
      for (int x = x0; x <= x1; ++x) {
        const double dx = double(x) - px;
        const double d_sq = dx * dx + dy * dy;
        if (d_sq > radius_sq) continue;
        map.at(x, y) += std::exp(-d_sq * inv_two_sigma_sq);
      }
    }
  }
  return map;
}

// Scales values to sum to 1. The all-zero map has no distribution to
// normalize and is rejected.
inline SaliencyMap normalize_map(const SaliencyMap& map) {
  const double total = map.sum();
  if (!(total > 0.0)) fail_validation("normalize_map: degenerate map");
  SaliencyMap out = map;
  for (double& v : out.values) v /= total;
  out.normalized = true;
  return out;
}

// Box-average downsampling for metric-speed configurations. Factor 1 is the
// identity.
inline SaliencyMap downsample(const SaliencyMap& map, int factor) {
  if (factor < 1) fail_validation("downsample: factor must be >= 1");
  if (factor == 1) return map;
  const int w = std::max(1, map.width / factor);
  const int h = std::max(1, map.height / factor);
  SaliencyMap out = SaliencyMap::zeros(w, h);
  std::vector<int> counts(out.size(), 0);
  for (int y = 0; y < map.height; ++y) {
    const int oy = std::min(h - 1, y / factor);
    for (int x = 0; x < map.width; ++x) {
      const int ox = std::min(w - 1, x / factor);
      out.at(ox, oy) += map.at(x, y);
      counts[size_t(oy) * w + ox]++;
    }
  }
  for (size_t i = 0; i < out.size(); ++i) {
    if (counts[i] > 0) out.values[i] /= counts[i];
  }
  return out;
}

}  // namespace gaze
