#pragma once

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "gaze/error.hpp"
#include "gaze/types.hpp"

namespace gaze {

// Output of one DBSCAN run. Cluster member lists hold indices into the input
// point vector, ascending; clusters are ordered by discovery (scan order of
// their first core point). Every input index is in exactly one cluster or in
// `noise`.
struct ClusterResult {
  std::vector<std::vector<int>> clusters;
  std::vector<int> noise;
  std::vector<GridPoint> centroids;  // arithmetic mean per cluster, grid units
};

namespace detail {

// Uniform hash grid over the unit square with cell size eps, so a point's
// eps-neighborhood is contained in its 3x3 cell block.
class NeighborGrid {
 public:
  NeighborGrid(const std::vector<GridPoint>& pts, double eps)
      : pts_(pts), inv_cell_(1.0 / eps), eps_sq_(eps * eps) {
    cells_.reserve(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
      cells_[key(unit_x(i), unit_y(i))].push_back(int(i));
    }
  }

  // Indices within eps of point i, inclusive of i itself.
  void query(int i, std::vector<int>& out) const {
    out.clear();
    const double ux = unit_x(i), uy = unit_y(i);
    const int64_t cx = cell_of(ux), cy = cell_of(uy);
    for (int64_t gx = cx - 1; gx <= cx + 1; ++gx) {
      for (int64_t gy = cy - 1; gy <= cy + 1; ++gy) {
        auto it = cells_.find(pack(gx, gy));
        if (it == cells_.end()) continue;
        for (int j : it->second) {
          const double dx = unit_x(j) - ux;
          const double dy = unit_y(j) - uy;
          if (dx * dx + dy * dy <= eps_sq_) out.push_back(j);
        }
      }
    }
  }

 private:
  double unit_x(size_t i) const { return pts_[i].x / kGridMax; }
  double unit_y(size_t i) const { return pts_[i].y / kGridMax; }
  int64_t cell_of(double u) const { return int64_t(std::floor(u * inv_cell_)); }
  static uint64_t pack(int64_t gx, int64_t gy) {
    return (uint64_t(uint32_t(gx)) << 32) | uint64_t(uint32_t(gy));
  }
  uint64_t key(double ux, double uy) const {
    return pack(cell_of(ux), cell_of(uy));
  }

  const std::vector<GridPoint>& pts_;
  double inv_cell_;
  double eps_sq_;
  std::unordered_map<uint64_t, std::vector<int>> cells_;
};

}  // namespace detail

// DBSCAN over grid points. Distances are Euclidean on coordinates divided by
// 1000 (unit square), so eps values like 0.03-0.05 are on the normalized
// scale. A point is core iff its eps-neighborhood, itself included, has at
// least min_pts members; border points go to the first cluster that reaches
// them in scan order. With min_pts = 1 every point is core and noise is
// empty.
inline ClusterResult dbscan(const std::vector<GridPoint>& points, double eps,
                            int min_pts) {
  if (eps <= 0.0) fail_validation("dbscan: eps must be positive");
  if (min_pts < 1) fail_validation("dbscan: min_pts must be >= 1");

  ClusterResult result;
  const int n = int(points.size());
  if (n == 0) return result;

  detail::NeighborGrid grid(points, eps);

  constexpr int kUnvisited = -2;
  constexpr int kNoise = -1;
  std::vector<int> label(n, kUnvisited);
  std::vector<int> neighbors, seed_neighbors;

  int next_cluster = 0;
  for (int i = 0; i < n; ++i) {
    if (label[i] != kUnvisited) continue;
    grid.query(i, neighbors);
    if (int(neighbors.size()) < min_pts) {
      label[i] = kNoise;
      continue;
    }
    const int cluster = next_cluster++;
    label[i] = cluster;
    std::vector<int> frontier = neighbors;
    for (size_t f = 0; f < frontier.size(); ++f) {
      const int q = frontier[f];
      if (label[q] == kNoise) label[q] = cluster;  // border point
      if (label[q] != kUnvisited) continue;
      label[q] = cluster;
      grid.query(q, seed_neighbors);
      if (int(seed_neighbors.size()) >= min_pts) {
        frontier.insert(frontier.end(), seed_neighbors.begin(),
                        seed_neighbors.end());
      }
    }
  }

  result.clusters.resize(next_cluster);
  for (int i = 0; i < n; ++i) {
    if (label[i] == kNoise) {
      result.noise.push_back(i);
    } else {
      result.clusters[label[i]].push_back(i);
    }
  }
  result.centroids.reserve(result.clusters.size());
  for (const auto& members : result.clusters) {
    if (members.empty()) fail_internal("dbscan: empty cluster");
    double sx = 0.0, sy = 0.0;
    for (int idx : members) {
      sx += points[idx].x;
      sy += points[idx].y;
    }
    result.centroids.push_back(
        GridPoint{sx / double(members.size()), sy / double(members.size())});
  }
  return result;
}

// Two-stage consolidation policy: scenes with few points are kept raw, dense
// scenes are clustered, and if the clustered output is still too large a
// stricter configuration is rerun on the raw points (its noise is dropped).
struct ClusterPolicy {
  int skip_below = 100;
  double base_eps = 0.04;
  int base_min_pts = 1;
  double strict_eps = 0.04;
  int strict_min_pts = 2;
  int strict_above = 200;

  void validate() const {
    if (skip_below >= strict_above) {
      fail_validation("ClusterPolicy: skip_below must be < strict_above");
    }
    if (base_eps <= 0.0 || strict_eps <= 0.0) {
      fail_validation("ClusterPolicy: eps must be positive");
    }
    if (base_min_pts < 1 || strict_min_pts < 1) {
      fail_validation("ClusterPolicy: minPts must be >= 1");
    }
  }
};

inline FixationSet adaptive_cluster(const FixationSet& points,
                                    const ClusterPolicy& policy = {}) {
  policy.validate();
  if (int(points.size()) < policy.skip_below) return points;
  ClusterResult base = dbscan(points, policy.base_eps, policy.base_min_pts);
  if (int(base.centroids.size()) <= policy.strict_above) {
    return base.centroids;
  }
  // Strict rerun operates on the raw points, not on the base centroids.
  ClusterResult strict =
      dbscan(points, policy.strict_eps, policy.strict_min_pts);
  return strict.centroids;
}

}  // namespace gaze
