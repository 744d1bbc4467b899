#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gaze/clustering.hpp"
#include "gaze/rng.hpp"
#include "support/oracles.hpp"

using namespace gaze;

namespace {

std::vector<GridPoint> random_points(RandomStream& rng, int n) {
  std::vector<GridPoint> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) {
    pts.push_back(GridPoint{rng.next_double() * 1000.0,
                            rng.next_double() * 1000.0});
  }
  return pts;
}

void require_matches_oracle(const std::vector<GridPoint>& pts, double eps,
                            int min_pts) {
  const ClusterResult got = dbscan(pts, eps, min_pts);
  const oracle::Clusters want = oracle::dbscan_brute_force(pts, eps, min_pts);
  REQUIRE(got.clusters == want.clusters);
  REQUIRE(got.noise == want.noise);
}

}  // namespace

TEST_CASE("dbscan basic semantics") {
  SECTION("five identical points form one cluster at that point") {
    const std::vector<GridPoint> pts(5, GridPoint{400, 600});
    const ClusterResult r = dbscan(pts, 0.04, 1);
    REQUIRE(r.clusters.size() == 1);
    REQUIRE(r.clusters[0].size() == 5);
    CHECK(r.noise.empty());
    CHECK(r.centroids[0] == GridPoint{400, 600});
  }

  SECTION("minPts=1 makes isolated points singleton clusters, not noise") {
    const std::vector<GridPoint> pts = {{0, 0}, {500, 500}, {999, 999}};
    const ClusterResult r = dbscan(pts, 0.04, 1);
    REQUIRE(r.clusters.size() == 3);
    CHECK(r.noise.empty());
  }

  SECTION("empty input") {
    const ClusterResult r = dbscan({}, 0.04, 1);
    CHECK(r.clusters.empty());
    CHECK(r.noise.empty());
    CHECK(r.centroids.empty());
  }

  SECTION("bad parameters rejected") {
    CHECK_THROWS_AS(dbscan({}, 0.0, 1), Error);
    CHECK_THROWS_AS(dbscan({}, 0.1, 0), Error);
  }

  SECTION("neighborhood includes the point itself") {
    // one isolated point with minPts=1 is core; with minPts=2 it is noise
    const std::vector<GridPoint> pts = {{100, 100}};
    CHECK(dbscan(pts, 0.04, 1).clusters.size() == 1);
    const ClusterResult strict = dbscan(pts, 0.04, 2);
    CHECK(strict.clusters.empty());
    REQUIRE(strict.noise == std::vector<int>{0});
  }
}

TEST_CASE("dbscan equals the brute-force oracle") {
  SECTION("the spec instance: 20 points, eps 0.1, minPts 3") {
    RandomStream rng(42);
    require_matches_oracle(random_points(rng, 20), 0.1, 3);
  }

  SECTION("randomized instances across parameter ranges") {
    RandomStream rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = rng.uniform_int(0, 40);
      const double eps = 0.01 + rng.next_double() * 0.3;
      const int min_pts = rng.uniform_int(1, 5);
      // cluster-prone layouts: mix a few tight blobs with uniform scatter
      std::vector<GridPoint> pts;
      const int blobs = rng.uniform_int(0, 4);
      for (int b = 0; b < blobs && int(pts.size()) < n; ++b) {
        const GridPoint c{rng.next_double() * 1000, rng.next_double() * 1000};
        const int members = rng.uniform_int(1, 8);
        for (int m = 0; m < members && int(pts.size()) < n; ++m) {
          pts.push_back(GridPoint{
              std::clamp(c.x + rng.normal(0, 25), 0.0, 1000.0),
              std::clamp(c.y + rng.normal(0, 25), 0.0, 1000.0)});
        }
      }
      while (int(pts.size()) < n) {
        pts.push_back(
            GridPoint{rng.next_double() * 1000, rng.next_double() * 1000});
      }
      require_matches_oracle(pts, eps, min_pts);
    }
  }

  SECTION("chain property: every member reachable from a core of its cluster") {
    RandomStream rng(77);
    for (int trial = 0; trial < 30; ++trial) {
      const auto pts = random_points(rng, 30);
      const double eps = 0.05 + rng.next_double() * 0.2;
      const int min_pts = rng.uniform_int(1, 4);
      const ClusterResult r = dbscan(pts, eps, min_pts);
      REQUIRE(oracle::chain_property_holds(pts, eps, min_pts, r.clusters));
    }
  }
}

TEST_CASE("dbscan determinism and structure") {
  RandomStream rng(9);
  const auto pts = random_points(rng, 35);

  SECTION("identical runs produce identical results") {
    const ClusterResult a = dbscan(pts, 0.08, 2);
    const ClusterResult b = dbscan(pts, 0.08, 2);
    CHECK(a.clusters == b.clusters);
    CHECK(a.noise == b.noise);
  }

  SECTION("partition: every index in exactly one cluster or noise") {
    const ClusterResult r = dbscan(pts, 0.06, 2);
    std::vector<int> seen(pts.size(), 0);
    for (const auto& members : r.clusters) {
      for (int i : members) seen[i]++;
    }
    for (int i : r.noise) seen[i]++;
    for (int count : seen) REQUIRE(count == 1);
  }

  SECTION("centroid equals the member mean") {
    const ClusterResult r = dbscan(pts, 0.1, 1);
    for (size_t c = 0; c < r.clusters.size(); ++c) {
      double sx = 0, sy = 0;
      double min_x = 1e9, max_x = -1e9, min_y = 1e9, max_y = -1e9;
      for (int i : r.clusters[c]) {
        sx += pts[i].x;
        sy += pts[i].y;
        min_x = std::min(min_x, pts[i].x);
        max_x = std::max(max_x, pts[i].x);
        min_y = std::min(min_y, pts[i].y);
        max_y = std::max(max_y, pts[i].y);
      }
      const double n = double(r.clusters[c].size());
      CHECK(r.centroids[c].x == Catch::Approx(sx / n).margin(1e-9));
      CHECK(r.centroids[c].y == Catch::Approx(sy / n).margin(1e-9));
      // centroid inside the members' bounding box
      CHECK(r.centroids[c].x >= min_x);
      CHECK(r.centroids[c].x <= max_x);
      CHECK(r.centroids[c].y >= min_y);
      CHECK(r.centroids[c].y <= max_y);
    }
  }

  SECTION("cluster count nonincreasing in eps at minPts=1") {
    RandomStream gen(31);
    for (int trial = 0; trial < 10; ++trial) {
      const auto cloud = random_points(gen, 200);
      size_t prev = SIZE_MAX;
      for (double eps : {0.03, 0.04, 0.05}) {
        const size_t count = dbscan(cloud, eps, 1).clusters.size();
        REQUIRE(count <= prev);
        prev = count;
      }
    }
  }
}

TEST_CASE("adaptive clustering policy") {
  SECTION("scenes below the threshold pass through verbatim") {
    RandomStream rng(1);
    std::vector<GridPoint> pts;
    for (int i = 0; i < 99; ++i) {
      pts.push_back(GridPoint{rng.next_double() * 1000, rng.next_double() * 1000});
    }
    CHECK(adaptive_cluster(pts) == pts);
  }

  SECTION("empty input stays empty") {
    CHECK(adaptive_cluster({}).empty());
  }

  SECTION("well-separated tight blobs collapse to their centers") {
    // 40 blob centers on a coarse lattice, >= 125 grid units apart; blob
    // spread is tiny relative to eps*1000 = 40.
    RandomStream rng(123);
    std::vector<GridPoint> centers;
    for (int cy = 0; cy < 5; ++cy) {
      for (int cx = 0; cx < 8; ++cx) {
        centers.push_back(GridPoint{62.5 + cx * 125.0, 100.0 + cy * 200.0});
      }
    }
    std::vector<GridPoint> pts;
    for (int i = 0; i < 150; ++i) {
      const GridPoint& c = centers[i % centers.size()];
      pts.push_back(GridPoint{c.x + rng.normal(0, 1.0), c.y + rng.normal(0, 1.0)});
    }
    const FixationSet out = adaptive_cluster(pts);
    REQUIRE(out.size() == centers.size());
    for (const GridPoint& c : centers) {
      double best = 1e18;
      for (const GridPoint& o : out) {
        best = std::min(best, std::sqrt(squared_distance(c, o)));
      }
      REQUIRE(best <= 2.0);
    }
  }

  SECTION("strict rerun kicks in above the centroid cap and keeps all output") {
    // 210 tight pairs, far apart: base config yields 210 clusters (> 200),
    // strict minPts=2 still sees every pair as core, so all 210 remain.
    std::vector<GridPoint> pts;
    for (int i = 0; i < 210; ++i) {
      const double x = 3.0 + (i % 21) * 47.0;
      const double y = 3.0 + (i / 21) * 97.0;
      pts.push_back(GridPoint{x, y});
      pts.push_back(GridPoint{x + 1.0, y});
    }
    const FixationSet out = adaptive_cluster(pts);
    CHECK(out.size() == 210);
  }

  SECTION("strict rerun drops noise") {
    // 250 isolated singletons: base gives 250 clusters; strict minPts=2
    // classifies everything as noise, so the result is empty.
    std::vector<GridPoint> pts;
    for (int i = 0; i < 250; ++i) {
      pts.push_back(GridPoint{2.0 + (i % 22) * 45.0, 2.0 + (i / 22) * 82.0});
    }
    const FixationSet out = adaptive_cluster(pts);
    CHECK(out.empty());
  }
}
