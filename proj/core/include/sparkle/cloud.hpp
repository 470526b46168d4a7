#pragma once

#include <vector>

#include "sparkle/body.hpp"

// Point-cloud primitives and sensor simulation.
namespace sparkle::cloud {

using geom3::Vec3;

struct PointCloud {
  Eigen::Matrix<double, Eigen::Dynamic, 3> points;
  int frame = 0;
  int view_id = -1;

  int size() const { return static_cast<int>(points.rows()); }
};

struct SensorModel {
  // Zero view_dir disables front-face culling (omnidirectional capture).
  Vec3 view_dir = Vec3::Zero();
  double noise_sigma = 0.0;   // meters
  double dropout = 0.0;       // [0, 1)
  double density_ref_dist = 5.0;  // meters
  unsigned seed = 0;
};

// Greedy max-min sampling starting at `start`; ties break to the lowest
// index. Selected points keep selection order.
PointCloud farthest_point_sample(const PointCloud& c, int k, int start = 0);

// Centroid centering; returns the removed centroid for undoing.
std::pair<PointCloud, Vec3> normalize(const PointCloud& c);

// Per query, indices of the k nearest references, ascending distance,
// ties by lowest index.
std::vector<std::vector<int>> knn(const std::vector<Vec3>& query,
                                  const std::vector<Vec3>& reference, int k);
std::vector<std::vector<int>> knn(
    const Eigen::Matrix<double, Eigen::Dynamic, 3>& query,
    const Eigen::Matrix<double, Eigen::Dynamic, 3>& reference, int k);

// Connected components of the within-radius graph; components smaller
// than min_pts are dropped. Clusters ordered by lowest contained index.
std::vector<PointCloud> euclidean_cluster(const PointCloud& c, double radius,
                                          int min_pts);

// Front-face culling, distance-dependent thinning, Gaussian noise,
// Bernoulli dropout, then FPS down to target_count. Fully seeded.
PointCloud simulate_scan(const body::BodyState& b, const SensorModel& s,
                         int target_count);

// Removes round(ratio * N) uniformly chosen points.
PointCloud occlude(const PointCloud& c, double ratio, unsigned seed);

}  // namespace sparkle::cloud
