#include "sparkle/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace sparkle::cloud {

PointCloud farthest_point_sample(const PointCloud& c, int k, int start) {
  const int n = c.size();
  if (k < 1 || k > n)
    throw std::invalid_argument("farthest_point_sample: k out of range");
  if (start < 0 || start >= n)
    throw std::invalid_argument("farthest_point_sample: bad start index");

  std::vector<int> picked;
  picked.reserve(k);
  picked.push_back(start);
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  for (int step = 1; step < k; ++step) {
    const auto last = c.points.row(picked.back());
    int best = -1;
    double best_d = -1.0;
    for (int i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], (c.points.row(i) - last).squaredNorm());
      if (dist[i] > best_d) {
        best_d = dist[i];
        best = i;
      }
    }
    picked.push_back(best);
  }

  PointCloud out;
  out.frame = c.frame;
  out.view_id = c.view_id;
  out.points.resize(k, 3);
  for (int i = 0; i < k; ++i) out.points.row(i) = c.points.row(picked[i]);
  return out;
}

std::pair<PointCloud, Vec3> normalize(const PointCloud& c) {
  if (c.size() == 0) throw std::invalid_argument("normalize: empty cloud");
  const Vec3 centroid = c.points.colwise().mean();
  PointCloud out = c;
  out.points.rowwise() -= centroid.transpose();
  return {out, centroid};
}

std::vector<std::vector<int>> knn(const std::vector<Vec3>& query,
                                  const std::vector<Vec3>& reference, int k) {
  if (k < 1) throw std::invalid_argument("knn: k must be positive");
  if (k > static_cast<int>(reference.size()))
    throw std::invalid_argument("knn: k exceeds reference size");
  std::vector<std::vector<int>> out(query.size());
  std::vector<std::pair<double, int>> d(reference.size());
  for (size_t q = 0; q < query.size(); ++q) {
    for (size_t r = 0; r < reference.size(); ++r)
      d[r] = {(query[q] - reference[r]).squaredNorm(), static_cast<int>(r)};
    std::partial_sort(d.begin(), d.begin() + k, d.end());
    out[q].resize(k);
    for (int i = 0; i < k; ++i) out[q][i] = d[i].second;
  }
  return out;
}

std::vector<std::vector<int>> knn(
    const Eigen::Matrix<double, Eigen::Dynamic, 3>& query,
    const Eigen::Matrix<double, Eigen::Dynamic, 3>& reference, int k) {
  std::vector<Vec3> q(query.rows()), r(reference.rows());
  for (int i = 0; i < query.rows(); ++i) q[i] = query.row(i);
  for (int i = 0; i < reference.rows(); ++i) r[i] = reference.row(i);
  return knn(q, r, k);
}

std::vector<PointCloud> euclidean_cluster(const PointCloud& c, double radius,
                                          int min_pts) {
  if (radius <= 0) throw std::invalid_argument("euclidean_cluster: radius <= 0");
  const int n = c.size();
  const double r2 = radius * radius;
  std::vector<int> comp(n, -1);
  int ncomp = 0;
  std::vector<int> stack;
  for (int i = 0; i < n; ++i) {
    if (comp[i] >= 0) continue;
    comp[i] = ncomp;
    stack.assign(1, i);
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n; ++v) {
        if (comp[v] >= 0) continue;
        if ((c.points.row(u) - c.points.row(v)).squaredNorm() <= r2) {
          comp[v] = ncomp;
          stack.push_back(v);
        }
      }
    }
    ++ncomp;
  }

  std::vector<std::vector<int>> members(ncomp);
  for (int i = 0; i < n; ++i) members[comp[i]].push_back(i);

  std::vector<PointCloud> out;
  for (int g = 0; g < ncomp; ++g) {
    if (static_cast<int>(members[g].size()) < min_pts) continue;
    PointCloud cluster;
    cluster.frame = c.frame;
    cluster.view_id = c.view_id;
    cluster.points.resize(members[g].size(), 3);
    for (size_t i = 0; i < members[g].size(); ++i)
      cluster.points.row(i) = c.points.row(members[g][i]);
    out.push_back(std::move(cluster));
  }
  // Components were discovered in lowest-index order already.
  return out;
}

PointCloud simulate_scan(const body::BodyState& b, const SensorModel& s,
                         int target_count) {
  if (target_count < 1)
    throw std::invalid_argument("simulate_scan: target_count < 1");

  std::mt19937 rng(s.seed);
  const int n = static_cast<int>(b.surface.rows());
  const bool cull = s.view_dir.norm() > 0;
  const Vec3 vdir = cull ? s.view_dir.normalized() : Vec3::Zero();

  std::vector<int> kept;
  for (int i = 0; i < n; ++i) {
    if (cull) {
      const Vec3 radial =
          b.surface.row(i) - b.joints.row(b.surface_joint[i]);
      if (radial.dot(-vdir) < 0) continue;
    }
    kept.push_back(i);
  }

  // Quadratic density fall-off with distance from the sensor reference.
  const Vec3 centroid = b.surface.colwise().mean();
  const double d = centroid.norm();
  const double keep_prob =
      std::min(1.0, (s.density_ref_dist * s.density_ref_dist) / std::max(d * d, 1e-12));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<Vec3> pts;
  for (int idx : kept)
    if (uni(rng) < keep_prob) pts.push_back(b.surface.row(idx));

  if (s.noise_sigma > 0) {
    std::normal_distribution<double> gauss(0.0, s.noise_sigma);
    for (auto& p : pts)
      for (int k = 0; k < 3; ++k) p[k] += gauss(rng);
  }
  if (s.dropout > 0) {
    std::vector<Vec3> survived;
    for (const auto& p : pts)
      if (uni(rng) >= s.dropout) survived.push_back(p);
    pts = std::move(survived);
  }

  PointCloud out;
  out.points.resize(pts.size(), 3);
  for (size_t i = 0; i < pts.size(); ++i) out.points.row(i) = pts[i];
  if (out.size() > target_count)
    out = farthest_point_sample(out, target_count, 0);
  return out;
}

PointCloud occlude(const PointCloud& c, double ratio, unsigned seed) {
  if (ratio < 0 || ratio > 1)
    throw std::invalid_argument("occlude: ratio outside [0, 1]");
  const int n = c.size();
  const int remove = static_cast<int>(std::lround(ratio * n));
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(n - remove);
  std::sort(idx.begin(), idx.end());

  PointCloud out;
  out.frame = c.frame;
  out.view_id = c.view_id;
  out.points.resize(idx.size(), 3);
  for (size_t i = 0; i < idx.size(); ++i) out.points.row(i) = c.points.row(idx[i]);
  return out;
}

}  // namespace sparkle::cloud
