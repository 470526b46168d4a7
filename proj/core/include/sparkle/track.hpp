#pragma once

#include <map>
#include <vector>

#include "sparkle/cloud.hpp"

// Multi-person stage: activity-zone person segmentation, frame-to-frame
// identity association, and MOT metrics (MOTA, IDF1, IDs).
namespace sparkle::track {

using geom3::Vec3;

struct Track {
  int id = 0;
  std::vector<std::pair<int, Vec3>> centroids;  // (frame, position)
  int missed = 0;
};

struct TrackerParams {
  double gate = 1.0;  // meters
  int max_miss = 5;
};

struct MotReport {
  double mota = 0.0;
  double idf1 = 0.0;
  int id_switches = 0;
  int fp = 0;
  int fn = 0;
  int gt_total = 0;
};

// One detection per frame per identity: (id, centroid).
using FrameDetections = std::vector<std::pair<int, Vec3>>;

// Axis-aligned zone crop followed by Euclidean clustering.
std::vector<std::pair<cloud::PointCloud, Vec3>> segment_persons(
    const cloud::PointCloud& c, const Vec3& zone_min, const Vec3& zone_max,
    double radius, int min_pts);

class Tracker {
 public:
  explicit Tracker(TrackerParams params = {}) : params_(params) {}

  // Optimal one-to-one gating association; unmatched detections spawn
  // new ids, tracks unmatched for max_miss frames terminate. Returns
  // the track id assigned to each detection.
  std::vector<int> associate(const std::vector<Vec3>& detections, int frame);

  const std::vector<Track>& tracks() const { return tracks_; }

 private:
  TrackerParams params_;
  std::vector<Track> tracks_;
  int next_id_ = 0;
};

// Per-frame optimal matching under match_dist; ID switches counted when
// a ground-truth identity's matched prediction changes; IDF1 from the
// global optimal identity mapping.
MotReport compute_mot(const std::vector<FrameDetections>& gt,
                      const std::vector<FrameDetections>& pred,
                      double match_dist);

}  // namespace sparkle::track
