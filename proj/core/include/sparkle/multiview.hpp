#pragma once

#include <vector>

#include "sparkle/representation.hpp"

// Multi-view fusion: global rotation calibration and confidence-guided
// keypoint fusion into a single Sparkle.
namespace sparkle::multiview {

using geom3::Mat3;
using rep::Sparkle;

struct ViewPrediction {
  Sparkle sparkle;
  int view_id = 0;
  double view_weight_scale = 1.0;
};

// Chordal mean of the per-view global rotations, weighted by the view
// scale times the view's mean keypoint confidence.
Mat3 calibrate_rotation(const std::vector<ViewPrediction>& preds);

// Per-keypoint convex combination with weights scale_i * conf_{i,k};
// fused confidence is the per-keypoint max. Views with zero total weight
// at a keypoint fall back to the unweighted mean with confidence 0.
Sparkle fuse_sparkle(const std::vector<ViewPrediction>& preds);

}  // namespace sparkle::multiview
