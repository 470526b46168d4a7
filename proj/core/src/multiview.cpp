#include "sparkle/multiview.hpp"

#include <algorithm>
#include <stdexcept>

namespace sparkle::multiview {

using body::kNumAnchors;
using body::kNumJoints;
using geom3::Vec3;

static double mean_keypoint_conf(const Sparkle& s) {
  double acc = 0.0;
  for (double c : s.joint_conf) acc += c;
  for (double c : s.anchor_conf) acc += c;
  return acc / (kNumJoints + kNumAnchors);
}

static std::vector<ViewPrediction> by_view_id(
    std::vector<ViewPrediction> preds) {
  std::sort(preds.begin(), preds.end(),
            [](const ViewPrediction& a, const ViewPrediction& b) {
              return a.view_id < b.view_id;
            });
  return preds;
}

Mat3 calibrate_rotation(const std::vector<ViewPrediction>& preds) {
  if (preds.empty())
    throw std::invalid_argument("calibrate_rotation: no views");
  std::vector<Mat3> rots;
  std::vector<double> ws;
  for (const auto& p : by_view_id(preds)) {
    rots.push_back(p.sparkle.global_rot);
    ws.push_back(p.view_weight_scale * mean_keypoint_conf(p.sparkle));
  }
  // All views unusable: treat them equally instead of failing.
  double total = 0.0;
  for (double w : ws) total += w;
  if (total <= 0.0) std::fill(ws.begin(), ws.end(), 1.0);
  return geom3::chordal_mean(rots, ws);
}

Sparkle fuse_sparkle(const std::vector<ViewPrediction>& preds) {
  if (preds.empty()) throw std::invalid_argument("fuse_sparkle: no views");
  const auto views = by_view_id(preds);
  const int nv = static_cast<int>(views.size());

  Sparkle out;
  auto fuse_point = [&](auto position_of, auto conf_of) -> std::pair<Vec3, double> {
    Vec3 acc = Vec3::Zero();
    double wsum = 0.0, max_conf = 0.0;
    for (int i = 0; i < nv; ++i) {
      const double w = views[i].view_weight_scale * conf_of(views[i].sparkle);
      acc += w * position_of(views[i].sparkle);
      wsum += w;
      max_conf = std::max(max_conf, conf_of(views[i].sparkle));
    }
    if (wsum <= 0.0) {
      acc.setZero();
      for (int i = 0; i < nv; ++i) acc += position_of(views[i].sparkle);
      return {acc / nv, 0.0};
    }
    return {acc / wsum, max_conf};
  };

  for (int j = 0; j < kNumJoints; ++j) {
    auto [p, c] = fuse_point(
        [j](const Sparkle& s) -> Vec3 { return s.joints.row(j); },
        [j](const Sparkle& s) { return s.joint_conf[j]; });
    out.joints.row(j) = p.transpose();
    out.joint_conf[j] = c;
  }
  for (int a = 0; a < kNumAnchors; ++a) {
    auto [p, c] = fuse_point(
        [a](const Sparkle& s) -> Vec3 { return s.anchors.row(a); },
        [a](const Sparkle& s) { return s.anchor_conf[a]; });
    out.anchors.row(a) = p.transpose();
    out.anchor_conf[a] = c;
  }
  auto [tr, tc] = fuse_point(
      [](const Sparkle& s) -> Vec3 { return s.trans; },
      [](const Sparkle& s) {
        double acc = 0.0;
        for (double c : s.joint_conf) acc += c;
        return acc / kNumJoints;
      });
  (void)tc;
  out.trans = tr;
  out.global_rot = calibrate_rotation(views);
  return out;
}

}  // namespace sparkle::multiview
