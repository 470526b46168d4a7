#include <Eigen/Geometry>

#include <cmath>
#include <random>
#include <stdexcept>

#include "sparkle/body.hpp"
#include "sparkle/labels.hpp"
#include "sparkle/representation.hpp"

namespace sparkle::body {

namespace {

// T-pose joint layout, meters, y up, arms along x.
Joints default_joints() {
  Joints j;
  j.row(0) << 0.00, 0.00, 0.00;    // pelvis
  j.row(1) << 0.09, -0.05, 0.00;   // left_hip
  j.row(2) << -0.09, -0.05, 0.00;  // right_hip
  j.row(3) << 0.00, 0.11, 0.00;    // spine1
  j.row(4) << 0.10, -0.48, 0.00;   // left_knee
  j.row(5) << -0.10, -0.48, 0.00;  // right_knee
  j.row(6) << 0.00, 0.24, 0.00;    // spine2
  j.row(7) << 0.11, -0.88, 0.00;   // left_ankle
  j.row(8) << -0.11, -0.88, 0.00;  // right_ankle
  j.row(9) << 0.00, 0.30, 0.00;    // spine3
  j.row(10) << 0.12, -0.94, 0.12;  // left_foot
  j.row(11) << -0.12, -0.94, 0.12; // right_foot
  j.row(12) << 0.00, 0.45, 0.00;   // neck
  j.row(13) << 0.07, 0.40, 0.00;   // left_collar
  j.row(14) << -0.07, 0.40, 0.00;  // right_collar
  j.row(15) << 0.00, 0.55, 0.00;   // head
  j.row(16) << 0.17, 0.42, 0.00;   // left_shoulder
  j.row(17) << -0.17, 0.42, 0.00;  // right_shoulder
  j.row(18) << 0.43, 0.42, 0.00;   // left_elbow
  j.row(19) << -0.43, 0.42, 0.00;  // right_elbow
  j.row(20) << 0.68, 0.42, 0.00;   // left_wrist
  j.row(21) << -0.68, 0.42, 0.00;  // right_wrist
  j.row(22) << 0.76, 0.42, 0.00;   // left_hand
  j.row(23) << -0.76, 0.42, 0.00;  // right_hand
  return j;
}

double bone_radius(int child) {
  switch (child) {
    case 3: case 6: case 9: case 13: case 14: return 0.10;  // torso
    case 1: case 2: return 0.09;                            // hips
    case 12: return 0.05;                                   // neck
    case 15: return 0.08;                                   // head
    case 4: case 5: case 7: case 8: return 0.055;           // legs
    case 16: case 17: case 18: case 19: return 0.045;       // arms
    case 20: case 21: return 0.04;                          // forearms
    default: return 0.03;                                   // hands, feet
  }
}

}  // namespace

BodyTemplate make_default_template(int surface_count, unsigned seed) {
  if (surface_count < 256)
    throw std::invalid_argument("make_default_template: surface_count < 256");

  const auto& tree = KinematicTree::standard();
  BodyTemplate t;
  t.j_tem = default_joints();

  // Area-proportional point budget over the bone capsules.
  std::array<double, kNumJoints> area{};
  double total_area = 0.0;
  for (int c = 1; c < kNumJoints; ++c) {
    const double len = (t.j_tem.row(c) - t.j_tem.row(tree.parent[c])).norm();
    area[c] = (len + bone_radius(c)) * bone_radius(c);
    total_area += area[c];
  }

  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<geom3::Vec3> pts;
  pts.reserve(surface_count);
  for (int c = 1; c < kNumJoints; ++c) {
    int budget = static_cast<int>(std::lround(surface_count * area[c] / total_area));
    if (c == kNumJoints - 1)
      budget = surface_count - static_cast<int>(pts.size());
    budget = std::min(budget, surface_count - static_cast<int>(pts.size()));
    const geom3::Vec3 a = t.j_tem.row(tree.parent[c]);
    const geom3::Vec3 b = t.j_tem.row(c);
    const geom3::Vec3 axis = (b - a).normalized();
    geom3::Vec3 u = axis.cross(geom3::Vec3::UnitY());
    if (u.norm() < 1e-6) u = axis.cross(geom3::Vec3::UnitX());
    u.normalize();
    const geom3::Vec3 w = axis.cross(u);
    const double r = bone_radius(c);
    for (int i = 0; i < budget; ++i) {
      const double s = uni(rng);
      const double phi = 2.0 * M_PI * uni(rng);
      geom3::Vec3 p = a + s * (b - a) + r * (std::cos(phi) * u + std::sin(phi) * w);
      // Round the distal end of head/hand/foot bones into a cap.
      if (c == 15 || c == 22 || c == 23 || c == 10 || c == 11) {
        if (s > 0.8 && uni(rng) < 0.5) {
          const double th = std::acos(1.0 - uni(rng));
          p = b + r * (std::sin(th) * (std::cos(phi) * u + std::sin(phi) * w) +
                       std::cos(th) * axis);
        }
      }
      pts.push_back(p);
    }
  }

  t.surface.resize(pts.size(), 3);
  for (size_t i = 0; i < pts.size(); ++i) t.surface.row(i) = pts[i];
  t.surface_joint = labels::vertex_joint_match(t.surface, t.j_tem);

  // Seeded pose samples for PCA anchor selection.
  std::mt19937 pose_rng(seed ^ 0x9e3779b9u);
  std::normal_distribution<double> gauss(0.0, 0.35);
  t.anchor_vertex.fill(0);
  t.anchor_joint.fill(0);
  std::vector<BodyState> samples;
  for (int f = 0; f < 60; ++f) {
    Pose p;
    for (int j = 0; j < kNumJoints; ++j) {
      geom3::Vec3 rv(gauss(pose_rng), gauss(pose_rng), gauss(pose_rng));
      if (rv.norm() > 1.2) rv *= 1.2 / rv.norm();
      p.theta[j] = rv;
    }
    samples.push_back(forward_kinematics(t, p));
  }
  const auto picked = rep::select_anchors_pca(samples, kNumAnchors, seed);
  for (int a = 0; a < kNumAnchors; ++a) {
    t.anchor_vertex[a] = picked[a];
    t.anchor_joint[a] = t.surface_joint[picked[a]];
    t.a_tem.row(a) = t.surface.row(picked[a]);
  }
  return t;
}

}  // namespace sparkle::body
