#include "sparkle/body.hpp"

#include <cmath>
#include <stdexcept>

namespace sparkle::body {

const KinematicTree& KinematicTree::standard() {
  static const KinematicTree tree = [] {
    KinematicTree t;
    t.parent = {-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8,
                9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};
    t.names = {"pelvis",     "left_hip",      "right_hip",      "spine1",
               "left_knee",  "right_knee",    "spine2",         "left_ankle",
               "right_ankle","spine3",        "left_foot",      "right_foot",
               "neck",       "left_collar",   "right_collar",   "head",
               "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
               "left_wrist", "right_wrist",   "left_hand",      "right_hand"};
    for (int j = 0; j < kNumJoints; ++j) t.bone_of_joint[j] = j - 1;
    return t;
  }();
  return tree;
}

std::vector<int> KinematicTree::children(int joint) const {
  std::vector<int> out;
  for (int j = 1; j < kNumJoints; ++j)
    if (parent[j] == joint) out.push_back(j);
  return out;
}

const std::array<std::vector<int>, kNumShape>& KinematicTree::shape_groups() {
  // Each group lists the child joints of the bones it scales.
  static const std::array<std::vector<int>, kNumShape> groups = {{
      {1, 2, 3, 6, 9, 13, 14},  // torso
      {12, 15},                 // neck + head
      {16, 18},                 // left upper arm
      {17, 19},                 // right upper arm
      {20, 22},                 // left forearm + hand
      {21, 23},                 // right forearm + hand
      {4},                      // left thigh
      {5},                      // right thigh
      {7, 10},                  // left shin + foot
      {8, 11},                  // right shin + foot
  }};
  return groups;
}

void validate_pose(const Pose& p) {
  for (const auto& rv : p.theta)
    if (rv.norm() >= M_PI + 1e-6)
      throw std::invalid_argument("pose: axis-angle magnitude exceeds pi");
  for (int g = 0; g < kNumShape; ++g)
    if (p.beta[g] < -3.0 || p.beta[g] > 3.0)
      throw std::invalid_argument("pose: beta component outside [-3, 3]");
}

double bone_length(const BodyTemplate& t, int child) {
  const auto& tree = KinematicTree::standard();
  return (t.j_tem.row(child) - t.j_tem.row(tree.parent[child])).norm();
}

BodyTemplate apply_shape(const BodyTemplate& t, const ShapeVec& beta) {
  for (int g = 0; g < kNumShape; ++g)
    if (beta[g] < -3.0 || beta[g] > 3.0)
      throw std::invalid_argument("apply_shape: beta component outside [-3, 3]");

  const auto& tree = KinematicTree::standard();
  std::array<double, kNumJoints> scale;
  scale.fill(1.0);
  const auto& groups = KinematicTree::shape_groups();
  for (int g = 0; g < kNumShape; ++g)
    for (int child : groups[g]) scale[child] = std::exp(0.1 * beta[g]);

  BodyTemplate out = t;
  for (int j = 1; j < kNumJoints; ++j) {
    const int p = tree.parent[j];
    const Vec3 bone = t.j_tem.row(j) - t.j_tem.row(p);
    out.j_tem.row(j) = out.j_tem.row(p) + (scale[j] * bone).transpose();
  }
  // Surface and anchors ride rigidly with their joints.
  for (int v = 0; v < t.surface_count(); ++v) {
    const int j = t.surface_joint[v];
    out.surface.row(v) = t.surface.row(v) + (out.j_tem.row(j) - t.j_tem.row(j));
  }
  for (int a = 0; a < kNumAnchors; ++a)
    out.a_tem.row(a) = out.surface.row(t.anchor_vertex[a]);
  return out;
}

// Joint positions after the grouped bone-length scaling of beta.
static Joints shaped_joints(const BodyTemplate& t, const ShapeVec& beta) {
  if (beta.isZero()) return t.j_tem;
  const auto& tree = KinematicTree::standard();
  std::array<double, kNumJoints> scale;
  scale.fill(1.0);
  const auto& groups = KinematicTree::shape_groups();
  for (int g = 0; g < kNumShape; ++g)
    for (int child : groups[g]) scale[child] = std::exp(0.1 * beta[g]);
  Joints j = Joints::Zero();
  for (int c = 1; c < kNumJoints; ++c) {
    const int p = tree.parent[c];
    const Vec3 bone = t.j_tem.row(c) - t.j_tem.row(p);
    j.row(c) = j.row(p) + (scale[c] * bone).transpose();
  }
  j.rowwise() += t.j_tem.row(0);
  return j;
}

void fk_world_transforms(const BodyTemplate& t, const Pose& p,
                         std::array<Mat3, kNumJoints>& rot, Joints& pos) {
  const auto& tree = KinematicTree::standard();
  const Joints j_tem = shaped_joints(t, p.beta);
  rot[0] = geom3::from_rotvec(p.theta[0]);
  pos.row(0) = (j_tem.row(0).transpose() + p.trans).transpose();
  for (int j = 1; j < kNumJoints; ++j) {
    const int par = tree.parent[j];
    const Vec3 bone = j_tem.row(j) - j_tem.row(par);
    pos.row(j) = pos.row(par) + (rot[par] * bone).transpose();
    rot[j] = rot[par] * geom3::from_rotvec(p.theta[j]);
  }
}

void fk_keypoints(const BodyTemplate& t, const Pose& p, Joints& joints,
                  Anchors& anchors) {
  std::array<Mat3, kNumJoints> rot;
  fk_world_transforms(t, p, rot, joints);
  for (int a = 0; a < kNumAnchors; ++a) {
    const int j = t.anchor_joint[a];
    // Anchor offsets ride rigidly with their joint, so they are
    // unaffected by the shape scaling.
    const Vec3 off = t.a_tem.row(a) - t.j_tem.row(j);
    anchors.row(a) = joints.row(j) + (rot[j] * off).transpose();
  }
}

BodyState forward_kinematics(const BodyTemplate& t, const Pose& p) {
  const BodyTemplate* tp = &t;
  BodyTemplate shaped;
  if (!p.beta.isZero()) {
    shaped = apply_shape(t, p.beta);
    tp = &shaped;
  }
  Pose p0 = p;
  p0.beta.setZero();
  std::array<Mat3, kNumJoints> rot;
  BodyState s;
  fk_world_transforms(*tp, p0, rot, s.joints);
  s.surface.resize(tp->surface_count(), 3);
  for (int v = 0; v < tp->surface_count(); ++v) {
    const int j = tp->surface_joint[v];
    const Vec3 off = tp->surface.row(v) - tp->j_tem.row(j);
    s.surface.row(v) = s.joints.row(j) + (rot[j] * off).transpose();
  }
  for (int a = 0; a < kNumAnchors; ++a)
    s.anchors.row(a) = s.surface.row(tp->anchor_vertex[a]);
  s.surface_joint = tp->surface_joint;
  s.global_rot = rot[0];
  return s;
}

}  // namespace sparkle::body
