#pragma once

#include <array>
#include <string>
#include <vector>

#include "sparkle/geom3.hpp"

// 24-joint kinematic tree, synthetic humanoid template, shape scaling
// and forward kinematics.
namespace sparkle::body {

using geom3::Mat3;
using geom3::Vec3;

inline constexpr int kNumJoints = 24;
inline constexpr int kNumBones = 23;  // bone b has child joint b+1
inline constexpr int kNumAnchors = 32;
inline constexpr int kNumShape = 10;

using Joints = Eigen::Matrix<double, kNumJoints, 3>;
using Anchors = Eigen::Matrix<double, kNumAnchors, 3>;
using Surface = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using ShapeVec = Eigen::Matrix<double, kNumShape, 1>;

struct KinematicTree {
  std::array<int, kNumJoints> parent;        // root = -1
  std::array<int, kNumJoints> bone_of_joint; // root = -1, else joint-1
  std::array<std::string, kNumJoints> names;

  static const KinematicTree& standard();
  std::vector<int> children(int joint) const;
  // Joints owning the bones of the 10 shape groups.
  static const std::array<std::vector<int>, kNumShape>& shape_groups();
};

struct BodyTemplate {
  Joints j_tem = Joints::Zero();
  Anchors a_tem = Anchors::Zero();
  Surface surface;
  std::vector<int> surface_joint;             // per surface vertex
  std::array<int, kNumAnchors> anchor_joint;  // joint each anchor is bound to
  std::array<int, kNumAnchors> anchor_vertex; // surface index of each anchor

  int surface_count() const { return static_cast<int>(surface.rows()); }
};

struct Pose {
  // Per-joint axis-angle rotation vectors; magnitude < pi + 1e-6.
  std::array<Vec3, kNumJoints> theta;
  ShapeVec beta = ShapeVec::Zero();
  Vec3 trans = Vec3::Zero();

  Pose() { theta.fill(Vec3::Zero()); }
};

struct BodyState {
  Joints joints;
  Anchors anchors;
  Surface surface;
  std::vector<int> surface_joint;  // carried from the template
  Mat3 global_rot = Mat3::Identity();
};

void validate_pose(const Pose& p);

// Deterministic synthetic humanoid: capsule-sampled surface around each
// bone, anchors picked by PCA over a seeded pose set. Same seed gives a
// bit-identical template.
BodyTemplate make_default_template(int surface_count = 1024, unsigned seed = 0);

// Grouped bone-length scaling: group g scales by exp(0.1 * beta[g]).
// Surface points and anchors translate rigidly with their joints.
BodyTemplate apply_shape(const BodyTemplate& t, const ShapeVec& beta);

// Rigid chain articulation. Each surface point and anchor moves with its
// assigned joint's world transform.
BodyState forward_kinematics(const BodyTemplate& t, const Pose& p);

// Joints and anchors only (skips the surface); used in solver loops.
void fk_keypoints(const BodyTemplate& t, const Pose& p, Joints& joints,
                  Anchors& anchors);

// Per-joint world rotations and positions.
void fk_world_transforms(const BodyTemplate& t, const Pose& p,
                         std::array<Mat3, kNumJoints>& rot, Joints& pos);

// Bone length of the bone ending at `child`.
double bone_length(const BodyTemplate& t, int child);

}  // namespace sparkle::body
