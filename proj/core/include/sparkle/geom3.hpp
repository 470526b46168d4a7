#pragma once

#include <Eigen/Core>
#include <vector>

// Rotation algebra on SO(3): Rodrigues exponentiation, axis-angle
// extraction, swing/twist closed forms, chordal averaging.
namespace sparkle::geom3 {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kColinearEps = 1e-8;

struct AxisAngle {
  Vec3 axis;     // unit
  double angle;  // radians, in [0, pi]
};

struct SwingResult {
  Mat3 r;
  Vec3 axis;
  double angle;
  bool degenerate;  // input directions (anti-)parallel
};

struct TwistResult {
  Mat3 r;
  double angle;       // signed about the twist axis, (-pi, pi]
  double confidence;  // surviving weight fraction, [0,1]
  bool degenerate;
};

struct SwingTwist {
  Mat3 swing = Mat3::Identity();
  Mat3 twist = Mat3::Identity();
  Vec3 swing_axis = Vec3::UnitX();
  double swing_angle = 0.0;
  Vec3 twist_axis = Vec3::UnitX();
  double twist_angle = 0.0;
  double twist_confidence = 0.0;
  bool swing_degenerate = false;
  bool twist_degenerate = false;

  Mat3 rotation() const { return swing * twist; }
};

// [v]_x, the skew-symmetric cross-product matrix.
Mat3 skew(const Vec3& v);

bool is_rotation(const Mat3& m, double tol = 1e-9);

// Nearest rotation to m in Frobenius norm (polar factor, det corrected).
Mat3 project_to_so3(const Mat3& m);

// R = I + sin(a)[n]x + (1-cos(a))[n]x^2. Throws if axis is not unit.
Mat3 rodrigues(const Vec3& axis, double angle);

// Compact axis-angle (rotation vector) helpers; theta components are
// stored this way throughout.
Mat3 from_rotvec(const Vec3& rv);
Vec3 to_rotvec(const Mat3& r);

// Inverse of rodrigues; angle in [0, pi]. Identity maps to (1,0,0), 0.
// At angle pi the axis sign is fixed by making its largest-magnitude
// component positive.
AxisAngle to_axis_angle(const Mat3& r);

// Minimal rotation taking direction of v_tem onto direction of v_obs.
// (Anti-)parallel inputs are flagged degenerate; the anti-parallel case
// rotates by pi about the Gram-Schmidt perpendicular of (1,0,0)
// (fallback (0,1,0)) against v_tem.
SwingResult swing_from_vectors(const Vec3& v_tem, const Vec3& v_obs,
                               double eps = kColinearEps);

// Rotation about unit axis n_tw best aligning template anchor offsets to
// observed ones. Anchors are projected onto the plane perpendicular to
// n_tw; per-anchor signed angles are combined by a weighted circular
// mean (weight = min projected norm). Anchors whose projection vanishes
// are dropped.
TwistResult twist_from_anchors(const Vec3& n_tw, const std::vector<Vec3>& a_tem,
                               const std::vector<Vec3>& a_obs,
                               double eps = kColinearEps);

// Full per-bone solve, R = swing * twist. Observed anchors are un-swung
// before the twist is measured, so the twist axis is the template bone
// direction.
SwingTwist solve_bone_rotation(const Vec3& v_tem, const Vec3& v_obs,
                               const std::vector<Vec3>& a_tem,
                               const std::vector<Vec3>& a_obs,
                               double eps = kColinearEps);

// argmin_R sum_i w_i ||R - R_i||_F^2 over SO(3).
Mat3 chordal_mean(const std::vector<Mat3>& rotations,
                  const std::vector<double>& weights);

double geodesic_angle_deg(const Mat3& r1, const Mat3& r2);

}  // namespace sparkle::geom3
