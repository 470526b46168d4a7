#include "sparkle/geom3.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>
#include <stdexcept>

namespace sparkle::geom3 {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

bool is_rotation(const Mat3& m, double tol) {
  const Mat3 err = m.transpose() * m - Mat3::Identity();
  return err.cwiseAbs().maxCoeff() < tol && std::abs(m.determinant() - 1.0) < tol;
}

Mat3 project_to_so3(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return r;
}

Mat3 rodrigues(const Vec3& axis, double angle) {
  if (std::abs(axis.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("rodrigues: axis must be unit length");
  const Mat3 k = skew(axis);
  return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
}

Mat3 from_rotvec(const Vec3& rv) {
  const double a = rv.norm();
  if (a < 1e-14) return Mat3::Identity();
  return rodrigues(rv / a, a);
}

Vec3 to_rotvec(const Mat3& r) {
  const AxisAngle aa = to_axis_angle(r);
  return aa.axis * aa.angle;
}

AxisAngle to_axis_angle(const Mat3& r) {
  Eigen::Quaterniond q(r);
  if (q.w() < 0) q.coeffs() = -q.coeffs();
  const double sin_half = q.vec().norm();
  const double angle = 2.0 * std::atan2(sin_half, q.w());
  if (sin_half < 1e-14) return {Vec3::UnitX(), 0.0};
  Vec3 axis = q.vec() / sin_half;
  if (angle > M_PI - 1e-9) {
    // At pi the axis sign is arbitrary; pin it.
    int imax = 0;
    axis.cwiseAbs().maxCoeff(&imax);
    if (axis[imax] < 0) axis = -axis;
  }
  return {axis, angle};
}

static Vec3 perpendicular_of(const Vec3& v) {
  // Gram-Schmidt of (1,0,0), falling back to (0,1,0), against v.
  const Vec3 n = v.normalized();
  Vec3 p = Vec3::UnitX() - Vec3::UnitX().dot(n) * n;
  if (p.norm() < 1e-6) p = Vec3::UnitY() - Vec3::UnitY().dot(n) * n;
  return p.normalized();
}

SwingResult swing_from_vectors(const Vec3& v_tem, const Vec3& v_obs, double eps) {
  const double nt = v_tem.norm(), no = v_obs.norm();
  if (nt <= eps || no <= eps)
    throw std::invalid_argument("swing_from_vectors: zero-length input vector");
  const Vec3 c = v_tem.cross(v_obs);
  const double dot = v_tem.dot(v_obs);
  if (c.norm() <= eps * nt * no) {
    if (dot >= 0) return {Mat3::Identity(), Vec3::UnitX(), 0.0, true};
    const Vec3 axis = perpendicular_of(v_tem);
    return {rodrigues(axis, M_PI), axis, M_PI, true};
  }
  const Vec3 axis = c.normalized();
  const double angle = std::atan2(c.norm(), dot);
  return {rodrigues(axis, angle), axis, angle, false};
}

TwistResult twist_from_anchors(const Vec3& n_tw, const std::vector<Vec3>& a_tem,
                               const std::vector<Vec3>& a_obs, double eps) {
  if (a_tem.size() != a_obs.size())
    throw std::invalid_argument("twist_from_anchors: anchor list length mismatch");
  if (std::abs(n_tw.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("twist_from_anchors: axis must be unit length");

  double sin_acc = 0.0, cos_acc = 0.0;
  double surviving = 0.0, total = 0.0;
  for (size_t i = 0; i < a_tem.size(); ++i) {
    const Vec3 pt = a_tem[i] - a_tem[i].dot(n_tw) * n_tw;
    const Vec3 po = a_obs[i] - a_obs[i].dot(n_tw) * n_tw;
    const double w = std::min(pt.norm(), po.norm());
    total += w;
    if (pt.norm() <= eps || po.norm() <= eps) continue;
    surviving += w;
    const double ang = std::atan2(pt.cross(po).dot(n_tw), pt.dot(po));
    sin_acc += w * std::sin(ang);
    cos_acc += w * std::cos(ang);
  }
  if (surviving <= 0.0 || std::hypot(sin_acc, cos_acc) < 1e-300)
    return {Mat3::Identity(), 0.0, 0.0, true};
  const double angle = std::atan2(sin_acc, cos_acc);
  const double conf = total > 0 ? surviving / total : 0.0;
  return {rodrigues(n_tw, angle), angle, conf, false};
}

SwingTwist solve_bone_rotation(const Vec3& v_tem, const Vec3& v_obs,
                               const std::vector<Vec3>& a_tem,
                               const std::vector<Vec3>& a_obs, double eps) {
  const SwingResult sw = swing_from_vectors(v_tem, v_obs, eps);

  // Un-swing the observed anchors so the twist is measured purely about
  // the template bone axis.
  std::vector<Vec3> a_unswung(a_obs.size());
  for (size_t i = 0; i < a_obs.size(); ++i)
    a_unswung[i] = sw.r.transpose() * a_obs[i];

  const Vec3 n_tw = v_tem.normalized();
  const TwistResult tw = twist_from_anchors(n_tw, a_tem, a_unswung, eps);

  SwingTwist out;
  out.swing = sw.r;
  out.swing_axis = sw.axis;
  out.swing_angle = sw.angle;
  out.swing_degenerate = sw.degenerate;
  out.twist = tw.r;
  out.twist_axis = n_tw;
  out.twist_angle = tw.angle;
  out.twist_confidence = tw.confidence;
  out.twist_degenerate = tw.degenerate;
  return out;
}

Mat3 chordal_mean(const std::vector<Mat3>& rotations,
                  const std::vector<double>& weights) {
  if (rotations.empty() || rotations.size() != weights.size())
    throw std::invalid_argument("chordal_mean: empty or mismatched input");
  Mat3 acc = Mat3::Zero();
  double wsum = 0.0;
  for (size_t i = 0; i < rotations.size(); ++i) {
    if (weights[i] < 0)
      throw std::invalid_argument("chordal_mean: negative weight");
    acc += weights[i] * rotations[i];
    wsum += weights[i];
  }
  if (wsum <= 0.0)
    throw std::invalid_argument("chordal_mean: all weights zero");
  return project_to_so3(acc);
}

double geodesic_angle_deg(const Mat3& r1, const Mat3& r2) {
  const double c = ((r1.transpose() * r2).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / M_PI;
}

}  // namespace sparkle::geom3
