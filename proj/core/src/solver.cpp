#include "sparkle/solver.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace sparkle::solver {

using body::kNumAnchors;
using body::kNumJoints;

Pose init_pose_swing_twist(const body::BodyTemplate& t, const Sparkle& s,
                           InitDetail* detail) {
  const auto& tree = body::KinematicTree::standard();
  Pose pose;
  pose.trans = s.trans;

  InitDetail local_detail;
  InitDetail& det = detail ? *detail : local_detail;
  det.degenerate_bones.clear();

  // Anchors grouped by the joint they ride with, zero-confidence ones
  // excluded.
  std::array<std::vector<int>, kNumJoints> anchors_of;
  for (int a = 0; a < kNumAnchors; ++a)
    if (s.anchor_conf[a] > 0) anchors_of[t.anchor_joint[a]].push_back(a);

  // Root: Procrustes over the pelvis-adjacent bone vectors.
  Mat3 m = Mat3::Zero();
  for (int c : tree.children(0)) {
    const Vec3 tem = t.j_tem.row(c) - t.j_tem.row(0);
    const Vec3 obs = s.joints.row(c) - s.joints.row(0);
    m += obs * tem.transpose();
  }
  std::array<Mat3, kNumJoints> world;
  world[0] = geom3::project_to_so3(m);
  pose.theta[0] = geom3::to_rotvec(world[0]);

  for (int j = 1; j < kNumJoints; ++j) {
    const int par = tree.parent[j];
    const Mat3& g_par = world[par];
    const auto kids = tree.children(j);

    Vec3 v_tem, v_obs;
    std::vector<Vec3> a_tem, a_obs;
    bool have_bone = false;
    if (!kids.empty()) {
      const int c = kids.front();
      v_tem = t.j_tem.row(c) - t.j_tem.row(j);
      v_obs = g_par.transpose() *
              (s.joints.row(c) - s.joints.row(j)).transpose();
      have_bone = v_obs.norm() > 1e-10;
      for (int a : anchors_of[j]) {
        a_tem.push_back(t.a_tem.row(a).transpose() - t.j_tem.row(j).transpose());
        a_obs.push_back(g_par.transpose() *
                        (s.anchors.row(a) - s.joints.row(j)).transpose());
      }
    } else if (!anchors_of[j].empty()) {
      // Leaf: the first anchor offset stands in for the bone vector,
      // the rest resolve the twist.
      const auto& list = anchors_of[j];
      const int a0 = list.front();
      v_tem = t.a_tem.row(a0).transpose() - t.j_tem.row(j).transpose();
      v_obs = g_par.transpose() *
              (s.anchors.row(a0) - s.joints.row(j)).transpose();
      have_bone = v_obs.norm() > 1e-10 && v_tem.norm() > 1e-10;
      for (size_t i = 1; i < list.size(); ++i) {
        const int a = list[i];
        a_tem.push_back(t.a_tem.row(a).transpose() - t.j_tem.row(j).transpose());
        a_obs.push_back(g_par.transpose() *
                        (s.anchors.row(a) - s.joints.row(j)).transpose());
      }
    }

    SwingTwist st;  // identity by default
    if (have_bone) {
      st = geom3::solve_bone_rotation(v_tem, v_obs, a_tem, a_obs);
    } else {
      st.swing_degenerate = true;
      st.twist_degenerate = true;
    }
    const int bone = tree.bone_of_joint[j];
    det.per_bone[bone] = st;
    if (st.twist_degenerate || st.swing_degenerate || !have_bone)
      det.degenerate_bones.push_back(bone);

    const Mat3 local = st.rotation();
    pose.theta[j] = geom3::to_rotvec(local);
    world[j] = g_par * local;
  }
  return pose;
}

double cost(const Pose& pose, const body::BodyTemplate& t, const Sparkle& s,
            const SolverConfig& cfg) {
  body::Joints joints;
  body::Anchors anchors;
  body::fk_keypoints(t, pose, joints, anchors);
  double acc = 0.0;
  for (int j = 0; j < kNumJoints; ++j)
    acc += cfg.joint_weight * s.joint_conf[j] *
           (joints.row(j) - s.joints.row(j)).squaredNorm();
  for (int a = 0; a < kNumAnchors; ++a)
    acc += cfg.anchor_weight * s.anchor_conf[a] *
           (anchors.row(a) - s.anchors.row(a)).squaredNorm();
  return acc;
}

namespace {

constexpr int kResiduals = 3 * (kNumJoints + kNumAnchors);

struct ParamSpace {
  bool with_beta;
  int size() const { return 72 + 3 + (with_beta ? 10 : 0); }

  Eigen::VectorXd pack(const Pose& p) const {
    Eigen::VectorXd x(size());
    for (int j = 0; j < kNumJoints; ++j) x.segment<3>(3 * j) = p.theta[j];
    x.segment<3>(72) = p.trans;
    if (with_beta) x.segment<10>(75) = p.beta;
    return x;
  }

  Pose unpack(const Eigen::VectorXd& x, const Pose& base) const {
    Pose p = base;
    for (int j = 0; j < kNumJoints; ++j) p.theta[j] = x.segment<3>(3 * j);
    p.trans = x.segment<3>(72);
    if (with_beta)
      p.beta = x.segment<10>(75).cwiseMax(-3.0).cwiseMin(3.0);
    return p;
  }
};

Eigen::VectorXd residuals(const Pose& pose, const body::BodyTemplate& t,
                          const Sparkle& s, const SolverConfig& cfg) {
  body::Joints joints;
  body::Anchors anchors;
  body::fk_keypoints(t, pose, joints, anchors);
  Eigen::VectorXd r(kResiduals);
  for (int j = 0; j < kNumJoints; ++j)
    r.segment<3>(3 * j) = std::sqrt(cfg.joint_weight * s.joint_conf[j]) *
                          (joints.row(j) - s.joints.row(j)).transpose();
  for (int a = 0; a < kNumAnchors; ++a)
    r.segment<3>(72 + 3 * a) =
        std::sqrt(cfg.anchor_weight * s.anchor_conf[a]) *
        (anchors.row(a) - s.anchors.row(a)).transpose();
  return r;
}

// Wrap rotation vectors back into magnitude <= pi.
void canonicalize(Eigen::VectorXd& x) {
  for (int j = 0; j < kNumJoints; ++j) {
    auto rv = x.segment<3>(3 * j);
    const double a = rv.norm();
    if (a > M_PI) rv *= 1.0 - 2.0 * M_PI / a;
  }
}

}  // namespace

SolveResult refine_pose(const Pose& theta_init, const body::BodyTemplate& t,
                        const Sparkle& s, const SolverConfig& cfg) {
  double mean_aconf = 0.0;
  for (double c : s.anchor_conf) mean_aconf += c;
  mean_aconf /= kNumAnchors;
  ParamSpace space{!cfg.beta_frozen && mean_aconf >= cfg.beta_freeze_conf};

  SolveResult res;
  res.init_pose = theta_init;

  Eigen::VectorXd x = space.pack(theta_init);
  auto eval = [&](const Eigen::VectorXd& v) {
    return residuals(space.unpack(v, theta_init), t, s, cfg);
  };
  Eigen::VectorXd r = eval(x);
  double best_cost = r.squaredNorm();
  const int n = space.size();

  double lambda = cfg.damping_init;
  int iter = 0;
  while (iter < cfg.max_iter) {
    ++iter;
    // Central-difference Jacobian.
    Eigen::MatrixXd jac(kResiduals, n);
    for (int k = 0; k < n; ++k) {
      Eigen::VectorXd xp = x, xm = x;
      xp[k] += cfg.fd_step;
      xm[k] -= cfg.fd_step;
      jac.col(k) = (eval(xp) - eval(xm)) / (2.0 * cfg.fd_step);
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;

    bool accepted = false;
    while (iter <= cfg.max_iter) {
      Eigen::MatrixXd sys = jtj;
      sys.diagonal().array() += lambda;
      const Eigen::VectorXd step = sys.ldlt().solve(-jtr);
      Eigen::VectorXd x_try = x + step;
      canonicalize(x_try);
      const Eigen::VectorXd r_try = eval(x_try);
      const double c_try = r_try.squaredNorm();
      if (!std::isfinite(c_try)) break;
      if (c_try < best_cost) {
        const double gain = best_cost - c_try;
        x = x_try;
        r = r_try;
        best_cost = c_try;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (gain < cfg.tol_cost) iter = cfg.max_iter;  // converged
        break;
      }
      lambda *= 10.0;
      ++iter;
      if (lambda > 1e12) break;
    }
    if (!accepted) break;
  }

  res.pose = space.unpack(x, theta_init);
  res.final_cost = best_cost;
  res.iterations = std::min(iter, cfg.max_iter);
  return res;
}

SolveResult solve(const body::BodyTemplate& t, const Sparkle& s,
                  const SolverConfig& cfg) {
  InitDetail det;
  const Pose init = init_pose_swing_twist(t, s, &det);
  SolveResult res = refine_pose(init, t, s, cfg);
  res.per_bone = det.per_bone;
  res.degenerate_bones = det.degenerate_bones;
  return res;
}

}  // namespace sparkle::solver
