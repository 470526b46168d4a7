#pragma once

#include <vector>

#include "sparkle/body.hpp"
#include "sparkle/representation.hpp"

// Sparkle-based pose/shape solver: per-bone swing-twist geometric
// initialization followed by confidence-weighted damped Gauss-Newton
// refinement of (theta, beta, T) against the Sparkle targets.
namespace sparkle::solver {

using body::Pose;
using geom3::Mat3;
using geom3::SwingTwist;
using geom3::Vec3;
using rep::Sparkle;

struct SolverConfig {
  int max_iter = 50;
  double damping_init = 1e-3;
  double tol_cost = 1e-10;
  double fd_step = 1e-5;
  double joint_weight = 1.0;
  double anchor_weight = 0.5;
  bool beta_frozen = false;
  // Shape is additionally frozen when mean anchor confidence falls
  // below this (unidentifiable from sparse evidence).
  double beta_freeze_conf = 0.2;
};

struct InitDetail {
  std::array<SwingTwist, body::kNumBones> per_bone{};
  std::vector<int> degenerate_bones;
};

struct SolveResult {
  Pose pose;
  std::array<SwingTwist, body::kNumBones> per_bone{};
  Pose init_pose;
  double final_cost = 0.0;
  int iterations = 0;
  std::vector<int> degenerate_bones;
};

// Root rotation by Procrustes over the pelvis-adjacent bones, then a
// root-to-leaf traversal solving each joint's local rotation from its
// child bone and its assigned anchors, expressed in the accumulated
// parent frame. Leaf joints use anchors only.
Pose init_pose_swing_twist(const body::BodyTemplate& t, const Sparkle& s,
                           InitDetail* detail = nullptr);

// Confidence-weighted squared keypoint error of FK(pose) against s.
double cost(const Pose& pose, const body::BodyTemplate& t, const Sparkle& s,
            const SolverConfig& cfg);

// Levenberg-damped Gauss-Newton with a central-difference Jacobian.
// Only improving steps are accepted, so the final cost never exceeds
// the initial one.
SolveResult refine_pose(const Pose& theta_init, const body::BodyTemplate& t,
                        const Sparkle& s, const SolverConfig& cfg);

// init_pose_swing_twist followed by refine_pose.
SolveResult solve(const body::BodyTemplate& t, const Sparkle& s,
                  const SolverConfig& cfg);

}  // namespace sparkle::solver
