#pragma once

#include <array>
#include <vector>

#include "sparkle/body.hpp"
#include "sparkle/cloud.hpp"
#include "sparkle/labels.hpp"

// The unified joint + anchor representation and its estimation:
// PCA anchor selection, joint->anchor linear mapping, geometric joint
// and anchor estimators, confidences, temporal smoothing, losses.
namespace sparkle::rep {

using body::Anchors;
using body::Joints;
using geom3::Mat3;
using geom3::Vec3;

struct Sparkle {
  Joints joints = Joints::Zero();
  Anchors anchors = Anchors::Zero();
  Vec3 trans = Vec3::Zero();
  Mat3 global_rot = Mat3::Identity();
  std::array<double, body::kNumJoints> joint_conf{};
  std::array<double, body::kNumAnchors> anchor_conf{};
};

struct J2AMapping {
  Eigen::Matrix<double, body::kNumAnchors, body::kNumJoints> w;
  double residual = 0.0;  // RMS fit residual, meters
  int frames = 0;
};

struct LossWeights {
  double l1 = 1.0, l2 = 0.5, l3 = 1.0;  // joint MSE, joint-label CE, trans MSE
  double l4 = 1.0, l5 = 0.5;            // anchor MSE, anchor-label CE
  double l6 = 1.0, l7 = 0.5;            // theta MSE, beta MSE
};

struct JointEstimate {
  Joints j_init;
  Vec3 t_init;
  std::array<int, body::kNumJoints> support{};
};

struct RefineParams {
  double gain = 0.5;
  double trim = 0.2;
};

// Greedy maxvol-style selection of k surface vertices spanning the pose
// variation: top-k right singular directions over surface points, then
// pivoted column selection.
std::vector<int> select_anchors_pca(const std::vector<body::BodyState>& samples,
                                    int k, unsigned seed);

// Multi-frame least squares A ~= W J with a small Tikhonov ridge.
J2AMapping fit_j2a(const std::vector<Joints>& joint_frames,
                   const std::vector<Anchors>& anchor_frames);

Anchors apply_j2a(const J2AMapping& m, const Joints& joints);

// Label-centroid joint initialization with per-joint surface-offset
// calibration from the template; unsupported joints inherit the parent
// estimate plus the template bone vector.
JointEstimate estimate_joints_geometric(const cloud::PointCloud& c,
                                        const labels::LabelSet& ls,
                                        const body::BodyTemplate& t);

// Residual-offset refinement: per-joint trimmed means of the points
// normalized to each joint, sparse joints augmented from kinematic
// neighbors. Updates both J and T (the root offset moves both).
std::pair<Joints, Vec3> refine_joints_offsets(const cloud::PointCloud& c,
                                              const labels::LabelSet& ls,
                                              const Joints& j_init,
                                              const Vec3& t_init,
                                              const RefineParams& params = {});

// Structural initialization through the J2A prior blended with observed
// per-anchor label centroids.
Anchors estimate_anchors(const Joints& j_op, const J2AMapping& m,
                         const cloud::PointCloud& c,
                         const labels::LabelSet& ls);

// conf_a = min(1, n_a/10) * exp(-dbar_a / 0.1m); 0 with no support.
std::array<double, body::kNumAnchors> anchor_confidence(
    const cloud::PointCloud& c, const labels::LabelSet& ls,
    const Anchors& a_op);

std::array<double, body::kNumJoints> joint_confidence(
    const std::array<int, body::kNumJoints>& support);

// Acceleration-penalized trajectory smoothing per keypoint, followed by
// one bone-length projection pass onto the template lengths.
std::vector<Sparkle> temporal_smooth(const std::vector<Sparkle>& seq,
                                     double lambda_s,
                                     const body::BodyTemplate& t);

double loss_pst(const Joints& j_op, const Joints& j_gt,
                const Eigen::MatrixXd& label_scores,  // N x 25
                const std::vector<int>& labels_gt, const Vec3& t_op,
                const Vec3& t_gt, const LossWeights& w);

double loss_sae(const Anchors& a_op, const Anchors& a_gt,
                const Eigen::MatrixXd& anchor_scores,  // N x 33
                const std::vector<int>& labels_gt, const LossWeights& w);

double loss_sss(const std::array<Vec3, body::kNumJoints>& theta_op,
                const std::array<Vec3, body::kNumJoints>& theta_gt,
                const body::ShapeVec& beta, const body::ShapeVec& beta_gt,
                const LossWeights& w);

}  // namespace sparkle::rep
