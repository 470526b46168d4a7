#pragma once

#include <vector>

#include "sparkle/body.hpp"
#include "sparkle/cloud.hpp"

// Hierarchical ground-truth label generation: vertex->joint matching,
// point->joint propagation, anchor->joint assignment, joint-localized
// point->anchor matching.
namespace sparkle::labels {

inline constexpr int kBackgroundJoint = body::kNumJoints;    // 24
inline constexpr int kBackgroundAnchor = body::kNumAnchors;  // 32

struct LabelSet {
  std::vector<int> joint_label;   // {0..24}, 24 = background
  std::vector<int> anchor_label;  // {0..32}, 32 = background
};

struct LabelParams {
  int k = 5;              // vertex neighbors for the majority vote
  double bg_dist = 0.25;  // meters; farther points become background
};

// Argmin distance per vertex, ties to the lowest joint index.
std::vector<int> vertex_joint_match(const body::Surface& surface,
                                    const body::Joints& joints);

// Majority vote among the k nearest surface vertices; points farther
// than bg_dist from every vertex become background.
std::vector<int> point_joint_labels(const cloud::PointCloud& c,
                                    const body::Surface& surface,
                                    const std::vector<int>& surface_joint,
                                    int k, double bg_dist);

std::array<int, body::kNumAnchors> anchor_joint_assign(
    const std::array<int, body::kNumAnchors>& anchor_vertex,
    const std::vector<int>& surface_joint);

// Nearest anchor among those sharing the point's joint label; falls back
// to kinematic-neighbor joints' anchors when the joint owns none.
std::vector<int> point_anchor_labels(
    const cloud::PointCloud& c, const std::vector<int>& joint_label,
    const body::Anchors& anchors,
    const std::array<int, body::kNumAnchors>& anchor_joint);

// Full four-stage pipeline against a posed body state.
LabelSet make_labels(const cloud::PointCloud& c, const body::BodyState& state,
                     const std::array<int, body::kNumAnchors>& anchor_joint,
                     const LabelParams& params = {});

}  // namespace sparkle::labels
