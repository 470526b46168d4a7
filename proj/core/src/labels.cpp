#include "sparkle/labels.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <stdexcept>

namespace sparkle::labels {

std::vector<int> vertex_joint_match(const body::Surface& surface,
                                    const body::Joints& joints) {
  if (surface.rows() == 0) throw std::invalid_argument("vertex_joint_match: empty surface");
  std::vector<int> out(surface.rows());
  for (int v = 0; v < surface.rows(); ++v) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < body::kNumJoints; ++j) {
      const double d = (surface.row(v) - joints.row(j)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    out[v] = best;
  }
  return out;
}

std::vector<int> point_joint_labels(const cloud::PointCloud& c,
                                    const body::Surface& surface,
                                    const std::vector<int>& surface_joint,
                                    int k, double bg_dist) {
  if (k > surface.rows())
    throw std::invalid_argument("point_joint_labels: k exceeds surface size");
  std::vector<int> out(c.size(), kBackgroundJoint);
  const auto neighbors = cloud::knn(c.points, surface, k);
  for (int i = 0; i < c.size(); ++i) {
    const double nearest =
        (c.points.row(i) - surface.row(neighbors[i][0])).norm();
    if (nearest > bg_dist) continue;
    // Mode of the neighbor labels, ties to the lowest label.
    std::array<int, body::kNumJoints> votes{};
    for (int nb : neighbors[i]) votes[surface_joint[nb]]++;
    int best = 0;
    for (int j = 1; j < body::kNumJoints; ++j)
      if (votes[j] > votes[best]) best = j;
    out[i] = best;
  }
  return out;
}

std::array<int, body::kNumAnchors> anchor_joint_assign(
    const std::array<int, body::kNumAnchors>& anchor_vertex,
    const std::vector<int>& surface_joint) {
  std::array<int, body::kNumAnchors> out;
  for (int a = 0; a < body::kNumAnchors; ++a) {
    if (anchor_vertex[a] < 0 ||
        anchor_vertex[a] >= static_cast<int>(surface_joint.size()))
      throw std::invalid_argument("anchor_joint_assign: vertex index out of range");
    out[a] = surface_joint[anchor_vertex[a]];
  }
  return out;
}

std::vector<int> point_anchor_labels(
    const cloud::PointCloud& c, const std::vector<int>& joint_label,
    const body::Anchors& anchors,
    const std::array<int, body::kNumAnchors>& anchor_joint) {
  if (static_cast<int>(joint_label.size()) != c.size())
    throw std::invalid_argument("point_anchor_labels: label length mismatch");

  const auto& tree = body::KinematicTree::standard();
  std::array<std::vector<int>, body::kNumJoints> anchors_of_joint;
  for (int a = 0; a < body::kNumAnchors; ++a)
    anchors_of_joint[anchor_joint[a]].push_back(a);

  // Candidate anchors per joint: own anchors, else BFS outward over the
  // kinematic tree (parent + children rings) until some anchor exists.
  std::array<std::vector<int>, body::kNumJoints> candidates;
  for (int j = 0; j < body::kNumJoints; ++j) {
    if (!anchors_of_joint[j].empty()) {
      candidates[j] = anchors_of_joint[j];
      continue;
    }
    std::vector<int> ring = {j};
    std::vector<bool> seen(body::kNumJoints, false);
    seen[j] = true;
    while (candidates[j].empty() && !ring.empty()) {
      std::vector<int> next;
      for (int u : ring) {
        if (tree.parent[u] >= 0 && !seen[tree.parent[u]]) {
          seen[tree.parent[u]] = true;
          next.push_back(tree.parent[u]);
        }
        for (int ch : tree.children(u))
          if (!seen[ch]) {
            seen[ch] = true;
            next.push_back(ch);
          }
      }
      std::sort(next.begin(), next.end());
      for (int u : next)
        for (int a : anchors_of_joint[u]) candidates[j].push_back(a);
      ring = std::move(next);
    }
    std::sort(candidates[j].begin(), candidates[j].end());
  }

  std::vector<int> out(c.size(), kBackgroundAnchor);
  for (int i = 0; i < c.size(); ++i) {
    const int jl = joint_label[i];
    if (jl == kBackgroundJoint) continue;
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int a : candidates[jl]) {
      const double d = (c.points.row(i) - anchors.row(a)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = a;
      }
    }
    out[i] = best;
  }
  return out;
}

LabelSet make_labels(const cloud::PointCloud& c, const body::BodyState& state,
                     const std::array<int, body::kNumAnchors>& anchor_joint,
                     const LabelParams& params) {
  LabelSet ls;
  ls.joint_label = point_joint_labels(c, state.surface, state.surface_joint,
                                      params.k, params.bg_dist);
  ls.anchor_label =
      point_anchor_labels(c, ls.joint_label, state.anchors, anchor_joint);
  return ls;
}

}  // namespace sparkle::labels
