#include "sparkle/track.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "sparkle/assignment.hpp"

namespace sparkle::track {

std::vector<std::pair<cloud::PointCloud, Vec3>> segment_persons(
    const cloud::PointCloud& c, const Vec3& zone_min, const Vec3& zone_max,
    double radius, int min_pts) {
  for (int k = 0; k < 3; ++k)
    if (!(zone_min[k] < zone_max[k]))
      throw std::invalid_argument("segment_persons: empty activity zone");

  cloud::PointCloud cropped;
  cropped.frame = c.frame;
  cropped.view_id = c.view_id;
  std::vector<int> keep;
  for (int i = 0; i < c.size(); ++i) {
    bool in = true;
    for (int k = 0; k < 3; ++k)
      if (c.points(i, k) < zone_min[k] || c.points(i, k) > zone_max[k])
        in = false;
    if (in) keep.push_back(i);
  }
  cropped.points.resize(keep.size(), 3);
  for (size_t i = 0; i < keep.size(); ++i)
    cropped.points.row(i) = c.points.row(keep[i]);

  std::vector<std::pair<cloud::PointCloud, Vec3>> out;
  for (auto& cluster : cloud::euclidean_cluster(cropped, radius, min_pts)) {
    const Vec3 centroid = cluster.points.colwise().mean();
    out.emplace_back(std::move(cluster), centroid);
  }
  return out;
}

std::vector<int> Tracker::associate(const std::vector<Vec3>& detections,
                                    int frame) {
  const int nt = static_cast<int>(tracks_.size());
  const int nd = static_cast<int>(detections.size());

  Eigen::MatrixXd cost(nt, nd);
  for (int t = 0; t < nt; ++t)
    for (int d = 0; d < nd; ++d) {
      const double dist = (tracks_[t].centroids.back().second - detections[d]).norm();
      cost(t, d) = dist <= params_.gate ? dist : assign::kForbidden;
    }

  std::vector<int> det_track(nd, -1);
  std::vector<bool> track_hit(nt, false);
  if (nt > 0 && nd > 0) {
    for (auto [t, d] : assign::solve_assignment(cost)) {
      tracks_[t].centroids.emplace_back(frame, detections[d]);
      tracks_[t].missed = 0;
      track_hit[t] = true;
      det_track[d] = tracks_[t].id;
    }
  }
  for (int d = 0; d < nd; ++d) {
    if (det_track[d] >= 0) continue;
    Track tr;
    tr.id = next_id_++;
    tr.centroids.emplace_back(frame, detections[d]);
    det_track[d] = tr.id;
    tracks_.push_back(std::move(tr));
    track_hit.push_back(true);
  }
  std::vector<Track> alive;
  for (int t = 0; t < static_cast<int>(tracks_.size()); ++t) {
    if (t < nt && !track_hit[t]) tracks_[t].missed++;
    if (tracks_[t].missed < params_.max_miss) alive.push_back(tracks_[t]);
  }
  tracks_ = std::move(alive);
  return det_track;
}

MotReport compute_mot(const std::vector<FrameDetections>& gt,
                      const std::vector<FrameDetections>& pred,
                      double match_dist) {
  if (gt.size() != pred.size())
    throw std::invalid_argument("compute_mot: frame count mismatch");

  MotReport rep;
  std::map<int, int> last_match;                 // gt id -> pred id
  std::map<std::pair<int, int>, int> id_pairs;   // (gt id, pred id) -> hits
  std::map<int, int> gt_dets, pred_dets;

  for (size_t f = 0; f < gt.size(); ++f) {
    const auto& g = gt[f];
    const auto& p = pred[f];
    rep.gt_total += static_cast<int>(g.size());
    for (const auto& [gid, gpos] : g) gt_dets[gid]++;
    for (const auto& [pid, ppos] : p) pred_dets[pid]++;

    Eigen::MatrixXd cost(g.size(), p.size());
    for (size_t i = 0; i < g.size(); ++i)
      for (size_t j = 0; j < p.size(); ++j) {
        const double d = (g[i].second - p[j].second).norm();
        cost(i, j) = d <= match_dist ? d : assign::kForbidden;
      }
    const auto matches = (g.empty() || p.empty())
                             ? std::vector<std::pair<int, int>>{}
                             : assign::solve_assignment(cost);

    std::set<size_t> gt_matched, pred_matched;
    for (auto [i, j] : matches) {
      gt_matched.insert(i);
      pred_matched.insert(j);
      const int gid = g[i].first, pid = p[j].first;
      id_pairs[{gid, pid}]++;
      auto it = last_match.find(gid);
      if (it != last_match.end() && it->second != pid) rep.id_switches++;
      last_match[gid] = pid;
    }
    rep.fn += static_cast<int>(g.size() - gt_matched.size());
    rep.fp += static_cast<int>(p.size() - pred_matched.size());
  }

  rep.mota = rep.gt_total > 0
                 ? 1.0 - static_cast<double>(rep.fp + rep.fn + rep.id_switches) /
                             rep.gt_total
                 : 1.0;

  // IDF1: global optimal gt-id <-> pred-id mapping maximizing correctly
  // identified detections.
  std::vector<int> gids, pids;
  for (const auto& [id, n] : gt_dets) gids.push_back(id);
  for (const auto& [id, n] : pred_dets) pids.push_back(id);
  int idtp = 0;
  if (!gids.empty() && !pids.empty()) {
    Eigen::MatrixXd neg(gids.size(), pids.size());
    for (size_t i = 0; i < gids.size(); ++i)
      for (size_t j = 0; j < pids.size(); ++j) {
        auto it = id_pairs.find({gids[i], pids[j]});
        const int hits = it == id_pairs.end() ? 0 : it->second;
        neg(i, j) = hits > 0 ? -static_cast<double>(hits) : assign::kForbidden;
      }
    for (auto [i, j] : assign::solve_assignment(neg))
      idtp += id_pairs[{gids[i], pids[j]}];
  }
  int total_gt = 0, total_pred = 0;
  for (const auto& [id, n] : gt_dets) total_gt += n;
  for (const auto& [id, n] : pred_dets) total_pred += n;
  rep.idf1 = (total_gt + total_pred) > 0
                 ? 2.0 * idtp / (total_gt + total_pred)
                 : 1.0;
  return rep;
}

}  // namespace sparkle::track
