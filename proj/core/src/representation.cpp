#include "sparkle/representation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sparkle::rep {

std::vector<int> select_anchors_pca(const std::vector<body::BodyState>& samples,
                                    int k, unsigned /*seed*/) {
  if (samples.size() < 50)
    throw std::invalid_argument("select_anchors_pca: need >= 50 pose samples");
  const int s = static_cast<int>(samples[0].surface.rows());
  if (s < k)
    throw std::invalid_argument("select_anchors_pca: surface smaller than k");

  // Rows: x, y, z of every sample; columns: surface points.
  Eigen::MatrixXd data(3 * samples.size(), s);
  for (size_t f = 0; f < samples.size(); ++f)
    data.middleRows<3>(3 * f) = samples[f].surface.transpose();
  data.rowwise() -= data.colwise().mean();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(data, Eigen::ComputeThinV);
  const Eigen::MatrixXd vt =
      svd.matrixV().leftCols(k).transpose();  // k x s

  // Pivoted QR picks columns greedily by volume; deterministic.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(vt);
  const auto& perm = qr.colsPermutation().indices();
  std::vector<int> out(k);
  for (int i = 0; i < k; ++i) out[i] = perm[i];
  std::sort(out.begin(), out.end());
  return out;
}

J2AMapping fit_j2a(const std::vector<Joints>& joint_frames,
                   const std::vector<Anchors>& anchor_frames) {
  if (joint_frames.size() != anchor_frames.size())
    throw std::invalid_argument("fit_j2a: frame count mismatch");
  if (joint_frames.size() < body::kNumJoints)
    throw std::invalid_argument("fit_j2a: need at least 24 frames");

  Eigen::Matrix<double, 24, 24> gram = Eigen::Matrix<double, 24, 24>::Zero();
  Eigen::Matrix<double, 32, 24> cross = Eigen::Matrix<double, 32, 24>::Zero();
  for (size_t f = 0; f < joint_frames.size(); ++f) {
    gram += joint_frames[f] * joint_frames[f].transpose();
    cross += anchor_frames[f] * joint_frames[f].transpose();
  }
  gram += 1e-8 * Eigen::Matrix<double, 24, 24>::Identity();

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 24, 24>> eig(gram);
  const double cond =
      eig.eigenvalues().maxCoeff() / std::max(eig.eigenvalues().minCoeff(), 0.0);
  if (!(cond < 1e14))
    throw std::runtime_error("fit_j2a: Gram matrix ill-conditioned, cond=" +
                             std::to_string(cond));

  J2AMapping m;
  m.w = gram.ldlt().solve(cross.transpose()).transpose();
  m.frames = static_cast<int>(joint_frames.size());
  double sq = 0.0;
  for (size_t f = 0; f < joint_frames.size(); ++f)
    sq += (anchor_frames[f] - m.w * joint_frames[f]).squaredNorm();
  m.residual = std::sqrt(sq / (joint_frames.size() * body::kNumAnchors * 3));
  return m;
}

Anchors apply_j2a(const J2AMapping& m, const Joints& joints) {
  return m.w * joints;
}

JointEstimate estimate_joints_geometric(const cloud::PointCloud& c,
                                        const labels::LabelSet& ls,
                                        const body::BodyTemplate& t) {
  if (static_cast<int>(ls.joint_label.size()) != c.size())
    throw std::invalid_argument("estimate_joints_geometric: label mismatch");

  // Per-joint surface-offset calibration from the template.
  Joints offset = Joints::Zero();
  std::array<int, body::kNumJoints> count{};
  for (int v = 0; v < t.surface_count(); ++v) {
    const int j = t.surface_joint[v];
    offset.row(j) += t.surface.row(v) - t.j_tem.row(j);
    count[j]++;
  }
  for (int j = 0; j < body::kNumJoints; ++j)
    if (count[j] > 0) offset.row(j) /= count[j];

  JointEstimate est;
  Joints sums = Joints::Zero();
  est.support.fill(0);
  Vec3 fg_sum = Vec3::Zero();
  int fg_count = 0;
  for (int i = 0; i < c.size(); ++i) {
    const int j = ls.joint_label[i];
    if (j == labels::kBackgroundJoint) continue;
    sums.row(j) += c.points.row(i);
    est.support[j]++;
    fg_sum += c.points.row(i).transpose();
    fg_count++;
  }
  if (fg_count == 0)
    throw std::runtime_error("estimate_joints_geometric: all points background");
  est.t_init = fg_sum / fg_count;

  const auto& tree = body::KinematicTree::standard();
  for (int j = 0; j < body::kNumJoints; ++j) {
    if (est.support[j] > 0) {
      est.j_init.row(j) = sums.row(j) / est.support[j] - offset.row(j);
    } else if (j == 0) {
      est.j_init.row(0) = est.t_init.transpose();
    } else {
      const Vec3 bone = t.j_tem.row(j) - t.j_tem.row(tree.parent[j]);
      est.j_init.row(j) = est.j_init.row(tree.parent[j]) + bone.transpose();
    }
  }
  return est;
}

static Vec3 trimmed_mean(std::vector<Vec3> pts, double trim) {
  if (pts.empty()) return Vec3::Zero();
  Vec3 mean = Vec3::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  const int drop = static_cast<int>(std::ceil(trim * pts.size()));
  if (drop > 0 && drop < static_cast<int>(pts.size())) {
    std::sort(pts.begin(), pts.end(), [&](const Vec3& a, const Vec3& b) {
      return (a - mean).squaredNorm() < (b - mean).squaredNorm();
    });
    pts.resize(pts.size() - drop);
    mean.setZero();
    for (const auto& p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
  }
  return mean;
}

std::pair<Joints, Vec3> refine_joints_offsets(const cloud::PointCloud& c,
                                              const labels::LabelSet& ls,
                                              const Joints& j_init,
                                              const Vec3& t_init,
                                              const RefineParams& params) {
  if (static_cast<int>(ls.joint_label.size()) != c.size())
    throw std::invalid_argument("refine_joints_offsets: label mismatch");

  const auto& tree = body::KinematicTree::standard();
  std::array<std::vector<int>, body::kNumJoints> members;
  for (int i = 0; i < c.size(); ++i)
    if (ls.joint_label[i] != labels::kBackgroundJoint)
      members[ls.joint_label[i]].push_back(i);

  Joints j_op = j_init;
  Vec3 delta0 = Vec3::Zero();
  for (int j = 0; j < body::kNumJoints; ++j) {
    std::vector<Vec3> residuals;
    residuals.reserve(members[j].size());
    for (int i : members[j])
      residuals.push_back(c.points.row(i).transpose() - j_init.row(j).transpose());
    if (residuals.size() < 3) {
      // Augment sparse joints with parent/child labeled points,
      // re-normalized to this joint.
      std::vector<int> nbrs;
      if (tree.parent[j] >= 0) nbrs.push_back(tree.parent[j]);
      for (int ch : tree.children(j)) nbrs.push_back(ch);
      for (int nb : nbrs)
        for (int i : members[nb])
          residuals.push_back(c.points.row(i).transpose() -
                              j_init.row(j).transpose());
    }
    const Vec3 delta =
        residuals.empty()
            ? Vec3(Vec3::Zero())
            : Vec3(params.gain * trimmed_mean(residuals, params.trim));
    j_op.row(j) += delta.transpose();
    if (j == 0) delta0 = delta;
  }
  return {j_op, t_init + delta0};
}

Anchors estimate_anchors(const Joints& j_op, const J2AMapping& m,
                         const cloud::PointCloud& c,
                         const labels::LabelSet& ls) {
  Anchors a_op = apply_j2a(m, j_op);
  std::array<Vec3, body::kNumAnchors> sums;
  sums.fill(Vec3::Zero());
  std::array<int, body::kNumAnchors> count{};
  for (int i = 0; i < c.size(); ++i) {
    const int a = ls.anchor_label[i];
    if (a == labels::kBackgroundAnchor) continue;
    sums[a] += c.points.row(i).transpose();
    count[a]++;
  }
  for (int a = 0; a < body::kNumAnchors; ++a) {
    if (count[a] < 3) continue;
    const double mu = std::min(1.0, count[a] / 20.0);
    const Vec3 centroid = sums[a] / count[a];
    a_op.row(a) = (1.0 - mu) * a_op.row(a) + mu * centroid.transpose();
  }
  return a_op;
}

std::array<double, body::kNumAnchors> anchor_confidence(
    const cloud::PointCloud& c, const labels::LabelSet& ls,
    const Anchors& a_op) {
  constexpr double n_ref = 10.0;
  constexpr double s = 0.1;  // meters
  std::array<double, body::kNumAnchors> conf{};
  std::array<double, body::kNumAnchors> dist_sum{};
  std::array<int, body::kNumAnchors> count{};
  for (int i = 0; i < c.size(); ++i) {
    const int a = ls.anchor_label[i];
    if (a == labels::kBackgroundAnchor) continue;
    dist_sum[a] += (c.points.row(i) - a_op.row(a)).norm();
    count[a]++;
  }
  for (int a = 0; a < body::kNumAnchors; ++a) {
    if (count[a] == 0) continue;
    conf[a] = std::min(1.0, count[a] / n_ref) *
              std::exp(-(dist_sum[a] / count[a]) / s);
  }
  return conf;
}

std::array<double, body::kNumJoints> joint_confidence(
    const std::array<int, body::kNumJoints>& support) {
  std::array<double, body::kNumJoints> conf{};
  for (int j = 0; j < body::kNumJoints; ++j)
    conf[j] = std::min(1.0, support[j] / 20.0);
  return conf;
}

// Solve (C + lambda A^T A) x = C x_obs per coordinate, A the second
// difference operator, C = diag(confidence floored at 0.05).
static void smooth_trajectory(std::vector<Vec3>& traj,
                              const std::vector<double>& conf,
                              double lambda_s) {
  const int n = static_cast<int>(traj.size());
  if (n < 3 || lambda_s <= 0) return;
  Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(n, n);
  for (int t = 0; t < n; ++t) sys(t, t) = std::max(conf[t], 0.05);
  for (int t = 1; t + 1 < n; ++t) {
    // Row of A: (1, -2, 1) at t-1, t, t+1.
    const int idx[3] = {t - 1, t, t + 1};
    const double coef[3] = {1.0, -2.0, 1.0};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        sys(idx[a], idx[b]) += lambda_s * coef[a] * coef[b];
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(sys);
  Eigen::MatrixXd rhs(n, 3);
  for (int t = 0; t < n; ++t)
    rhs.row(t) = std::max(conf[t], 0.05) * traj[t].transpose();
  const Eigen::MatrixXd x = ldlt.solve(rhs);
  for (int t = 0; t < n; ++t) traj[t] = x.row(t).transpose();
}

std::vector<Sparkle> temporal_smooth(const std::vector<Sparkle>& seq,
                                     double lambda_s,
                                     const body::BodyTemplate& t) {
  if (seq.empty())
    throw std::invalid_argument("temporal_smooth: empty sequence");
  std::vector<Sparkle> out = seq;
  const int n = static_cast<int>(seq.size());
  if (n >= 3 && lambda_s > 0) {
    std::vector<Vec3> traj(n);
    std::vector<double> conf(n);
    for (int j = 0; j < body::kNumJoints; ++j) {
      for (int f = 0; f < n; ++f) {
        traj[f] = seq[f].joints.row(j).transpose();
        conf[f] = seq[f].joint_conf[j];
      }
      smooth_trajectory(traj, conf, lambda_s);
      for (int f = 0; f < n; ++f) out[f].joints.row(j) = traj[f].transpose();
    }
    for (int a = 0; a < body::kNumAnchors; ++a) {
      for (int f = 0; f < n; ++f) {
        traj[f] = seq[f].anchors.row(a).transpose();
        conf[f] = seq[f].anchor_conf[a];
      }
      smooth_trajectory(traj, conf, lambda_s);
      for (int f = 0; f < n; ++f) out[f].anchors.row(a) = traj[f].transpose();
    }
    for (int f = 0; f < n; ++f) {
      traj[f] = seq[f].trans;
      double c = 0;
      for (double jc : seq[f].joint_conf) c += jc;
      conf[f] = c / body::kNumJoints;
    }
    smooth_trajectory(traj, conf, lambda_s);
    for (int f = 0; f < n; ++f) out[f].trans = traj[f];
  }

  // One bone-length projection pass onto the template lengths.
  const auto& tree = body::KinematicTree::standard();
  for (auto& s : out) {
    for (int j = 1; j < body::kNumJoints; ++j) {
      const int p = tree.parent[j];
      const double len = body::bone_length(t, j);
      Vec3 dir = s.joints.row(j) - s.joints.row(p);
      if (dir.norm() < 1e-12)
        dir = (t.j_tem.row(j) - t.j_tem.row(p)).normalized();
      else
        dir.normalize();
      s.joints.row(j) = s.joints.row(p) + (len * dir).transpose();
    }
  }
  return out;
}

static double cross_entropy(const Eigen::MatrixXd& scores,
                            const std::vector<int>& labels_gt) {
  if (scores.rows() == 0) return 0.0;
  double acc = 0.0;
  for (int i = 0; i < scores.rows(); ++i) {
    const double total = scores.row(i).sum();
    const double p = scores(i, labels_gt[i]) / total;
    acc += -std::log(std::max(p, 1e-300));
  }
  return acc / scores.rows();
}

double loss_pst(const Joints& j_op, const Joints& j_gt,
                const Eigen::MatrixXd& label_scores,
                const std::vector<int>& labels_gt, const Vec3& t_op,
                const Vec3& t_gt, const LossWeights& w) {
  const double mse_j = (j_op - j_gt).squaredNorm() / (body::kNumJoints * 3);
  const double mse_t = (t_op - t_gt).squaredNorm() / 3.0;
  return w.l1 * mse_j + w.l2 * cross_entropy(label_scores, labels_gt) +
         w.l3 * mse_t;
}

double loss_sae(const Anchors& a_op, const Anchors& a_gt,
                const Eigen::MatrixXd& anchor_scores,
                const std::vector<int>& labels_gt, const LossWeights& w) {
  const double mse_a = (a_op - a_gt).squaredNorm() / (body::kNumAnchors * 3);
  return w.l4 * mse_a + w.l5 * cross_entropy(anchor_scores, labels_gt);
}

double loss_sss(const std::array<Vec3, body::kNumJoints>& theta_op,
                const std::array<Vec3, body::kNumJoints>& theta_gt,
                const body::ShapeVec& beta, const body::ShapeVec& beta_gt,
                const LossWeights& w) {
  double sq = 0.0;
  for (int j = 0; j < body::kNumJoints; ++j)
    sq += (theta_op[j] - theta_gt[j]).squaredNorm();
  const double mse_theta = sq / (body::kNumJoints * 3);
  const double mse_beta = (beta - beta_gt).squaredNorm() / body::kNumShape;
  return w.l6 * mse_theta + w.l7 * mse_beta;
}

}  // namespace sparkle::rep
