#include "sparkle/metrics.hpp"

#include <numeric>
#include <stdexcept>

namespace sparkle::metrics {

double mpjpe(const Eigen::Matrix<double, Eigen::Dynamic, 3>& pred,
             const Eigen::Matrix<double, Eigen::Dynamic, 3>& gt, Mode mode) {
  if (pred.rows() != gt.rows() || pred.rows() < 1)
    throw std::invalid_argument("mpjpe: shape mismatch");
  Eigen::Matrix<double, Eigen::Dynamic, 3> a = pred, b = gt;
  if (mode == Mode::kLocal) {
    a.rowwise() -= pred.row(0);
    b.rowwise() -= gt.row(0);
  }
  return (a - b).rowwise().norm().mean() * 1000.0;
}

double angle_error(const std::array<geom3::Vec3, body::kNumJoints>& theta_pred,
                   const std::array<geom3::Vec3, body::kNumJoints>& theta_gt) {
  double acc = 0.0;
  for (int j = 0; j < body::kNumJoints; ++j)
    acc += geom3::geodesic_angle_deg(geom3::from_rotvec(theta_pred[j]),
                                     geom3::from_rotvec(theta_gt[j]));
  return acc / body::kNumJoints;
}

static double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0
                   : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

EvalReport evaluate_sequence(const std::vector<body::Pose>& preds,
                             const std::vector<body::Pose>& gts,
                             const body::BodyTemplate& t) {
  if (preds.size() != gts.size())
    throw std::invalid_argument("evaluate_sequence: length mismatch");
  EvalReport rep;
  for (size_t f = 0; f < preds.size(); ++f) {
    const body::BodyState sp = body::forward_kinematics(t, preds[f]);
    const body::BodyState sg = body::forward_kinematics(t, gts[f]);
    rep.j_err_l_series.push_back(mpjpe(sp.joints, sg.joints, Mode::kLocal));
    rep.j_err_g_series.push_back(mpjpe(sp.joints, sg.joints, Mode::kGlobal));
    rep.v_err_g_series.push_back(mpjpe(sp.surface, sg.surface, Mode::kGlobal));
    // Local vertex error: surfaces made root-relative with the root joint.
    Eigen::Matrix<double, Eigen::Dynamic, 3> vp = sp.surface, vg = sg.surface;
    vp.rowwise() -= sp.joints.row(0);
    vg.rowwise() -= sg.joints.row(0);
    rep.v_err_l_series.push_back((vp - vg).rowwise().norm().mean() * 1000.0);
    rep.ang_err_series.push_back(angle_error(preds[f].theta, gts[f].theta));
  }
  rep.j_err_l = mean(rep.j_err_l_series);
  rep.j_err_g = mean(rep.j_err_g_series);
  rep.v_err_l = mean(rep.v_err_l_series);
  rep.v_err_g = mean(rep.v_err_g_series);
  rep.ang_err = mean(rep.ang_err_series);
  return rep;
}

}  // namespace sparkle::metrics
