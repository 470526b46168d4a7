#pragma once

#include <vector>

#include "sparkle/body.hpp"

// Evaluation metrics: local/global joint and vertex errors (mm) and
// angle error (degrees).
namespace sparkle::metrics {

enum class Mode { kLocal, kGlobal };

struct EvalReport {
  double j_err_l = 0, v_err_l = 0, j_err_g = 0, v_err_g = 0;  // mm
  double ang_err = 0;                                         // degrees
  std::vector<double> j_err_l_series, v_err_l_series;
  std::vector<double> j_err_g_series, v_err_g_series;
  std::vector<double> ang_err_series;
};

// Mean per-point Euclidean error in millimeters. Local mode first
// translates both sets so row 0 (the root) sits at the origin.
double mpjpe(const Eigen::Matrix<double, Eigen::Dynamic, 3>& pred,
             const Eigen::Matrix<double, Eigen::Dynamic, 3>& gt, Mode mode);

// Mean per-joint geodesic distance of the local rotations, degrees.
double angle_error(const std::array<geom3::Vec3, body::kNumJoints>& theta_pred,
                   const std::array<geom3::Vec3, body::kNumJoints>& theta_gt);

EvalReport evaluate_sequence(const std::vector<body::Pose>& preds,
                             const std::vector<body::Pose>& gts,
                             const body::BodyTemplate& t);

}  // namespace sparkle::metrics
