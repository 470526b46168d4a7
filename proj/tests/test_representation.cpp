#include <cmath>
#include <random>

#include "doctest.h"
#include "sparkle/representation.hpp"

using namespace sparkle;
using namespace sparkle::rep;

namespace {

body::Pose random_pose(std::mt19937& rng, double sigma = 0.3) {
  std::normal_distribution<double> g(0.0, sigma);
  body::Pose p;
  for (int j = 0; j < body::kNumJoints; ++j) {
    geom3::Vec3 rv(g(rng), g(rng), g(rng));
    if (rv.norm() > 1.2) rv *= 1.2 / rv.norm();
    p.theta[j] = rv;
  }
  return p;
}

}  // namespace

TEST_CASE("select_anchors_pca validation and determinism") {
  const body::BodyTemplate t = body::make_default_template(512, 23);
  std::mt19937 rng(40);
  std::vector<body::BodyState> samples;
  for (int i = 0; i < 60; ++i)
    samples.push_back(body::forward_kinematics(t, random_pose(rng)));

  const auto a = select_anchors_pca(samples, 32, 0);
  const auto b = select_anchors_pca(samples, 32, 0);
  CHECK(a == b);
  CHECK(static_cast<int>(a.size()) == 32);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());  // distinct
  for (int v : a) {
    CHECK(v >= 0);
    CHECK(v < t.surface_count());
  }

  samples.resize(30);
  CHECK_THROWS_AS(select_anchors_pca(samples, 32, 0), std::invalid_argument);
}

TEST_CASE("pca anchors beat a random subset at reconstructing motion") {
  // The selected vertices should span the pose variation better than an
  // arbitrary subset: measure spread of selected columns across frames.
  const body::BodyTemplate t = body::make_default_template(512, 29);
  std::mt19937 rng(41);
  std::vector<body::BodyState> samples;
  for (int i = 0; i < 80; ++i)
    samples.push_back(body::forward_kinematics(t, random_pose(rng)));
  const auto sel = select_anchors_pca(samples, 32, 0);

  auto spread = [&](const std::vector<int>& idx) {
    double acc = 0.0;
    for (int v : idx) {
      Eigen::Matrix<double, Eigen::Dynamic, 3> traj(samples.size(), 3);
      for (size_t f = 0; f < samples.size(); ++f)
        traj.row(f) = samples[f].surface.row(v);
      const Eigen::RowVector3d mean = traj.colwise().mean();
      acc += (traj.rowwise() - mean).squaredNorm();
    }
    return acc;
  };
  std::vector<int> prefix(32);
  std::iota(prefix.begin(), prefix.end(), 0);
  CHECK(spread(sel) > spread(prefix));
}

TEST_CASE("fit_j2a exact recovery of a planted linear map") {
  std::mt19937 rng(50);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Matrix<double, 32, 24> w_true;
  for (int r = 0; r < 32; ++r)
    for (int cidx = 0; cidx < 24; ++cidx) w_true(r, cidx) = g(rng);

  std::vector<Joints> jf;
  std::vector<Anchors> af;
  for (int f = 0; f < 40; ++f) {
    Joints j;
    for (int r = 0; r < 24; ++r)
      j.row(r) << g(rng), g(rng), g(rng);
    jf.push_back(j);
    af.push_back(w_true * j);
  }
  const J2AMapping m = fit_j2a(jf, af);
  CHECK((m.w - w_true).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(m.residual < 1e-7);
  CHECK(m.frames == 40);
  // apply_j2a consistency.
  CHECK((apply_j2a(m, jf[0]) - af[0]).cwiseAbs().maxCoeff() < 1e-6);

  SUBCASE("too few frames rejected") {
    jf.resize(10);
    af.resize(10);
    CHECK_THROWS_AS(fit_j2a(jf, af), std::invalid_argument);
  }
  SUBCASE("count mismatch rejected") {
    af.pop_back();
    CHECK_THROWS_AS(fit_j2a(jf, af), std::invalid_argument);
  }
  SUBCASE("degenerate frames rejected") {
    // Repeating one frame makes the Gram matrix rank 3; with large
    // magnitudes the ridge cannot mask the conditioning.
    Joints one;
    for (int r = 0; r < 24; ++r)
      one.row(r) << 1e3 * g(rng), 1e3 * g(rng), 1e3 * g(rng);
    std::vector<Joints> same(30, one);
    std::vector<Anchors> asame(30, Anchors::Zero());
    CHECK_THROWS_AS(fit_j2a(same, asame), std::runtime_error);
  }
}

TEST_CASE("fit_j2a on fk data predicts held-out anchors") {
  const body::BodyTemplate t = body::make_default_template(1024, 31);
  std::mt19937 rng(60);
  std::vector<Joints> jf;
  std::vector<Anchors> af;
  for (int f = 0; f < 80; ++f) {
    body::Joints j;
    body::Anchors a;
    body::fk_keypoints(t, random_pose(rng), j, a);
    jf.push_back(j);
    af.push_back(a);
  }
  std::vector<Joints> jtr(jf.begin(), jf.begin() + 60);
  std::vector<Anchors> atr(af.begin(), af.begin() + 60);
  const J2AMapping m = fit_j2a(jtr, atr);
  double err = 0.0;
  for (int f = 60; f < 80; ++f)
    err += std::sqrt((apply_j2a(m, jf[f]) - af[f]).squaredNorm() /
                     (body::kNumAnchors * 3));
  err /= 20;
  CHECK(err < 0.05);  // a few cm on held-out poses
  CHECK(m.residual < 0.05);
}

TEST_CASE("estimate_joints_geometric recovers posed joints") {
  const body::BodyTemplate t = body::make_default_template(2048, 37);
  body::Pose p;
  p.theta[16] = geom3::Vec3(0, 0, 0.9);
  p.theta[1] = geom3::Vec3(0.5, 0, 0);
  p.trans = geom3::Vec3(0.3, -0.2, 1.0);
  const body::BodyState s = body::forward_kinematics(t, p);

  cloud::SensorModel m;
  m.seed = 70;
  const cloud::PointCloud scan = cloud::simulate_scan(s, m, 1500);
  const auto ls = labels::make_labels(scan, s, t.anchor_joint);
  const JointEstimate est = estimate_joints_geometric(scan, ls, t);

  double worst = 0.0;
  for (int j = 0; j < body::kNumJoints; ++j)
    worst = std::max(worst, (est.j_init.row(j) - s.joints.row(j)).norm());
  CHECK(worst < 0.15);  // geometric init is coarse but in the ballpark
  double mean = 0.0;
  for (int j = 0; j < body::kNumJoints; ++j)
    mean += (est.j_init.row(j) - s.joints.row(j)).norm();
  CHECK(mean / body::kNumJoints < 0.06);

  SUBCASE("all-background input rejected") {
    labels::LabelSet bg;
    bg.joint_label.assign(scan.size(), labels::kBackgroundJoint);
    bg.anchor_label.assign(scan.size(), labels::kBackgroundAnchor);
    CHECK_THROWS_AS(estimate_joints_geometric(scan, bg, t),
                    std::runtime_error);
  }
  SUBCASE("label mismatch rejected") {
    labels::LabelSet bad = ls;
    bad.joint_label.pop_back();
    CHECK_THROWS_AS(estimate_joints_geometric(scan, bad, t),
                    std::invalid_argument);
  }

  SUBCASE("refinement stays in the ballpark") {
    const auto [j_ref, t_ref] =
        refine_joints_offsets(scan, ls, est.j_init, est.t_init);
    double after = 0.0;
    for (int j = 0; j < body::kNumJoints; ++j)
      after += (j_ref.row(j) - s.joints.row(j)).norm();
    CHECK(after / body::kNumJoints < 0.05);
    CHECK(std::isfinite(t_ref.norm()));
  }
}

TEST_CASE("refine_joints_offsets pulls a biased estimate toward the data") {
  // Points cluster exactly around known joint targets; a deliberately
  // shifted init should move back toward them at the configured gain.
  cloud::PointCloud c;
  c.points.resize(40, 3);
  labels::LabelSet ls;
  ls.joint_label.assign(40, 0);
  std::mt19937 rng(80);
  std::normal_distribution<double> g(0.0, 0.001);
  for (int i = 0; i < 40; ++i)
    c.points.row(i) << 1.0 + g(rng), 2.0 + g(rng), 3.0 + g(rng);

  Joints init = Joints::Zero();
  init.row(0) << 0.8, 2.0, 3.0;  // 0.2 m off along x
  const geom3::Vec3 t0(0.8, 2.0, 3.0);
  const auto [j_ref, t_ref] = refine_joints_offsets(c, ls, init, t0);
  // gain 0.5 closes about half the 0.2 m gap.
  CHECK(j_ref(0, 0) == doctest::Approx(0.9).epsilon(0.02));
  // The root delta also moves T.
  CHECK(t_ref.x() == doctest::Approx(0.9).epsilon(0.02));
  CHECK(t_ref.y() == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("trimmed refinement resists outliers") {
  cloud::PointCloud c;
  c.points.resize(50, 3);
  labels::LabelSet ls;
  ls.joint_label.assign(50, 5);
  for (int i = 0; i < 45; ++i) c.points.row(i) << 0.0, 0.0, 0.0;
  for (int i = 45; i < 50; ++i) c.points.row(i) << 10.0, 0.0, 0.0;  // outliers

  Joints init = Joints::Zero();
  const auto [j_ref, t_ref] = refine_joints_offsets(c, ls, init, geom3::Vec3::Zero());
  // Untrimmed mean would pull x by 0.5 * 1.0 = 0.5; trimming (20% of 50
  // = 10 farthest, which covers all 5 outliers) keeps it at zero.
  CHECK(std::abs(j_ref(5, 0)) < 1e-9);
}

TEST_CASE("estimate_anchors blends structural prior with centroids") {
  std::mt19937 rng(90);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Matrix<double, 32, 24> w = Eigen::Matrix<double, 32, 24>::Zero();
  for (int a = 0; a < 32; ++a) w(a, a % 24) = 1.0;  // anchors copy joints
  J2AMapping m;
  m.w = w;

  Joints j;
  for (int r = 0; r < 24; ++r) j.row(r) << g(rng), g(rng), g(rng);

  SUBCASE("no observations keep the prior") {
    cloud::PointCloud empty;
    empty.points.resize(0, 3);
    labels::LabelSet ls;
    const Anchors a = estimate_anchors(j, m, empty, ls);
    CHECK((a - m.w * j).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("many observations dominate the prior") {
    cloud::PointCloud c;
    c.points.resize(25, 3);
    labels::LabelSet ls;
    ls.joint_label.assign(25, 0);
    ls.anchor_label.assign(25, 7);
    for (int i = 0; i < 25; ++i) c.points.row(i) << 4.0, 5.0, 6.0;
    const Anchors a = estimate_anchors(j, m, c, ls);
    // n = 25 >= 20, so mu = 1: pure centroid.
    CHECK((a.row(7) - Eigen::RowVector3d(4, 5, 6)).norm() < 1e-12);
    // Other anchors untouched.
    CHECK((a.row(3) - (m.w * j).row(3)).norm() < 1e-12);
  }

  SUBCASE("few observations interpolate") {
    cloud::PointCloud c;
    c.points.resize(10, 3);
    labels::LabelSet ls;
    ls.joint_label.assign(10, 0);
    ls.anchor_label.assign(10, 2);
    for (int i = 0; i < 10; ++i) c.points.row(i) << 1.0, 0.0, 0.0;
    const Anchors a = estimate_anchors(j, m, c, ls);
    const Eigen::RowVector3d prior = (m.w * j).row(2);
    const Eigen::RowVector3d want =
        0.5 * prior + 0.5 * Eigen::RowVector3d(1, 0, 0);  // mu = 10/20
    CHECK((a.row(2) - want).norm() < 1e-12);
  }
}

TEST_CASE("confidence formulas") {
  SUBCASE("joint confidence saturates at 20 points") {
    std::array<int, body::kNumJoints> support{};
    support[0] = 0;
    support[1] = 10;
    support[2] = 20;
    support[3] = 500;
    const auto conf = joint_confidence(support);
    CHECK(conf[0] == 0.0);
    CHECK(conf[1] == doctest::Approx(0.5));
    CHECK(conf[2] == doctest::Approx(1.0));
    CHECK(conf[3] == doctest::Approx(1.0));
  }
  SUBCASE("anchor confidence decays with distance") {
    cloud::PointCloud c;
    c.points.resize(20, 3);
    labels::LabelSet ls;
    ls.joint_label.assign(20, 0);
    ls.anchor_label.assign(20, 32);
    // 10 points at distance exactly 0.1 from anchor 4.
    for (int i = 0; i < 10; ++i) {
      c.points.row(i) << 0.1, 0.0, 0.0;
      ls.anchor_label[i] = 4;
    }
    Anchors a = Anchors::Zero();
    const auto conf = anchor_confidence(c, ls, a);
    CHECK(conf[4] == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(conf[5] == 0.0);
  }
}

TEST_CASE("temporal smoothing damps noise and keeps bone lengths") {
  const body::BodyTemplate t = body::make_default_template(512, 43);
  std::mt19937 rng(100);
  std::normal_distribution<double> g(0.0, 0.01);

  // Ground truth: template joints drifting linearly.
  const int n = 40;
  std::vector<Sparkle> noisy(n);
  std::vector<Joints> truth(n);
  for (int f = 0; f < n; ++f) {
    Joints j = t.j_tem;
    j.rowwise() += Eigen::RowVector3d(0.01 * f, 0, 0);
    truth[f] = j;
    noisy[f].joints = j;
    for (int r = 0; r < body::kNumJoints; ++r)
      noisy[f].joints.row(r) += Eigen::RowVector3d(g(rng), g(rng), g(rng));
    noisy[f].joint_conf.fill(1.0);
    noisy[f].anchor_conf.fill(1.0);
  }

  const auto smooth = temporal_smooth(noisy, 10.0, t);
  double err_noisy = 0.0, err_smooth = 0.0;
  const auto& tree = body::KinematicTree::standard();
  for (int f = 0; f < n; ++f) {
    err_noisy += (noisy[f].joints - truth[f]).norm();
    err_smooth += (smooth[f].joints - truth[f]).norm();
    for (int j = 1; j < body::kNumJoints; ++j) {
      const double len =
          (smooth[f].joints.row(j) - smooth[f].joints.row(tree.parent[j]))
              .norm();
      CHECK(len == doctest::Approx(body::bone_length(t, j)).epsilon(1e-9));
    }
  }
  CHECK(err_smooth < err_noisy);
  CHECK_THROWS_AS(temporal_smooth({}, 1.0, t), std::invalid_argument);
}

TEST_CASE("loss functions") {
  const LossWeights w;
  SUBCASE("zero at the truth") {
    Joints j = Joints::Random();
    Eigen::MatrixXd scores(2, 25);
    scores.setConstant(1e-6);
    scores(0, 3) = 1.0;
    scores(1, 24) = 1.0;
    const std::vector<int> gt{3, 24};
    const double l =
        loss_pst(j, j, scores, gt, geom3::Vec3(1, 2, 3), geom3::Vec3(1, 2, 3), w);
    CHECK(l < 1e-4);  // CE of near-one-hot rows is tiny
  }
  SUBCASE("joint term scales quadratically") {
    Joints j = Joints::Zero();
    Joints j2 = Joints::Zero();
    j2.col(0).setConstant(0.1);
    Eigen::MatrixXd scores(0, 25);
    const std::vector<int> gt;
    const double l1v = loss_pst(j2, j, scores, gt, geom3::Vec3::Zero(),
                                geom3::Vec3::Zero(), w);
    CHECK(l1v == doctest::Approx(w.l1 * 24 * 0.01 / 72.0).epsilon(1e-12));
  }
  SUBCASE("cross entropy of uniform scores is log(classes)") {
    Anchors a = Anchors::Zero();
    Eigen::MatrixXd scores = Eigen::MatrixXd::Ones(5, 33);
    const std::vector<int> gt{0, 1, 2, 3, 32};
    const double l = loss_sae(a, a, scores, gt, w);
    CHECK(l == doctest::Approx(w.l5 * std::log(33.0)).epsilon(1e-12));
  }
  SUBCASE("pose parameter loss") {
    std::array<geom3::Vec3, body::kNumJoints> th{};
    th.fill(geom3::Vec3::Zero());
    auto th2 = th;
    th2[0] = geom3::Vec3(0.3, 0, 0);
    body::ShapeVec b = body::ShapeVec::Zero(), b2 = body::ShapeVec::Zero();
    b2[1] = 1.0;
    const double l = loss_sss(th2, th, b2, b, w);
    CHECK(l == doctest::Approx(w.l6 * 0.09 / 72.0 + w.l7 * 1.0 / 10.0)
                   .epsilon(1e-12));
  }
}
