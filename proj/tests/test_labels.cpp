#include <limits>
#include <random>

#include "doctest.h"
#include "sparkle/labels.hpp"

using namespace sparkle;
using namespace sparkle::labels;

TEST_CASE("vertex_joint_match restricted argmin oracle") {
  const body::BodyTemplate t = body::make_default_template(512, 11);
  const auto match = vertex_joint_match(t.surface, t.j_tem);
  REQUIRE(static_cast<int>(match.size()) == t.surface_count());
  for (int v = 0; v < t.surface_count(); ++v) {
    const double chosen = (t.surface.row(v) - t.j_tem.row(match[v])).norm();
    for (int j = 0; j < body::kNumJoints; ++j) {
      const double d = (t.surface.row(v) - t.j_tem.row(j)).norm();
      CHECK(chosen <= d + 1e-15);
      if (d == chosen) CHECK(match[v] <= j);  // lowest-index tie break
    }
  }
  CHECK_THROWS_AS(vertex_joint_match(body::Surface(), t.j_tem),
                  std::invalid_argument);
}

TEST_CASE("point_joint_labels majority vote and background") {
  const body::BodyTemplate t = body::make_default_template(1024, 11);
  cloud::PointCloud c;
  // Points exactly on surface vertices plus two far-away points.
  c.points.resize(6, 3);
  c.points.row(0) = t.surface.row(10);
  c.points.row(1) = t.surface.row(200);
  c.points.row(2) = t.surface.row(777);
  c.points.row(3) = t.surface.row(901);
  c.points.row(4) << 5.0, 5.0, 5.0;
  c.points.row(5) << -3.0, 0.0, 0.0;

  const auto match = vertex_joint_match(t.surface, t.j_tem);
  const auto lab = point_joint_labels(c, t.surface, match, 1, 0.25);
  CHECK(lab[0] == match[10]);
  CHECK(lab[1] == match[200]);
  CHECK(lab[2] == match[777]);
  CHECK(lab[3] == match[901]);
  CHECK(lab[4] == kBackgroundJoint);
  CHECK(lab[5] == kBackgroundJoint);

  SUBCASE("k-vote equals brute-force mode") {
    std::mt19937 rng(3);
    std::normal_distribution<double> g(0.0, 0.02);
    cloud::PointCloud noisy;
    noisy.points.resize(300, 3);
    std::uniform_int_distribution<int> pick(0, t.surface_count() - 1);
    for (int i = 0; i < 300; ++i)
      noisy.points.row(i) =
          t.surface.row(pick(rng)) +
          Eigen::RowVector3d(g(rng), g(rng), g(rng));
    const int k = 5;
    const auto got = point_joint_labels(noisy, t.surface, match, k, 0.25);
    const auto nn = cloud::knn(noisy.points, t.surface, k);
    for (int i = 0; i < 300; ++i) {
      const double nearest =
          (noisy.points.row(i) - t.surface.row(nn[i][0])).norm();
      if (nearest > 0.25) {
        CHECK(got[i] == kBackgroundJoint);
        continue;
      }
      std::array<int, body::kNumJoints> votes{};
      for (int nb : nn[i]) votes[match[nb]]++;
      int best = 0;
      for (int j = 1; j < body::kNumJoints; ++j)
        if (votes[j] > votes[best]) best = j;
      CHECK(got[i] == best);
    }
  }
  SUBCASE("k larger than surface rejected") {
    CHECK_THROWS_AS(
        point_joint_labels(c, t.surface, match, t.surface_count() + 1, 0.25),
        std::invalid_argument);
  }
}

TEST_CASE("anchor_joint_assign reads through anchor vertices") {
  const body::BodyTemplate t = body::make_default_template(512, 13);
  const auto aj = anchor_joint_assign(t.anchor_vertex, t.surface_joint);
  for (int a = 0; a < body::kNumAnchors; ++a)
    CHECK(aj[a] == t.surface_joint[t.anchor_vertex[a]]);
  CHECK(aj == t.anchor_joint);

  std::array<int, body::kNumAnchors> bad = t.anchor_vertex;
  bad[0] = -1;
  CHECK_THROWS_AS(anchor_joint_assign(bad, t.surface_joint),
                  std::invalid_argument);
}

TEST_CASE("point_anchor_labels joint-localized nearest with ring fallback") {
  const body::BodyTemplate t = body::make_default_template(1024, 17);
  const body::BodyState s = body::forward_kinematics(t, body::Pose{});

  cloud::PointCloud c;
  c.points.resize(200, 3);
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> pick(0, t.surface_count() - 1);
  for (int i = 0; i < 200; ++i) c.points.row(i) = t.surface.row(pick(rng));

  const auto ls = make_labels(c, s, t.anchor_joint);
  REQUIRE(ls.joint_label.size() == 200);
  REQUIRE(ls.anchor_label.size() == 200);

  std::array<std::vector<int>, body::kNumJoints> anchors_of_joint;
  for (int a = 0; a < body::kNumAnchors; ++a)
    anchors_of_joint[t.anchor_joint[a]].push_back(a);

  for (int i = 0; i < 200; ++i) {
    const int jl = ls.joint_label[i];
    const int al = ls.anchor_label[i];
    REQUIRE(jl != kBackgroundJoint);  // points sampled from the surface
    REQUIRE(al != kBackgroundAnchor);
    if (!anchors_of_joint[jl].empty()) {
      // Must be the nearest anchor among the joint's own anchors.
      CHECK(t.anchor_joint[al] == jl);
      for (int a : anchors_of_joint[jl]) {
        CHECK((c.points.row(i) - s.anchors.row(al)).norm() <=
              (c.points.row(i) - s.anchors.row(a)).norm() + 1e-15);
      }
    }
  }

  SUBCASE("background joint maps to background anchor") {
    cloud::PointCloud far;
    far.points.resize(1, 3);
    far.points.row(0) << 9, 9, 9;
    const auto far_ls = make_labels(far, s, t.anchor_joint);
    CHECK(far_ls.joint_label[0] == kBackgroundJoint);
    CHECK(far_ls.anchor_label[0] == kBackgroundAnchor);
  }

  SUBCASE("joints without anchors borrow from kinematic neighbors") {
    // Force a synthetic assignment where joint 0 owns everything, so any
    // point labeled with another joint exercises the fallback search.
    std::array<int, body::kNumAnchors> aj;
    aj.fill(0);
    const auto al = point_anchor_labels(c, ls.joint_label, s.anchors, aj);
    for (int i = 0; i < 200; ++i) CHECK(al[i] != kBackgroundAnchor);
  }

  SUBCASE("label length mismatch rejected") {
    std::vector<int> short_labels(3, 0);
    CHECK_THROWS_AS(
        point_anchor_labels(c, short_labels, s.anchors, t.anchor_joint),
        std::invalid_argument);
  }
}

TEST_CASE("labels survive articulation") {
  // A posed body relabels its own noiseless scan consistently with the
  // vertex assignment the points were generated from.
  const body::BodyTemplate t = body::make_default_template(2048, 19);
  body::Pose p;
  p.theta[16] = geom3::Vec3(0, 0, 1.0);   // left shoulder
  p.theta[4] = geom3::Vec3(0.8, 0, 0);    // left knee
  const body::BodyState s = body::forward_kinematics(t, p);

  cloud::SensorModel m;
  m.seed = 21;
  const cloud::PointCloud scan = cloud::simulate_scan(s, m, 800);
  const auto ls = make_labels(scan, s, t.anchor_joint);

  int background = 0;
  for (int l : ls.joint_label)
    if (l == kBackgroundJoint) ++background;
  CHECK(background == 0);  // noiseless scan lies on the surface

  // Every labeled point is within bg_dist of some vertex of that joint.
  for (int i = 0; i < scan.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int v = 0; v < s.surface.rows(); ++v)
      if (s.surface_joint[v] == ls.joint_label[i])
        best = std::min(best, (scan.points.row(i) - s.surface.row(v)).norm());
    CHECK(best <= 0.25);
  }
}
