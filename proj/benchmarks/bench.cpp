#include <benchmark/benchmark.h>

#include <random>

#include "sparkle/cloud.hpp"
#include "sparkle/labels.hpp"
#include "sparkle/solver.hpp"

using namespace sparkle;

namespace {

body::Pose random_pose(std::mt19937& rng, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  body::Pose p;
  for (int j = 0; j < body::kNumJoints; ++j) {
    geom3::Vec3 v(g(rng), g(rng), g(rng));
    if (v.norm() > 1.2) v *= 1.2 / v.norm();
    p.theta[j] = v;
  }
  return p;
}

void bm_rodrigues(benchmark::State& state) {
  std::mt19937 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  geom3::Vec3 axis(g(rng), g(rng), g(rng));
  axis.normalize();
  double angle = 0.8;
  for (auto _ : state) {
    benchmark::DoNotOptimize(geom3::rodrigues(axis, angle));
    angle += 1e-9;  // defeat caching
  }
}
BENCHMARK(bm_rodrigues);

void bm_swing_twist_solve(benchmark::State& state) {
  std::mt19937 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  const geom3::Vec3 v_tem = geom3::Vec3(g(rng), g(rng), g(rng)).normalized();
  const geom3::Mat3 r = geom3::from_rotvec(geom3::Vec3(0.3, -0.5, 0.8));
  std::vector<geom3::Vec3> a_tem, a_obs;
  for (int i = 0; i < 3; ++i) {
    a_tem.push_back(geom3::Vec3(g(rng), g(rng), g(rng)));
    a_obs.push_back(r * a_tem.back());
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(
        geom3::solve_bone_rotation(v_tem, r * v_tem, a_tem, a_obs));
}
BENCHMARK(bm_swing_twist_solve);

void bm_fk_keypoints(benchmark::State& state) {
  const body::BodyTemplate t = body::make_default_template(1024, 0);
  std::mt19937 rng(3);
  const body::Pose p = random_pose(rng, 0.3);
  body::Joints j;
  body::Anchors a;
  for (auto _ : state) {
    body::fk_keypoints(t, p, j, a);
    benchmark::DoNotOptimize(j);
  }
}
BENCHMARK(bm_fk_keypoints);

void bm_fk_full_surface(benchmark::State& state) {
  const body::BodyTemplate t =
      body::make_default_template(static_cast<int>(state.range(0)), 0);
  std::mt19937 rng(4);
  const body::Pose p = random_pose(rng, 0.3);
  for (auto _ : state)
    benchmark::DoNotOptimize(body::forward_kinematics(t, p));
}
BENCHMARK(bm_fk_full_surface)->Arg(1024)->Arg(4096);

void bm_farthest_point_sample(benchmark::State& state) {
  std::mt19937 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  cloud::PointCloud c;
  c.points.resize(static_cast<int>(state.range(0)), 3);
  for (int i = 0; i < c.size(); ++i)
    c.points.row(i) << g(rng), g(rng), g(rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(cloud::farthest_point_sample(c, 512));
}
BENCHMARK(bm_farthest_point_sample)->Arg(2048)->Arg(8192);

void bm_simulate_scan(benchmark::State& state) {
  const body::BodyTemplate t = body::make_default_template(4096, 0);
  std::mt19937 rng(6);
  const body::BodyState st = body::forward_kinematics(t, random_pose(rng, 0.3));
  cloud::SensorModel m;
  m.noise_sigma = 0.005;
  for (auto _ : state)
    benchmark::DoNotOptimize(cloud::simulate_scan(st, m, 2048));
}
BENCHMARK(bm_simulate_scan);

void bm_make_labels(benchmark::State& state) {
  const body::BodyTemplate t = body::make_default_template(1024, 0);
  std::mt19937 rng(7);
  const body::BodyState st = body::forward_kinematics(t, random_pose(rng, 0.3));
  cloud::SensorModel m;
  const cloud::PointCloud scan = cloud::simulate_scan(st, m, 2048);
  for (auto _ : state)
    benchmark::DoNotOptimize(labels::make_labels(scan, st, t.anchor_joint));
}
BENCHMARK(bm_make_labels);

void bm_solver_init(benchmark::State& state) {
  const body::BodyTemplate t = body::make_default_template(1024, 0);
  std::mt19937 rng(8);
  const body::Pose p = random_pose(rng, 0.3);
  rep::Sparkle s;
  body::fk_keypoints(t, p, s.joints, s.anchors);
  s.joint_conf.fill(1.0);
  s.anchor_conf.fill(1.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(solver::init_pose_swing_twist(t, s));
}
BENCHMARK(bm_solver_init);

void bm_solver_full(benchmark::State& state) {
  const body::BodyTemplate t = body::make_default_template(1024, 0);
  std::mt19937 rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  const body::Pose p = random_pose(rng, 0.3);
  rep::Sparkle s;
  body::fk_keypoints(t, p, s.joints, s.anchors);
  for (int j = 0; j < body::kNumJoints; ++j)
    s.joints.row(j) += 0.01 * Eigen::RowVector3d(g(rng), g(rng), g(rng));
  s.joint_conf.fill(1.0);
  s.anchor_conf.fill(1.0);
  solver::SolverConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(solver::solve(t, s, cfg));
}
BENCHMARK(bm_solver_full);

}  // namespace

BENCHMARK_MAIN();
