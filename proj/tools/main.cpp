// Command-line front end: dataset synthesis, labeling, J2A fitting,
// single- and multi-view solving, occlusion ablation, tracking,
// evaluation and manifest verification. Every command is a pure
// function of (dataset bytes, config, seed); reruns are byte-identical.
#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "sparkle/assignment.hpp"
#include "sparkle/io.hpp"
#include "sparkle/metrics.hpp"
#include "sparkle/multiview.hpp"
#include "sparkle/solver.hpp"
#include "sparkle/track.hpp"

namespace fs = std::filesystem;
using namespace sparkle;
using io::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------- config

struct RunConfig {
  unsigned seed = 0;
  int surface_count = 1024;
  unsigned template_seed = 0;
  int frames = 100;
  int points_per_scan = 2048;
  double noise_sigma = 0.0;
  double dropout = 0.0;
  std::vector<geom3::Vec3> views{geom3::Vec3::Zero()};
  std::vector<double> occlusion_ratios{0.0, 0.3, 0.5, 0.7, 0.9};
  geom3::Vec3 zone_min{-3.0, -3.0, -3.0};
  geom3::Vec3 zone_max{3.0, 3.0, 3.0};
  int persons = 1;
  double lambda_smooth = 0.0;
  int label_k = 5;
  double bg_dist = 0.25;
  double match_dist = 0.5;
  double gate = 1.0;
  int max_miss = 5;
  solver::SolverConfig solver;
};

json config_to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["surface_count"] = c.surface_count;
  j["template_seed"] = c.template_seed;
  j["frames"] = c.frames;
  j["points_per_scan"] = c.points_per_scan;
  j["noise_sigma"] = c.noise_sigma;
  j["dropout"] = c.dropout;
  j["views"] = json::array();
  for (const auto& v : c.views) j["views"].push_back({v.x(), v.y(), v.z()});
  j["occlusion_ratios"] = c.occlusion_ratios;
  j["zone_min"] = {c.zone_min.x(), c.zone_min.y(), c.zone_min.z()};
  j["zone_max"] = {c.zone_max.x(), c.zone_max.y(), c.zone_max.z()};
  j["persons"] = c.persons;
  j["lambda_smooth"] = c.lambda_smooth;
  j["label_k"] = c.label_k;
  j["bg_dist"] = c.bg_dist;
  j["match_dist"] = c.match_dist;
  j["gate"] = c.gate;
  j["max_miss"] = c.max_miss;
  json s;
  s["max_iter"] = c.solver.max_iter;
  s["damping_init"] = c.solver.damping_init;
  s["tol_cost"] = c.solver.tol_cost;
  s["fd_step"] = c.solver.fd_step;
  s["joint_weight"] = c.solver.joint_weight;
  s["anchor_weight"] = c.solver.anchor_weight;
  s["beta_frozen"] = c.solver.beta_frozen;
  s["beta_freeze_conf"] = c.solver.beta_freeze_conf;
  j["solver"] = s;
  return j;
}

void reject_unknown(const json& j, const std::vector<std::string>& known,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw std::invalid_argument("config: unknown key '" + it.key() +
                                  "' in " + where);
}

geom3::Vec3 vec3_from_json(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 3)
    throw std::invalid_argument("config: '" + key + "' must be [x, y, z]");
  return geom3::Vec3(j[0].get<double>(), j[1].get<double>(),
                     j[2].get<double>());
}

RunConfig config_from_json(const json& j) {
  reject_unknown(j,
                 {"seed", "surface_count", "template_seed", "frames",
                  "points_per_scan", "noise_sigma", "dropout", "views",
                  "occlusion_ratios", "zone_min", "zone_max", "persons",
                  "lambda_smooth", "label_k", "bg_dist", "match_dist", "gate",
                  "max_miss", "solver"},
                 "top level");
  RunConfig c;
  if (j.contains("seed")) c.seed = j["seed"].get<unsigned>();
  if (j.contains("surface_count"))
    c.surface_count = j["surface_count"].get<int>();
  if (j.contains("template_seed"))
    c.template_seed = j["template_seed"].get<unsigned>();
  if (j.contains("frames")) c.frames = j["frames"].get<int>();
  if (j.contains("points_per_scan"))
    c.points_per_scan = j["points_per_scan"].get<int>();
  if (j.contains("noise_sigma")) c.noise_sigma = j["noise_sigma"].get<double>();
  if (j.contains("dropout")) c.dropout = j["dropout"].get<double>();
  if (j.contains("views")) {
    c.views.clear();
    for (const auto& v : j["views"]) c.views.push_back(vec3_from_json(v, "views"));
    if (c.views.empty())
      throw std::invalid_argument("config: 'views' must not be empty");
  }
  if (j.contains("occlusion_ratios"))
    c.occlusion_ratios = j["occlusion_ratios"].get<std::vector<double>>();
  if (j.contains("zone_min")) c.zone_min = vec3_from_json(j["zone_min"], "zone_min");
  if (j.contains("zone_max")) c.zone_max = vec3_from_json(j["zone_max"], "zone_max");
  if (j.contains("persons")) c.persons = j["persons"].get<int>();
  if (j.contains("lambda_smooth"))
    c.lambda_smooth = j["lambda_smooth"].get<double>();
  if (j.contains("label_k")) c.label_k = j["label_k"].get<int>();
  if (j.contains("bg_dist")) c.bg_dist = j["bg_dist"].get<double>();
  if (j.contains("match_dist")) c.match_dist = j["match_dist"].get<double>();
  if (j.contains("gate")) c.gate = j["gate"].get<double>();
  if (j.contains("max_miss")) c.max_miss = j["max_miss"].get<int>();
  if (j.contains("solver")) {
    const json& s = j["solver"];
    reject_unknown(s,
                   {"max_iter", "damping_init", "tol_cost", "fd_step",
                    "joint_weight", "anchor_weight", "beta_frozen",
                    "beta_freeze_conf"},
                   "'solver'");
    if (s.contains("max_iter")) c.solver.max_iter = s["max_iter"].get<int>();
    if (s.contains("damping_init"))
      c.solver.damping_init = s["damping_init"].get<double>();
    if (s.contains("tol_cost")) c.solver.tol_cost = s["tol_cost"].get<double>();
    if (s.contains("fd_step")) c.solver.fd_step = s["fd_step"].get<double>();
    if (s.contains("joint_weight"))
      c.solver.joint_weight = s["joint_weight"].get<double>();
    if (s.contains("anchor_weight"))
      c.solver.anchor_weight = s["anchor_weight"].get<double>();
    if (s.contains("beta_frozen"))
      c.solver.beta_frozen = s["beta_frozen"].get<bool>();
    if (s.contains("beta_freeze_conf"))
      c.solver.beta_freeze_conf = s["beta_freeze_conf"].get<double>();
  }
  if (c.frames < 1) throw std::invalid_argument("config: frames must be >= 1");
  if (c.persons < 1)
    throw std::invalid_argument("config: persons must be >= 1");
  for (double r : c.occlusion_ratios)
    if (r < 0.0 || r >= 1.0)
      throw std::invalid_argument("config: occlusion ratios must be in [0,1)");
  return c;
}

struct CliOpts {
  std::string config_path;
  std::string out;
  long long seed = -1;
  int views = -1;
  bool oracle_labels = false;
  bool skip_refine = false;
  int threads = 1;
};

RunConfig resolve_config(const CliOpts& o) {
  json j = json::object();
  if (!o.config_path.empty()) {
    j = io::read_json(o.config_path);
  } else if (fs::exists(fs::path(o.out) / "config.json")) {
    j = io::read_json(fs::path(o.out) / "config.json");
  }
  RunConfig c = config_from_json(j);
  if (o.seed >= 0) c.seed = static_cast<unsigned>(o.seed);
  if (o.views > 0) {
    if (o.views > static_cast<int>(c.views.size()))
      throw std::invalid_argument("--views exceeds configured view count");
    c.views.resize(o.views);
  }
  return c;
}

// --------------------------------------------------------------- helpers

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex err_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < n; i += threads) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string frame_name(int f) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06d", f);
  return buf;
}

struct Manifest {
  std::map<std::string, std::string> files;  // relpath -> hash

  void add(const fs::path& root, const std::string& rel) {
    files[rel] = io::file_hash(root / rel);
  }
  void write(const fs::path& root, const std::string& name,
             const std::string& config_hash, int frames) const {
    json j;
    j["tool_version"] = kToolVersion;
    j["config_hash"] = config_hash;
    j["frames"] = frames;
    j["files"] = files;
    io::write_json(root / name, j);
  }
};

std::string config_hash(const RunConfig& c) {
  // Hash the canonical serialized form through a throwaway file-free FNV.
  const std::string s = config_to_json(c).dump();
  unsigned long long h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", h);
  return buf;
}

// ------------------------------------------------------ motion synthesis

// Uniform Catmull-Rom through values v at a fixed keyframe interval.
geom3::Vec3 catmull_rom(const std::vector<geom3::Vec3>& keys, double u) {
  const int n = static_cast<int>(keys.size());
  const int i = std::min(static_cast<int>(u), n - 2);
  const double t = u - i;
  auto at = [&](int k) { return keys[std::clamp(k, 0, n - 1)]; };
  const geom3::Vec3 p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * t +
                (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * (t * t) +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * (t * t * t));
}

// Reference direction per joint for projecting synthetic motion onto the
// subspace the Sparkle keypoints can observe. Joints whose twist has no
// anchor evidence get swing-only motion about this direction; joints with
// no reference at all stay at identity.
enum class MotionDof { kFull, kSwingOnly, kNone };

struct MotionSpace {
  std::array<MotionDof, body::kNumJoints> dof;
  std::array<geom3::Vec3, body::kNumJoints> dir;  // swing reference
};

MotionSpace motion_space(const body::BodyTemplate& t) {
  const auto& tree = body::KinematicTree::standard();
  std::array<int, body::kNumJoints> anchor_count{};
  std::array<int, body::kNumJoints> first_anchor;
  first_anchor.fill(-1);
  for (int a = 0; a < body::kNumAnchors; ++a) {
    const int j = t.anchor_joint[a];
    if (first_anchor[j] < 0) first_anchor[j] = a;
    anchor_count[j]++;
  }
  MotionSpace ms;
  ms.dir.fill(geom3::Vec3::UnitX());
  ms.dof[0] = MotionDof::kFull;  // root: Procrustes over three bones
  for (int j = 1; j < body::kNumJoints; ++j) {
    const auto kids = tree.children(j);
    if (!kids.empty()) {
      if (anchor_count[j] >= 1) {
        ms.dof[j] = MotionDof::kFull;
      } else {
        ms.dof[j] = MotionDof::kSwingOnly;
        ms.dir[j] = (t.j_tem.row(kids.front()) - t.j_tem.row(j))
                        .normalized()
                        .transpose();
      }
    } else if (anchor_count[j] >= 2) {
      ms.dof[j] = MotionDof::kFull;
    } else if (anchor_count[j] == 1) {
      ms.dof[j] = MotionDof::kSwingOnly;
      ms.dir[j] = (t.a_tem.row(first_anchor[j]) - t.j_tem.row(j))
                      .normalized()
                      .transpose();
    } else {
      ms.dof[j] = MotionDof::kNone;
    }
  }
  return ms;
}

// Smooth seeded motion: per-joint rotation-vector splines (magnitude
// clamped to 1.2 rad) and a root path confined near `center`.
std::vector<body::Pose> generate_motion(int frames, unsigned seed,
                                        const geom3::Vec3& center,
                                        double trans_amplitude,
                                        const MotionSpace& ms) {
  constexpr int kInterval = 25;
  const int n_keys = frames / kInterval + 3;
  std::mt19937 rng(seed);
  std::normal_distribution<double> g(0.0, 0.4);

  std::array<std::vector<geom3::Vec3>, body::kNumJoints> keys;
  for (int j = 0; j < body::kNumJoints; ++j) {
    keys[j].resize(n_keys);
    for (int k = 0; k < n_keys; ++k) {
      geom3::Vec3 v(g(rng), g(rng), g(rng));
      if (v.norm() > 1.2) v *= 1.2 / v.norm();
      keys[j][k] = v;
    }
  }
  std::vector<geom3::Vec3> tkeys(n_keys);
  std::uniform_real_distribution<double> u(-trans_amplitude, trans_amplitude);
  for (int k = 0; k < n_keys; ++k)
    tkeys[k] = center + geom3::Vec3(u(rng), u(rng), u(rng));

  std::vector<body::Pose> poses(frames);
  for (int f = 0; f < frames; ++f) {
    const double t = static_cast<double>(f) / kInterval;
    for (int j = 0; j < body::kNumJoints; ++j) {
      if (ms.dof[j] == MotionDof::kNone) continue;
      geom3::Vec3 v = catmull_rom(keys[j], t);
      if (v.norm() > 1.2) v *= 1.2 / v.norm();
      if (ms.dof[j] == MotionDof::kSwingOnly) {
        const geom3::Mat3 r = geom3::from_rotvec(v);
        v = geom3::to_rotvec(
            geom3::swing_from_vectors(ms.dir[j], r * ms.dir[j]).r);
      }
      poses[f].theta[j] = v;
    }
    poses[f].trans = catmull_rom(tkeys, t);
  }
  return poses;
}

// ------------------------------------------------------------- commands

json gt_poses_to_json(const std::vector<std::vector<body::Pose>>& persons) {
  json j;
  j["persons"] = json::array();
  for (const auto& seq : persons) {
    json arr = json::array();
    for (const auto& p : seq) arr.push_back(io::pose_to_json(p));
    j["persons"].push_back(arr);
  }
  return j;
}

std::vector<std::vector<body::Pose>> gt_poses_from_json(const json& j) {
  std::vector<std::vector<body::Pose>> out;
  for (const auto& arr : j.at("persons")) {
    std::vector<body::Pose> seq;
    for (const auto& p : arr) seq.push_back(io::pose_from_json(p));
    out.push_back(std::move(seq));
  }
  if (out.empty()) throw std::runtime_error("gt_poses.json: no persons");
  return out;
}

int cmd_simulate(const CliOpts& o) {
  const RunConfig cfg = resolve_config(o);
  const fs::path root(o.out);
  fs::create_directories(root);

  const body::BodyTemplate tem =
      body::make_default_template(cfg.surface_count, cfg.template_seed);
  io::write_json(root / "config.json", config_to_json(cfg));
  io::write_json(root / "template.json", io::template_to_json(tem));

  // Person root centers spread along x inside the zone.
  const geom3::Vec3 zone_center = 0.5 * (cfg.zone_min + cfg.zone_max);
  std::vector<std::vector<body::Pose>> persons(cfg.persons);
  for (int p = 0; p < cfg.persons; ++p) {
    geom3::Vec3 center = zone_center;
    center.x() += (p - 0.5 * (cfg.persons - 1)) * 2.5;
    const double amplitude = cfg.persons > 1 ? 0.4 : 0.8;
    persons[p] = generate_motion(cfg.frames, cfg.seed + 7919u * p, center,
                                 amplitude, motion_space(tem));
  }
  io::write_json(root / "gt_poses.json", gt_poses_to_json(persons));

  Manifest man;
  man.add(root, "config.json");
  man.add(root, "template.json");
  man.add(root, "gt_poses.json");

  std::vector<track::FrameDetections> gt_tracks(cfg.frames);
  const int nv = static_cast<int>(cfg.views.size());
  std::vector<std::vector<std::string>> rels(cfg.frames);
  for (auto& r : rels) r.resize(nv);

  parallel_for(cfg.frames, o.threads, [&](int f) {
    std::vector<body::BodyState> states(cfg.persons);
    for (int p = 0; p < cfg.persons; ++p)
      states[p] = body::forward_kinematics(tem, persons[p][f]);
    for (int v = 0; v < nv; ++v) {
      cloud::PointCloud merged;
      merged.frame = f;
      merged.view_id = v;
      std::vector<cloud::PointCloud> parts(cfg.persons);
      int total = 0;
      for (int p = 0; p < cfg.persons; ++p) {
        cloud::SensorModel sensor;
        sensor.view_dir = cfg.views[v];
        sensor.noise_sigma = cfg.noise_sigma;
        sensor.dropout = cfg.dropout;
        sensor.seed = cfg.seed ^ (2654435761u * static_cast<unsigned>(f)) ^
                      (40503u * static_cast<unsigned>(v)) ^
                      (97u * static_cast<unsigned>(p));
        parts[p] = cloud::simulate_scan(states[p], sensor, cfg.points_per_scan);
        total += parts[p].size();
      }
      merged.points.resize(total, 3);
      int row = 0;
      for (const auto& part : parts) {
        merged.points.middleRows(row, part.size()) = part.points;
        row += part.size();
      }
      const std::string rel =
          "view_" + std::to_string(v) + "/" + frame_name(f) + ".ply";
      fs::create_directories(root / ("view_" + std::to_string(v)));
      io::write_ply(root / rel, merged);
      rels[f][v] = rel;
    }
  });
  for (int f = 0; f < cfg.frames; ++f) {
    for (const auto& rel : rels[f]) man.add(root, rel);
    for (int p = 0; p < cfg.persons; ++p) {
      const body::BodyState s = body::forward_kinematics(tem, persons[p][f]);
      gt_tracks[f].push_back({p, s.joints.row(0).transpose()});
    }
  }
  io::write_tracks_csv(root / "gt_tracks.csv", gt_tracks);
  man.add(root, "gt_tracks.csv");
  man.write(root, "manifest.json", config_hash(cfg), cfg.frames);
  std::cout << "simulated " << cfg.frames << " frames, " << nv << " view(s), "
            << cfg.persons << " person(s) -> " << root.string() << "\n";
  return 0;
}

struct Dataset {
  fs::path root;
  RunConfig cfg;
  body::BodyTemplate tem;
  std::vector<std::vector<body::Pose>> gt;
};

Dataset open_dataset(const CliOpts& o) {
  Dataset d;
  d.root = o.out;
  if (!fs::exists(d.root / "manifest.json"))
    throw std::invalid_argument("no dataset at " + d.root.string() +
                                " (run simulate first)");
  d.cfg = resolve_config(o);
  d.tem = io::template_from_json(io::read_json(d.root / "template.json"));
  d.gt = gt_poses_from_json(io::read_json(d.root / "gt_poses.json"));
  return d;
}

cloud::PointCloud load_frame(const Dataset& d, int view, int f) {
  cloud::PointCloud c = io::read_ply(
      d.root / ("view_" + std::to_string(view)) / (frame_name(f) + ".ply"));
  c.frame = f;
  c.view_id = view;
  return c;
}

labels::LabelSet oracle_labels_for(const Dataset& d,
                                   const cloud::PointCloud& c, int f) {
  const body::BodyState s = body::forward_kinematics(d.tem, d.gt[0][f]);
  labels::LabelParams lp;
  lp.k = d.cfg.label_k;
  lp.bg_dist = d.cfg.bg_dist;
  return labels::make_labels(c, s, d.tem.anchor_joint, lp);
}

int cmd_label(const CliOpts& o) {
  const Dataset d = open_dataset(o);
  if (d.cfg.persons != 1)
    throw std::invalid_argument("label: single-person datasets only");
  const int nv = static_cast<int>(d.cfg.views.size());
  Manifest man;
  std::vector<std::vector<std::string>> rels(d.cfg.frames);
  for (auto& r : rels) r.resize(nv);
  parallel_for(d.cfg.frames, o.threads, [&](int f) {
    for (int v = 0; v < nv; ++v) {
      const cloud::PointCloud c = load_frame(d, v, f);
      const labels::LabelSet ls = oracle_labels_for(d, c, f);
      const std::string rel =
          "view_" + std::to_string(v) + "/" + frame_name(f) + "_labels.csv";
      io::write_labels_csv(d.root / rel, ls);
      rels[f][v] = rel;
    }
  });
  for (const auto& per_frame : rels)
    for (const auto& rel : per_frame) man.add(d.root, rel);
  man.write(d.root, "manifest_label.json", config_hash(d.cfg), d.cfg.frames);
  std::cout << "labeled " << d.cfg.frames << " frames x " << nv << " view(s)\n";
  return 0;
}

rep::J2AMapping fit_j2a_from_gt(const Dataset& d) {
  std::vector<body::Joints> jf;
  std::vector<body::Anchors> af;
  for (const auto& pose : d.gt[0]) {
    body::Joints j;
    body::Anchors a;
    body::fk_keypoints(d.tem, pose, j, a);
    jf.push_back(j);
    af.push_back(a);
  }
  return rep::fit_j2a(jf, af);
}

int cmd_fit(const CliOpts& o) {
  const Dataset d = open_dataset(o);
  const rep::J2AMapping m = fit_j2a_from_gt(d);
  io::write_json(d.root / "j2a.json", io::j2a_to_json(m));
  Manifest man;
  man.add(d.root, "j2a.json");
  man.write(d.root, "manifest_fit.json", config_hash(d.cfg), d.cfg.frames);
  std::cout << "fit j2a over " << m.frames
            << " frames, rms residual " << io::format_double(m.residual)
            << " m\n";
  return 0;
}

rep::J2AMapping load_or_fit_j2a(const Dataset& d) {
  if (fs::exists(d.root / "j2a.json"))
    return io::j2a_from_json(io::read_json(d.root / "j2a.json"));
  return fit_j2a_from_gt(d);
}

// Per-view Sparkle estimation for one frame (the geometric front end).
rep::Sparkle estimate_sparkle(const Dataset& d, const cloud::PointCloud& c,
                              const labels::LabelSet& ls,
                              const rep::J2AMapping& j2a) {
  const rep::JointEstimate est = rep::estimate_joints_geometric(c, ls, d.tem);
  const auto [j_op, t_op] =
      rep::refine_joints_offsets(c, ls, est.j_init, est.t_init);
  rep::Sparkle s;
  s.joints = j_op;
  s.trans = t_op;
  s.anchors = rep::estimate_anchors(j_op, j2a, c, ls);
  s.joint_conf = rep::joint_confidence(est.support);
  s.anchor_conf = rep::anchor_confidence(c, ls, s.anchors);
  return s;
}

struct SolveOutput {
  std::vector<rep::Sparkle> sparkles;
  std::vector<body::Pose> poses;
  metrics::EvalReport report;
};

// Shared single-view pipeline: estimate Sparkles, smooth, solve, score.
SolveOutput run_solve_pipeline(const Dataset& d, const CliOpts& o,
                               double occlusion_ratio) {
  if (d.cfg.persons != 1)
    throw std::invalid_argument("solve: single-person datasets only");
  const rep::J2AMapping j2a = load_or_fit_j2a(d);
  const int n = d.cfg.frames;

  SolveOutput out;
  out.sparkles.resize(n);
  std::vector<std::string> frame_errors(n);
  parallel_for(n, o.threads, [&](int f) {
    try {
      cloud::PointCloud c = load_frame(d, 0, f);
      if (occlusion_ratio > 0.0)
        c = cloud::occlude(c, occlusion_ratio,
                           d.cfg.seed ^ (0x9e3779b9u + static_cast<unsigned>(f)));
      labels::LabelSet ls;
      const fs::path label_file =
          d.root / "view_0" / (frame_name(f) + "_labels.csv");
      if (!o.oracle_labels && occlusion_ratio == 0.0 && fs::exists(label_file))
        ls = io::read_labels_csv(label_file);
      else
        ls = oracle_labels_for(d, c, f);
      out.sparkles[f] = estimate_sparkle(d, c, ls, j2a);
    } catch (const std::exception& e) {
      frame_errors[f] = e.what();
      out.sparkles[f].joint_conf.fill(0.0);
      out.sparkles[f].anchor_conf.fill(0.0);
    }
  });
  int failed = 0;
  for (int f = 0; f < n; ++f)
    if (!frame_errors[f].empty()) {
      ++failed;
      std::cerr << "frame " << f << ": " << frame_errors[f] << "\n";
    }
  if (failed == n) throw std::runtime_error("solve: every frame failed");
  if (failed > 0)
    std::cerr << failed << "/" << n << " frames failed; continuing\n";

  if (d.cfg.lambda_smooth > 0.0)
    out.sparkles = rep::temporal_smooth(out.sparkles, d.cfg.lambda_smooth, d.tem);

  out.poses.resize(n);
  parallel_for(n, o.threads, [&](int f) {
    if (o.skip_refine) {
      out.poses[f] = solver::init_pose_swing_twist(d.tem, out.sparkles[f]);
    } else {
      out.poses[f] = solver::solve(d.tem, out.sparkles[f], d.cfg.solver).pose;
    }
  });
  out.report = metrics::evaluate_sequence(out.poses, d.gt[0], d.tem);
  return out;
}

void write_solve_outputs(const Dataset& d, const SolveOutput& out,
                         const std::string& prefix, Manifest& man) {
  json sparkles = json::array();
  for (const auto& s : out.sparkles) sparkles.push_back(io::sparkle_to_json(s));
  io::write_json(d.root / (prefix + "sparkles.json"), sparkles);
  json poses = json::array();
  for (const auto& p : out.poses) poses.push_back(io::pose_to_json(p));
  io::write_json(d.root / (prefix + "poses_solved.json"), poses);
  io::write_json(d.root / (prefix + "eval.json"),
                 io::eval_report_to_json(out.report));
  std::ofstream csv(d.root / (prefix + "eval.csv"), std::ios::binary);
  csv << io::eval_report_to_csv(out.report);
  csv.close();
  man.add(d.root, prefix + "sparkles.json");
  man.add(d.root, prefix + "poses_solved.json");
  man.add(d.root, prefix + "eval.json");
  man.add(d.root, prefix + "eval.csv");
}

void print_report(const metrics::EvalReport& r) {
  std::cout << "J Err(L) " << io::format_double(r.j_err_l) << " mm, V Err(L) "
            << io::format_double(r.v_err_l) << " mm, J Err(G) "
            << io::format_double(r.j_err_g) << " mm, V Err(G) "
            << io::format_double(r.v_err_g) << " mm, Ang Err "
            << io::format_double(r.ang_err) << " deg\n";
}

int cmd_solve(const CliOpts& o) {
  const Dataset d = open_dataset(o);
  const SolveOutput out = run_solve_pipeline(d, o, 0.0);
  Manifest man;
  write_solve_outputs(d, out, "", man);
  man.write(d.root, "manifest_solve.json", config_hash(d.cfg), d.cfg.frames);
  print_report(out.report);
  return 0;
}

int cmd_fuse(const CliOpts& o) {
  const Dataset d = open_dataset(o);
  if (d.cfg.views.size() < 2)
    throw std::invalid_argument("fuse: needs a dataset with >= 2 views");
  if (d.cfg.persons != 1)
    throw std::invalid_argument("fuse: single-person datasets only");
  const rep::J2AMapping j2a = load_or_fit_j2a(d);
  const int n = d.cfg.frames;
  const int nv = static_cast<int>(d.cfg.views.size());

  SolveOutput out;
  out.sparkles.resize(n);
  parallel_for(n, o.threads, [&](int f) {
    std::vector<multiview::ViewPrediction> preds;
    for (int v = 0; v < nv; ++v) {
      const cloud::PointCloud c = load_frame(d, v, f);
      labels::LabelSet ls;
      const fs::path label_file = d.root / ("view_" + std::to_string(v)) /
                                  (frame_name(f) + "_labels.csv");
      if (!o.oracle_labels && fs::exists(label_file))
        ls = io::read_labels_csv(label_file);
      else
        ls = oracle_labels_for(d, c, f);
      multiview::ViewPrediction p;
      p.sparkle = estimate_sparkle(d, c, ls, j2a);
      p.view_id = v;
      preds.push_back(std::move(p));
    }
    out.sparkles[f] = multiview::fuse_sparkle(preds);
  });
  if (d.cfg.lambda_smooth > 0.0)
    out.sparkles = rep::temporal_smooth(out.sparkles, d.cfg.lambda_smooth, d.tem);
  out.poses.resize(n);
  parallel_for(n, o.threads, [&](int f) {
    if (o.skip_refine)
      out.poses[f] = solver::init_pose_swing_twist(d.tem, out.sparkles[f]);
    else
      out.poses[f] = solver::solve(d.tem, out.sparkles[f], d.cfg.solver).pose;
  });
  out.report = metrics::evaluate_sequence(out.poses, d.gt[0], d.tem);

  Manifest man;
  write_solve_outputs(d, out, "fused_", man);
  man.write(d.root, "manifest_fuse.json", config_hash(d.cfg), d.cfg.frames);
  print_report(out.report);
  return 0;
}

int cmd_ablate_occlusion(const CliOpts& o) {
  const Dataset d = open_dataset(o);
  std::vector<double> ratios = d.cfg.occlusion_ratios;
  std::sort(ratios.begin(), ratios.end());

  std::string csv = "ratio,j_err_l,v_err_l,j_err_g,v_err_g,ang_err\n";
  json rows = json::array();
  for (double r : ratios) {
    CliOpts per = o;
    per.oracle_labels = true;  // occluded clouds need fresh labels
    const SolveOutput out = run_solve_pipeline(d, per, r);
    csv += io::format_double(r) + ',' + io::format_double(out.report.j_err_l) +
           ',' + io::format_double(out.report.v_err_l) + ',' +
           io::format_double(out.report.j_err_g) + ',' +
           io::format_double(out.report.v_err_g) + ',' +
           io::format_double(out.report.ang_err) + '\n';
    json row = io::eval_report_to_json(out.report);
    row["ratio"] = r;
    rows.push_back(row);
    std::cout << "ratio " << io::format_double(r) << ": ";
    print_report(out.report);
  }
  std::ofstream f(d.root / "ablation.csv", std::ios::binary);
  f << csv;
  f.close();
  io::write_json(d.root / "ablation.json", rows);
  Manifest man;
  man.add(d.root, "ablation.csv");
  man.add(d.root, "ablation.json");
  man.write(d.root, "manifest_ablate.json", config_hash(d.cfg), d.cfg.frames);
  return 0;
}

int cmd_track(const CliOpts& o) {
  const Dataset d = open_dataset(o);
  const auto gt_tracks = io::read_tracks_csv(d.root / "gt_tracks.csv");
  if (static_cast<int>(gt_tracks.size()) != d.cfg.frames)
    throw std::runtime_error("track: gt_tracks.csv frame count mismatch");

  track::TrackerParams tp;
  tp.gate = d.cfg.gate;
  tp.max_miss = d.cfg.max_miss;
  track::Tracker tracker(tp);
  std::vector<track::FrameDetections> pred(d.cfg.frames);
  for (int f = 0; f < d.cfg.frames; ++f) {
    const cloud::PointCloud c = load_frame(d, 0, f);
    const auto persons =
        track::segment_persons(c, d.cfg.zone_min, d.cfg.zone_max, 0.35, 30);
    std::vector<geom3::Vec3> centroids;
    for (const auto& [cl, centroid] : persons) centroids.push_back(centroid);
    const auto ids = tracker.associate(centroids, f);
    for (size_t i = 0; i < centroids.size(); ++i)
      pred[f].push_back({ids[i], centroids[i]});
  }

  // Ground truth uses pelvis positions; cluster centroids sit at the body
  // center, so compare with a generous match distance.
  const track::MotReport rep =
      track::compute_mot(gt_tracks, pred, d.cfg.match_dist);
  io::write_tracks_csv(d.root / "pred_tracks.csv", pred);
  io::write_json(d.root / "mot.json", io::mot_report_to_json(rep));
  Manifest man;
  man.add(d.root, "pred_tracks.csv");
  man.add(d.root, "mot.json");
  man.write(d.root, "manifest_track.json", config_hash(d.cfg), d.cfg.frames);
  std::cout << "MOTA " << io::format_double(rep.mota) << ", IDF1 "
            << io::format_double(rep.idf1) << ", IDs " << rep.id_switches
            << ", FP " << rep.fp << ", FN " << rep.fn << "\n";
  return 0;
}

int cmd_eval(const CliOpts& o) {
  const Dataset d = open_dataset(o);
  const fs::path solved = d.root / "poses_solved.json";
  if (!fs::exists(solved))
    throw std::invalid_argument("eval: no poses_solved.json (run solve first)");
  std::vector<body::Pose> poses;
  for (const auto& p : io::read_json(solved)) poses.push_back(io::pose_from_json(p));
  const metrics::EvalReport rep =
      metrics::evaluate_sequence(poses, d.gt[0], d.tem);
  io::write_json(d.root / "eval.json", io::eval_report_to_json(rep));
  std::ofstream csv(d.root / "eval.csv", std::ios::binary);
  csv << io::eval_report_to_csv(rep);
  csv.close();
  Manifest man;
  man.add(d.root, "eval.json");
  man.add(d.root, "eval.csv");
  man.write(d.root, "manifest_eval.json", config_hash(d.cfg), d.cfg.frames);
  print_report(rep);
  return 0;
}

int cmd_verify(const CliOpts& o) {
  const fs::path root(o.out);
  if (!fs::exists(root))
    throw std::invalid_argument("verify: no such directory " + root.string());
  int checked = 0, bad = 0;
  for (const auto& entry : fs::directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("manifest", 0) != 0 || entry.path().extension() != ".json")
      continue;
    const json man = io::read_json(entry.path());
    for (const auto& [rel, hash] : man.at("files").items()) {
      ++checked;
      std::string actual;
      try {
        actual = io::file_hash(root / rel);
      } catch (const std::exception&) {
        actual = "<missing>";
      }
      if (actual != hash.get<std::string>()) {
        ++bad;
        std::cerr << name << ": " << rel << " hash mismatch\n";
      }
    }
  }
  if (checked == 0)
    throw std::invalid_argument("verify: no manifests found in " +
                                root.string());
  std::cout << "verified " << checked << " files, " << bad << " mismatched\n";
  if (bad > 0) throw std::invalid_argument("verify: manifest check failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surface-anchored motion capture toolkit"};
  app.require_subcommand(1);

  CliOpts o;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON config path");
    sub->add_option("--out", o.out, "Dataset/output directory")->required();
    sub->add_option("--seed", o.seed, "Seed override");
    sub->add_option("--views", o.views, "Use only the first N views");
    sub->add_flag("--oracle-labels", o.oracle_labels,
                  "Generate labels from ground truth instead of files");
    sub->add_flag("--skip-refine", o.skip_refine,
                  "Stop at the geometric pose initialization");
    sub->add_option("--threads", o.threads, "Worker threads");
  };

  std::map<std::string, std::function<int(const CliOpts&)>> handlers{
      {"simulate", cmd_simulate},
      {"label", cmd_label},
      {"fit", cmd_fit},
      {"solve", cmd_solve},
      {"fuse", cmd_fuse},
      {"track", cmd_track},
      {"ablate-occlusion", cmd_ablate_occlusion},
      {"eval", cmd_eval},
      {"verify", cmd_verify},
  };
  const std::map<std::string, std::string> descriptions{
      {"simulate", "Synthesize a seeded dataset (clouds + ground truth)"},
      {"label", "Write per-point joint/anchor labels"},
      {"fit", "Fit the joint-to-anchor linear mapping"},
      {"solve", "Estimate Sparkles and reconstruct poses (view 0)"},
      {"fuse", "Multi-view fusion followed by solving"},
      {"track", "Segment persons and evaluate tracking"},
      {"ablate-occlusion", "Error sweep over occlusion ratios"},
      {"eval", "Re-score existing solved poses"},
      {"verify", "Re-check every manifest content hash"},
  };
  for (const auto& [name, fn] : handlers)
    add_common(app.add_subcommand(name, descriptions.at(name)));

  CLI11_PARSE(app, argc, argv);

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    return handlers.at(sub)(o);
  } catch (const std::invalid_argument& e) {
    json err;
    err["error"] = e.what();
    err["code"] = 2;
    std::cerr << err.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    json err;
    err["error"] = e.what();
    err["code"] = 3;
    std::cerr << err.dump() << "\n";
    return 3;
  }
}
