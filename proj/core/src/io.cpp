#include "sparkle/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sparkle::io {

namespace {

std::vector<std::vector<double>> matrix_rows(
    const Eigen::Ref<const Eigen::MatrixXd>& m) {
  std::vector<std::vector<double>> out(m.rows());
  for (int i = 0; i < m.rows(); ++i) {
    out[i].resize(m.cols());
    for (int j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  }
  return out;
}

Eigen::MatrixXd matrix_from(const json& j, int cols) {
  Eigen::MatrixXd m(j.size(), cols);
  for (size_t i = 0; i < j.size(); ++i)
    for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  return m;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  return f;
}

json vec3_json(const geom3::Vec3& v) {
  return json::array({v.x(), v.y(), v.z()});
}

geom3::Vec3 vec3_from(const json& j) {
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json mat3_json(const geom3::Mat3& m) {
  json rows = json::array();
  for (int i = 0; i < 3; ++i)
    rows.push_back(json::array({m(i, 0), m(i, 1), m(i, 2)}));
  return rows;
}

geom3::Mat3 mat3_from(const json& j) {
  geom3::Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c) m(i, c) = j[i][c].get<double>();
  return m;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void write_ply(const std::filesystem::path& path, const cloud::PointCloud& c) {
  auto f = open_out(path);
  f << "ply\nformat ascii 1.0\n"
    << "element vertex " << c.size() << "\n"
    << "property double x\nproperty double y\nproperty double z\n"
    << "end_header\n";
  for (int i = 0; i < c.size(); ++i)
    f << format_double(c.points(i, 0)) << ' ' << format_double(c.points(i, 1))
      << ' ' << format_double(c.points(i, 2)) << '\n';
}

cloud::PointCloud read_ply(const std::filesystem::path& path) {
  auto f = open_in(path);
  std::string line;
  int count = -1;
  while (std::getline(f, line)) {
    if (line.rfind("element vertex", 0) == 0)
      count = std::stoi(line.substr(15));
    if (line == "end_header") break;
  }
  if (count < 0) throw std::runtime_error("bad PLY header: " + path.string());
  cloud::PointCloud c;
  c.points.resize(count, 3);
  for (int i = 0; i < count; ++i)
    f >> c.points(i, 0) >> c.points(i, 1) >> c.points(i, 2);
  if (!f) throw std::runtime_error("truncated PLY: " + path.string());
  return c;
}

void write_cloud_csv(const std::filesystem::path& path,
                     const cloud::PointCloud& c) {
  auto f = open_out(path);
  f << "x,y,z\n";
  for (int i = 0; i < c.size(); ++i)
    f << format_double(c.points(i, 0)) << ',' << format_double(c.points(i, 1))
      << ',' << format_double(c.points(i, 2)) << '\n';
}

cloud::PointCloud read_cloud_csv(const std::filesystem::path& path) {
  auto f = open_in(path);
  std::string line;
  std::getline(f, line);  // header
  std::vector<geom3::Vec3> pts;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    geom3::Vec3 p;
    char comma;
    ss >> p.x() >> comma >> p.y() >> comma >> p.z();
    pts.push_back(p);
  }
  cloud::PointCloud c;
  c.points.resize(pts.size(), 3);
  for (size_t i = 0; i < pts.size(); ++i) c.points.row(i) = pts[i];
  return c;
}

void write_labels_csv(const std::filesystem::path& path,
                      const labels::LabelSet& ls) {
  auto f = open_out(path);
  f << "joint_label,anchor_label\n";
  for (size_t i = 0; i < ls.joint_label.size(); ++i)
    f << ls.joint_label[i] << ',' << ls.anchor_label[i] << '\n';
}

labels::LabelSet read_labels_csv(const std::filesystem::path& path) {
  auto f = open_in(path);
  std::string line;
  std::getline(f, line);
  labels::LabelSet ls;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    int jl, al;
    char comma;
    ss >> jl >> comma >> al;
    ls.joint_label.push_back(jl);
    ls.anchor_label.push_back(al);
  }
  return ls;
}

json template_to_json(const body::BodyTemplate& t) {
  json j;
  j["version"] = 1;
  j["j_tem"] = matrix_rows(t.j_tem);
  j["a_tem"] = matrix_rows(t.a_tem);
  j["surface"] = matrix_rows(t.surface);
  j["surface_joint"] = t.surface_joint;
  j["anchor_joint"] = t.anchor_joint;
  j["anchor_vertex"] = t.anchor_vertex;
  return j;
}

body::BodyTemplate template_from_json(const json& j) {
  if (j.at("version").get<int>() != 1)
    throw std::runtime_error("unsupported template version");
  body::BodyTemplate t;
  t.j_tem = matrix_from(j.at("j_tem"), 3);
  t.a_tem = matrix_from(j.at("a_tem"), 3);
  t.surface = matrix_from(j.at("surface"), 3);
  t.surface_joint = j.at("surface_joint").get<std::vector<int>>();
  const auto aj = j.at("anchor_joint").get<std::vector<int>>();
  const auto av = j.at("anchor_vertex").get<std::vector<int>>();
  std::copy(aj.begin(), aj.end(), t.anchor_joint.begin());
  std::copy(av.begin(), av.end(), t.anchor_vertex.begin());
  return t;
}

json sparkle_to_json(const rep::Sparkle& s) {
  json j;
  j["joints"] = matrix_rows(s.joints);
  j["anchors"] = matrix_rows(s.anchors);
  j["trans"] = vec3_json(s.trans);
  j["global_rot"] = mat3_json(s.global_rot);
  j["joint_conf"] = s.joint_conf;
  j["anchor_conf"] = s.anchor_conf;
  return j;
}

rep::Sparkle sparkle_from_json(const json& j) {
  rep::Sparkle s;
  s.joints = matrix_from(j.at("joints"), 3);
  s.anchors = matrix_from(j.at("anchors"), 3);
  s.trans = vec3_from(j.at("trans"));
  s.global_rot = mat3_from(j.at("global_rot"));
  const auto jc = j.at("joint_conf").get<std::vector<double>>();
  const auto ac = j.at("anchor_conf").get<std::vector<double>>();
  std::copy(jc.begin(), jc.end(), s.joint_conf.begin());
  std::copy(ac.begin(), ac.end(), s.anchor_conf.begin());
  return s;
}

json j2a_to_json(const rep::J2AMapping& m) {
  json j;
  j["w"] = matrix_rows(m.w);
  j["residual"] = m.residual;
  j["frames"] = m.frames;
  return j;
}

rep::J2AMapping j2a_from_json(const json& j) {
  rep::J2AMapping m;
  m.w = matrix_from(j.at("w"), body::kNumJoints);
  m.residual = j.at("residual").get<double>();
  m.frames = j.at("frames").get<int>();
  return m;
}

json pose_to_json(const body::Pose& p) {
  json j;
  json theta = json::array();
  for (const auto& rv : p.theta) theta.push_back(vec3_json(rv));
  j["theta"] = theta;
  j["beta"] = std::vector<double>(p.beta.data(), p.beta.data() + 10);
  j["trans"] = vec3_json(p.trans);
  return j;
}

body::Pose pose_from_json(const json& j) {
  body::Pose p;
  for (int i = 0; i < body::kNumJoints; ++i)
    p.theta[i] = vec3_from(j.at("theta")[i]);
  const auto b = j.at("beta").get<std::vector<double>>();
  for (int i = 0; i < body::kNumShape; ++i) p.beta[i] = b[i];
  p.trans = vec3_from(j.at("trans"));
  return p;
}

json solve_result_to_json(const solver::SolveResult& r) {
  json j;
  j["pose"] = pose_to_json(r.pose);
  j["init_pose"] = pose_to_json(r.init_pose);
  j["final_cost"] = r.final_cost;
  j["iterations"] = r.iterations;
  j["degenerate_bones"] = r.degenerate_bones;
  json bones = json::array();
  for (const auto& st : r.per_bone) {
    json b;
    b["swing_axis"] = vec3_json(st.swing_axis);
    b["swing_angle"] = st.swing_angle;
    b["twist_axis"] = vec3_json(st.twist_axis);
    b["twist_angle"] = st.twist_angle;
    b["twist_confidence"] = st.twist_confidence;
    b["swing_degenerate"] = st.swing_degenerate;
    b["twist_degenerate"] = st.twist_degenerate;
    bones.push_back(b);
  }
  j["per_bone"] = bones;
  return j;
}

json eval_report_to_json(const metrics::EvalReport& r) {
  json j;
  j["j_err_l"] = r.j_err_l;
  j["v_err_l"] = r.v_err_l;
  j["j_err_g"] = r.j_err_g;
  j["v_err_g"] = r.v_err_g;
  j["ang_err"] = r.ang_err;
  j["j_err_l_series"] = r.j_err_l_series;
  j["v_err_l_series"] = r.v_err_l_series;
  j["j_err_g_series"] = r.j_err_g_series;
  j["v_err_g_series"] = r.v_err_g_series;
  j["ang_err_series"] = r.ang_err_series;
  return j;
}

std::string eval_report_to_csv(const metrics::EvalReport& r) {
  std::string out = "frame,j_err_l,v_err_l,j_err_g,v_err_g,ang_err\n";
  for (size_t f = 0; f < r.j_err_g_series.size(); ++f) {
    out += std::to_string(f) + ',' + format_double(r.j_err_l_series[f]) + ',' +
           format_double(r.v_err_l_series[f]) + ',' +
           format_double(r.j_err_g_series[f]) + ',' +
           format_double(r.v_err_g_series[f]) + ',' +
           format_double(r.ang_err_series[f]) + '\n';
  }
  out += "mean," + format_double(r.j_err_l) + ',' + format_double(r.v_err_l) +
         ',' + format_double(r.j_err_g) + ',' + format_double(r.v_err_g) + ',' +
         format_double(r.ang_err) + '\n';
  return out;
}

json mot_report_to_json(const track::MotReport& r) {
  json j;
  j["mota"] = r.mota;
  j["idf1"] = r.idf1;
  j["id_switches"] = r.id_switches;
  j["fp"] = r.fp;
  j["fn"] = r.fn;
  j["gt_total"] = r.gt_total;
  return j;
}

void write_tracks_csv(const std::filesystem::path& path,
                      const std::vector<track::FrameDetections>& frames) {
  auto f = open_out(path);
  f << "frame,id,x,y,z\n";
  for (size_t t = 0; t < frames.size(); ++t)
    for (const auto& [id, pos] : frames[t])
      f << t << ',' << id << ',' << format_double(pos.x()) << ','
        << format_double(pos.y()) << ',' << format_double(pos.z()) << '\n';
}

std::vector<track::FrameDetections> read_tracks_csv(
    const std::filesystem::path& path) {
  auto f = open_in(path);
  std::string line;
  std::getline(f, line);
  std::vector<track::FrameDetections> frames;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    int frame, id;
    geom3::Vec3 p;
    char c;
    ss >> frame >> c >> id >> c >> p.x() >> c >> p.y() >> c >> p.z();
    if (frame >= static_cast<int>(frames.size())) frames.resize(frame + 1);
    frames[frame].emplace_back(id, p);
  }
  return frames;
}

void write_json(const std::filesystem::path& path, const json& j) {
  auto f = open_out(path);
  f << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  auto f = open_in(path);
  return json::parse(f);
}

std::string file_hash(const std::filesystem::path& path) {
  auto f = open_in(path);
  uint64_t h = 1469598103934665603ull;
  char buf[4096];
  while (f.read(buf, sizeof buf) || f.gcount() > 0) {
    for (std::streamsize i = 0; i < f.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!f) break;
  }
  char out[17];
  snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

}  // namespace sparkle::io
