#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>

#include "sparkle/body.hpp"
#include "sparkle/cloud.hpp"
#include "sparkle/labels.hpp"
#include "sparkle/metrics.hpp"
#include "sparkle/representation.hpp"
#include "sparkle/solver.hpp"
#include "sparkle/track.hpp"

// File formats: ASCII PLY / CSV point clouds, label CSV, JSON documents
// for templates, Sparkles, mappings, solve results and reports. All
// numeric output is locale-independent ('.' decimal) and byte-stable.
namespace sparkle::io {

using nlohmann::json;

// Shortest round-trip decimal representation; deterministic.
std::string format_double(double v);

void write_ply(const std::filesystem::path& path, const cloud::PointCloud& c);
cloud::PointCloud read_ply(const std::filesystem::path& path);

void write_cloud_csv(const std::filesystem::path& path,
                     const cloud::PointCloud& c);
cloud::PointCloud read_cloud_csv(const std::filesystem::path& path);

void write_labels_csv(const std::filesystem::path& path,
                      const labels::LabelSet& ls);
labels::LabelSet read_labels_csv(const std::filesystem::path& path);

json template_to_json(const body::BodyTemplate& t);
body::BodyTemplate template_from_json(const json& j);

json sparkle_to_json(const rep::Sparkle& s);
rep::Sparkle sparkle_from_json(const json& j);

json j2a_to_json(const rep::J2AMapping& m);
rep::J2AMapping j2a_from_json(const json& j);

json pose_to_json(const body::Pose& p);
body::Pose pose_from_json(const json& j);

json solve_result_to_json(const solver::SolveResult& r);

json eval_report_to_json(const metrics::EvalReport& r);
std::string eval_report_to_csv(const metrics::EvalReport& r);

json mot_report_to_json(const track::MotReport& r);

// Tracks CSV: header "frame,id,x,y,z".
void write_tracks_csv(const std::filesystem::path& path,
                      const std::vector<track::FrameDetections>& frames);
std::vector<track::FrameDetections> read_tracks_csv(
    const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

// FNV-1a content hash of a file, hex encoded.
std::string file_hash(const std::filesystem::path& path);

}  // namespace sparkle::io
