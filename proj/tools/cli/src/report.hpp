#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "viewcal/calib.hpp"
#include "viewcal/serialization.hpp"

namespace viewcal::cli {

struct PoseEntry {
  int id = 0;
  geometry::Pose pose;
  std::string image;  ///< relative to the manifest, empty for pose-only files
};

struct PoseManifest {
  io::RunMetadata meta;
  std::vector<PoseEntry> entries;
};

nlohmann::json manifest_json(const PoseManifest& manifest);
/// Throws InvalidInput on malformed content and IoError when the file cannot be read.
PoseManifest read_manifest(const std::filesystem::path& path);

/// Evaluation of index-aligned estimates against truths, optionally with the starting poses.
struct ErrorReport {
  io::RunMetadata meta;
  std::vector<int> ids;
  std::optional<calib::PoseErrorSummary> initial;
  calib::PoseErrorSummary final;
};

/// Checks ids pairwise and fails with InvalidInput on the first mismatch.
void require_same_ids(const PoseManifest& a, const PoseManifest& b, const std::string& what);
ErrorReport evaluate_manifests(const PoseManifest& estimates, const PoseManifest& truths,
                               const PoseManifest* initial, const io::RunMetadata& meta);

nlohmann::json report_json(const ErrorReport& report);
/// Header "id,rot_init_deg,trans_init,rot_final_deg,trans_final"; init columns stay empty
/// without starting poses.
std::string report_csv(const ErrorReport& report);

/// Pretty JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
void write_text(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace viewcal::cli
