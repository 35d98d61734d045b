#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "viewcal/calib.hpp"
#include "viewcal/error.hpp"
#include "viewcal/voxel_field.hpp"

namespace viewcal::cli {

/// Malformed or invalid experiment configuration. The message names the file and either the
/// line/column of a syntax error or the dotted path of the offending field.
class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

enum class InitialPoses {
  kPerturb,  ///< ground truth moved by a bounded random rigid motion
  kSample,   ///< fresh draws from the pose distribution
};

struct CalibrationSettings {
  int views = 20;
  InitialPoses initial = InitialPoses::kPerturb;
  double initial_max_angle_deg = 20.0;
  double initial_max_translation = 0.5;
  bool refine = true;
  calib::RefineConfig refine_cfg;
};

/// Everything one experiment needs. A single JSON document fills it; missing keys take the
/// defaults below and unknown keys are rejected.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  render::SceneSpec scene;
  geometry::PoseDistribution pose_distribution;
  calib::ViewMatchConfig view;
  calib::TrainConfig training;
  CalibrationSettings calibration;
  /// Number of links written by the match command.
  int top_k = 32;

  /// Canonical JSON (sorted keys, defaults filled in). The output directory is left out so a
  /// rerun elsewhere keeps the same hash.
  std::string canonical() const;
  /// FNV-1a of canonical().
  std::string hash() const;
};

ExperimentConfig parse_config(std::string_view text, std::string_view source = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace viewcal::cli
