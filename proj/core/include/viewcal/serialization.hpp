#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "viewcal/geometry.hpp"
#include "viewcal/regressor.hpp"
#include "viewcal/voxel_field.hpp"

namespace viewcal::io {

/// Provenance stamped into every emitted header.
struct RunMetadata {
  std::string config_hash;
  std::uint64_t seed = 0;
};

/// 64-bit FNV-1a of `text`, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view text);

// Binary containers share one layout: a single-line JSON header terminated by '\n', then a
// flat payload of little-endian IEEE-754 float64 values whose order the header describes.

/// Header keys: format "viewcal-voxels", version, resolution, box_min, box_max, layout,
/// config_hash, seed. Payload: per voxel (x fastest) sigma, r, g, b.
void write_voxel_field(const std::filesystem::path& path, const render::VoxelField& field,
                       const RunMetadata& meta);
render::VoxelField read_voxel_field(const std::filesystem::path& path);

struct RegressorCheckpoint {
  calib::Regressor regressor;
  std::uint64_t seed = 0;
  long step = 0;
};

/// Header keys: format "viewcal-regressor", version, dims [input, hidden, 6], seed, step,
/// config_hash. Payload: Regressor::parameters().
void write_regressor(const std::filesystem::path& path, const RegressorCheckpoint& ckpt,
                     const RunMetadata& meta);
RegressorCheckpoint read_regressor(const std::filesystem::path& path);

/// JSON array of the 16 row-major matrix entries.
std::string pose_to_json(const geometry::Pose& pose);
geometry::Pose pose_from_json(std::string_view json);

}  // namespace viewcal::io
