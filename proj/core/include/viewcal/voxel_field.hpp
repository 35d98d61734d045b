#pragma once

#include <array>
#include <vector>

#include "viewcal/render.hpp"

namespace viewcal::render {

/// Regular grid of cell-centered (RGB, sigma) samples over an axis-aligned box.
///
/// Queries interpolate trilinearly between cell centers (clamped at the border cells).
/// Color is interpolated density-weighted, so empty neighbours do not darken an edge.
/// Points outside the box have zero density. The view direction is ignored.
class VoxelField final : public RadianceField {
 public:
  using Index3 = std::array<int, 3>;

  VoxelField(Index3 resolution, Vec3 box_min, Vec3 box_max);

  const Index3& resolution() const noexcept { return resolution_; }
  const Vec3& box_min() const noexcept { return box_min_; }
  const Vec3& box_max() const noexcept { return box_max_; }
  Vec3 cell_size() const;
  std::size_t voxel_count() const noexcept { return sigma_.size(); }

  /// Flat index, x fastest.
  std::size_t index(int ix, int iy, int iz) const;
  Vec3 cell_center(int ix, int iy, int iz) const;

  double sigma(int ix, int iy, int iz) const { return sigma_[index(ix, iy, iz)]; }
  Vec3 color(int ix, int iy, int iz) const;
  /// Throws InvalidInput on negative sigma or color outside [0, 1].
  void set(int ix, int iy, int iz, const Vec3& color, double sigma);

  const std::vector<double>& sigmas() const noexcept { return sigma_; }
  /// Interleaved RGB per voxel.
  const std::vector<double>& colors() const noexcept { return rgb_; }

  FieldSample query(const Vec3& x, const Vec3& d) const override;

  bool operator==(const VoxelField& other) const {
    return resolution_ == other.resolution_ && box_min_ == other.box_min_ &&
           box_max_ == other.box_max_ && sigma_ == other.sigma_ && rgb_ == other.rgb_;
  }

 private:
  Index3 resolution_;
  Vec3 box_min_;
  Vec3 box_max_;
  std::vector<double> sigma_;
  std::vector<double> rgb_;
};

struct SpherePrimitive {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  Vec3 color = Vec3::Ones();
  double density = 10.0;
};

struct BoxPrimitive {
  Vec3 min = -Vec3::Ones();
  Vec3 max = Vec3::Ones();
  Vec3 color = Vec3::Ones();
  double density = 10.0;
};

struct SceneSpec {
  VoxelField::Index3 resolution{32, 32, 32};
  Vec3 box_min = Vec3::Constant(-1.5);
  Vec3 box_max = Vec3::Constant(1.5);
  std::vector<SpherePrimitive> spheres;
  std::vector<BoxPrimitive> boxes;
  /// Direction towards a distant light. When nonzero, voxel colors get baked Lambert shading
  /// ambient + (1 - ambient) * max(0, n . light) from the primitive's outward normal.
  Vec3 light = Vec3::Zero();
  double ambient = 0.3;
};

/// Voxelizes the primitives: a voxel takes the color and density of the last primitive
/// (spheres first, then boxes) that contains its center. Voxels outside every primitive are empty.
/// Throws InvalidInput on a non-positive sphere radius, a non-finite light or ambient outside [0, 1].
VoxelField build_voxel_field(const SceneSpec& spec);

}  // namespace viewcal::render
