#include "viewcal/voxel_field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "viewcal/error.hpp"

namespace viewcal::render {

VoxelField::VoxelField(Index3 resolution, Vec3 box_min, Vec3 box_max)
    : resolution_(resolution), box_min_(std::move(box_min)), box_max_(std::move(box_max)) {
  for (int k = 0; k < 3; ++k) {
    if (resolution_[static_cast<std::size_t>(k)] < 1) throw InvalidInput("voxel resolution must be >= 1");
    if (!(box_min_[k] < box_max_[k])) throw InvalidInput("voxel bounding box is empty");
  }
  const std::size_t n = static_cast<std::size_t>(resolution_[0]) * resolution_[1] * resolution_[2];
  sigma_.assign(n, 0.0);
  rgb_.assign(3 * n, 0.0);
}

Vec3 VoxelField::cell_size() const {
  return (box_max_ - box_min_).cwiseQuotient(
      Vec3(resolution_[0], resolution_[1], resolution_[2]));
}

std::size_t VoxelField::index(int ix, int iy, int iz) const {
  if (ix < 0 || iy < 0 || iz < 0 || ix >= resolution_[0] || iy >= resolution_[1] ||
      iz >= resolution_[2]) {
    throw InvalidInput("voxel index out of range");
  }
  return (static_cast<std::size_t>(iz) * resolution_[1] + static_cast<std::size_t>(iy)) *
             resolution_[0] + static_cast<std::size_t>(ix);
}

Vec3 VoxelField::cell_center(int ix, int iy, int iz) const {
  const Vec3 cell = cell_size();
  return box_min_ + Vec3((ix + 0.5) * cell[0], (iy + 0.5) * cell[1], (iz + 0.5) * cell[2]);
}

Vec3 VoxelField::color(int ix, int iy, int iz) const {
  const std::size_t i = 3 * index(ix, iy, iz);
  return {rgb_[i], rgb_[i + 1], rgb_[i + 2]};
}

void VoxelField::set(int ix, int iy, int iz, const Vec3& color, double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidInput("voxel density must be >= 0");
  if ((color.array() < 0.0).any() || (color.array() > 1.0).any()) {
    throw InvalidInput("voxel color must lie in [0, 1]");
  }
  const std::size_t i = index(ix, iy, iz);
  sigma_[i] = sigma;
  rgb_[3 * i] = color[0];
  rgb_[3 * i + 1] = color[1];
  rgb_[3 * i + 2] = color[2];
}

FieldSample VoxelField::query(const Vec3& x, const Vec3&) const {
  for (int k = 0; k < 3; ++k) {
    if (!(x[k] >= box_min_[k] && x[k] <= box_max_[k])) return {};
  }
  int lo[3];
  int hi[3];
  double frac[3];
  const Vec3 cell = cell_size();
  for (int k = 0; k < 3; ++k) {
    const int n = resolution_[static_cast<std::size_t>(k)];
    const double g = std::clamp((x[k] - box_min_[k]) / cell[k] - 0.5, 0.0, static_cast<double>(n - 1));
    lo[k] = std::min(static_cast<int>(g), n - 1);
    hi[k] = std::min(lo[k] + 1, n - 1);
    frac[k] = g - lo[k];
  }
  double sigma = 0.0;
  Vec3 weighted = Vec3::Zero();
  for (int corner = 0; corner < 8; ++corner) {
    const int ix = (corner & 1) ? hi[0] : lo[0];
    const int iy = (corner & 2) ? hi[1] : lo[1];
    const int iz = (corner & 4) ? hi[2] : lo[2];
    const double w = ((corner & 1) ? frac[0] : 1.0 - frac[0]) *
                     ((corner & 2) ? frac[1] : 1.0 - frac[1]) *
                     ((corner & 4) ? frac[2] : 1.0 - frac[2]);
    if (w == 0.0) continue;
    const std::size_t i = (static_cast<std::size_t>(iz) * resolution_[1] + static_cast<std::size_t>(iy)) *
                              resolution_[0] + static_cast<std::size_t>(ix);
    const double s = sigma_[i];
    if (s == 0.0) continue;
    sigma += w * s;
    weighted += (w * s) * Vec3(rgb_[3 * i], rgb_[3 * i + 1], rgb_[3 * i + 2]);
  }
  if (sigma <= 0.0) return {};
  return {(weighted / sigma).cwiseMax(0.0).cwiseMin(1.0), sigma};
}

VoxelField build_voxel_field(const SceneSpec& spec) {
  VoxelField field(spec.resolution, spec.box_min, spec.box_max);
  for (const SpherePrimitive& s : spec.spheres) {
    if (!(s.radius > 0.0)) throw InvalidInput("sphere radius must be positive");
  }
  const double light_norm = spec.light.norm();
  if (!std::isfinite(light_norm)) throw InvalidInput("light direction must be finite");
  if (!(spec.ambient >= 0.0 && spec.ambient <= 1.0)) throw InvalidInput("ambient must lie in [0, 1]");
  const auto shade = [&](const Vec3& color, const Vec3& outward) -> Vec3 {
    if (light_norm == 0.0) return color;
    const double n = outward.norm();
    const double lambert = n > 0.0 ? std::max(0.0, outward.dot(spec.light) / (n * light_norm)) : 1.0;
    return color * (spec.ambient + (1.0 - spec.ambient) * lambert);
  };
  for (int iz = 0; iz < spec.resolution[2]; ++iz) {
    for (int iy = 0; iy < spec.resolution[1]; ++iy) {
      for (int ix = 0; ix < spec.resolution[0]; ++ix) {
        const Vec3 p = field.cell_center(ix, iy, iz);
        for (const SpherePrimitive& s : spec.spheres) {
          if ((p - s.center).norm() < s.radius) {
            field.set(ix, iy, iz, shade(s.color, p - s.center), s.density);
          }
        }
        for (const BoxPrimitive& b : spec.boxes) {
          if ((p.array() >= b.min.array()).all() && (p.array() <= b.max.array()).all()) {
            // Face normal of the nearest face, in box-relative coordinates.
            const Vec3 half = 0.5 * (b.max - b.min);
            const Vec3 rel = (p - 0.5 * (b.max + b.min)).cwiseQuotient(half.cwiseMax(1e-12));
            Eigen::Index axis = 0;
            rel.cwiseAbs().maxCoeff(&axis);
            Vec3 normal = Vec3::Zero();
            normal[axis] = rel[axis] >= 0.0 ? 1.0 : -1.0;
            field.set(ix, iy, iz, shade(b.color, normal), b.density);
          }
        }
      }
    }
  }
  return field;
}

}  // namespace viewcal::render
