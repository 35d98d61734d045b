#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "viewcal/geometry.hpp"
#include "viewcal/image.hpp"

namespace viewcal::render {

using geometry::Vec3;

/// Pinhole camera; the principal point is the image center.
struct Intrinsics {
  double focal = 64.0;
  int width = 64;
  int height = 64;

  double cx() const noexcept { return 0.5 * width; }
  double cy() const noexcept { return 0.5 * height; }
  void validate() const;
};

struct Ray {
  Vec3 origin;
  Vec3 direction;  ///< unit length
};

struct RenderConfig {
  int n_samples = 64;
  double near = 1.0;
  double far = 8.0;
  bool stratified = false;
  Vec3 background = Vec3::Ones();

  void validate() const;
};

struct FieldSample {
  Vec3 color = Vec3::Zero();  ///< RGB in [0, 1]
  double sigma = 0.0;         ///< density, >= 0
};

/// Scene function (x, d) -> (c, sigma). Implementations must be free of side effects.
class RadianceField {
 public:
  virtual ~RadianceField() = default;
  virtual FieldSample query(const Vec3& x, const Vec3& d) const = 0;
};

/// Field with no density anywhere.
class EmptyField final : public RadianceField {
 public:
  FieldSample query(const Vec3&, const Vec3&) const override { return {}; }
};

/// Ray for pixel (u, v): origin at the camera center, direction
/// normalize(R * ((u + 0.5 - cx) / f, -(v + 0.5 - cy) / f, -1)). Row-major pixel order.
std::vector<Ray> generate_rays(const geometry::Pose& pose, const Intrinsics& intr);
Ray generate_ray(const geometry::Pose& pose, const Intrinsics& intr, int u, int v);

/// T_1 .. T_{N+1} with T_i = prod_{j<i} (1 - alpha_j) and alpha_j = 1 - exp(-sigma_j delta_j).
std::vector<double> transmittance(std::span<const double> sigmas, std::span<const double> deltas);

/// sum_i T_i alpha_i c_i + T_{N+1} * background.
/// Throws InvalidInput on mismatched lengths, negative sigma or non-positive delta.
Vec3 composite(std::span<const Vec3> colors, std::span<const double> sigmas,
               std::span<const double> deltas, const Vec3& background);

/// Sample depths along one ray: midpoints of N equal bins over [near, far], or one uniform
/// draw per bin when stratified. Matching deltas use the next depth, and far for the last one.
void sample_depths(const RenderConfig& cfg, CounterRng* jitter, std::vector<double>& depths,
                   std::vector<double>& deltas);

/// Volume-renders the field. Stratified jitter for pixel k draws from CounterRng::derive(seed, k),
/// so the image does not depend on evaluation order.
ImageGrid render(const RadianceField& field, const geometry::Pose& pose, const Intrinsics& intr,
                 const RenderConfig& cfg, std::uint64_t seed = 0);

/// (1/n) sum_i ||I_i - R_i||^2 over all pixels and channels.
double photometric_loss(std::span<const ImageGrid> rendered, std::span<const ImageGrid> real);

}  // namespace viewcal::render
