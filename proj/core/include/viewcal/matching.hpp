#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "viewcal/image.hpp"
#include "viewcal/ot.hpp"

namespace viewcal::matching {

/// Pixel coordinate (continuous; pixel (i, j) covers [i, i+1) x [j, j+1)).
struct Anchor {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Anchor&) const = default;
};

/// l feature vectors of dimension d, one per grid cell, with the cell centers as anchors.
class FeatureSet {
 public:
  /// `vectors` is l x d (one feature per row). Anchors must lie inside [0, width] x [0, height].
  FeatureSet(Eigen::MatrixXd vectors, std::vector<Anchor> anchors, int image_width,
             int image_height);

  Eigen::Index count() const noexcept { return vectors_.rows(); }
  Eigen::Index dim() const noexcept { return vectors_.cols(); }
  const Eigen::MatrixXd& vectors() const noexcept { return vectors_; }
  const std::vector<Anchor>& anchors() const noexcept { return anchors_; }
  int image_width() const noexcept { return image_width_; }
  int image_height() const noexcept { return image_height_; }

  /// True when every row has unit L2 norm within `tol`.
  bool is_normalized(double tol = 1e-9) const;

  bool operator==(const FeatureSet&) const = default;

 private:
  Eigen::MatrixXd vectors_;
  std::vector<Anchor> anchors_;
  int image_width_;
  int image_height_;
};

/// Samples per side of the resampled cell patch.
inline constexpr int kPatchResolution = 8;
/// Raw descriptor length before truncation/padding: luminance, |dx|, |dy|, brightness bias.
inline constexpr int kRawDescriptorLength =
    kPatchResolution * kPatchResolution + 2 * kPatchResolution * (kPatchResolution - 1) + 1;

/// Offsets of the descriptor blocks.
inline constexpr int kLuminanceOffset = 0;
inline constexpr int kGradXOffset = kPatchResolution * kPatchResolution;
inline constexpr int kGradYOffset = kGradXOffset + kPatchResolution * (kPatchResolution - 1);
inline constexpr int kBiasOffset = kGradYOffset + kPatchResolution * (kPatchResolution - 1);

/// Deterministic patch descriptor over a grid x grid partition of the image.
///
/// Per cell (row-major cell order): bilinearly resampled luminance on a kPatchResolution^2
/// lattice, absolute horizontal and vertical differences of that patch, and one constant
/// brightness-bias entry, truncated or zero-padded to `dim` and unit-normalized.
FeatureSet extract_features(const ImageGrid& image, int grid, int dim);

/// M_ij = 1 - cos(f_i^s, f_j^t), evaluated as |a - b|^2 / 2 on normalized rows so identical
/// rows give exactly zero. Entries are clamped to [0, 2].
ot::CostMatrix cosine_cost(const FeatureSet& source, const FeatureSet& target);

/// Uniform 1/l feature masses.
ot::MassVector uniform_masses(Eigen::Index l);

struct MatchLink {
  Eigen::Index row = 0;  ///< source feature index
  Eigen::Index col = 0;  ///< target feature index
  Anchor source;
  Anchor target;
  double weight = 0.0;
};

/// The k largest plan entries, weight descending, ties by (row, col) ascending.
/// k is clamped to the number of plan entries.
std::vector<MatchLink> top_matches(const ot::TransportPlan& plan, const FeatureSet& source,
                                   const FeatureSet& target, std::size_t k);

}  // namespace viewcal::matching
