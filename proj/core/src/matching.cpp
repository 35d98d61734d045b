#include "viewcal/matching.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "viewcal/error.hpp"

namespace viewcal::matching {

namespace {

// Same norm as the luminance block of a constant mid-gray patch, so brightness is kept
// after normalization and an all-black cell still has a direction.
constexpr double kBrightnessBias = 0.5 * kPatchResolution;

double bilinear_luminance(const ImageGrid& image, double px, double py) {
  const double x = std::clamp(px, 0.0, static_cast<double>(image.width() - 1));
  const double y = std::clamp(py, 0.0, static_cast<double>(image.height() - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, image.width() - 1);
  const int y1 = std::min(y0 + 1, image.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1.0 - fx) * image.luminance(x0, y0) + fx * image.luminance(x1, y0);
  const double bottom = (1.0 - fx) * image.luminance(x0, y1) + fx * image.luminance(x1, y1);
  return (1.0 - fy) * top + fy * bottom;
}

}  // namespace

FeatureSet::FeatureSet(Eigen::MatrixXd vectors, std::vector<Anchor> anchors, int image_width,
                       int image_height)
    : vectors_(std::move(vectors)),
      anchors_(std::move(anchors)),
      image_width_(image_width),
      image_height_(image_height) {
  if (vectors_.rows() == 0 || vectors_.cols() == 0) throw InvalidInput("empty feature set");
  if (static_cast<Eigen::Index>(anchors_.size()) != vectors_.rows()) {
    throw InvalidInput("feature set needs one anchor per vector");
  }
  if (!vectors_.allFinite()) throw InvalidInput("feature vector has a non-finite entry");
  for (const Anchor& a : anchors_) {
    if (a.x < 0.0 || a.y < 0.0 || a.x > image_width_ || a.y > image_height_) {
      throw InvalidInput("feature anchor outside the image");
    }
  }
}

bool FeatureSet::is_normalized(double tol) const {
  for (Eigen::Index i = 0; i < vectors_.rows(); ++i) {
    if (std::abs(vectors_.row(i).norm() - 1.0) > tol) return false;
  }
  return true;
}

FeatureSet extract_features(const ImageGrid& image, int grid, int dim) {
  if (grid <= 0 || dim <= 0) throw InvalidInput("grid and dim must be positive");
  if (image.width() < grid || image.height() < grid) {
    throw InvalidInput("image " + std::to_string(image.width()) + "x" +
                       std::to_string(image.height()) + " is smaller than the " +
                       std::to_string(grid) + "x" + std::to_string(grid) + " feature grid");
  }
  constexpr int r = kPatchResolution;
  const double cell_w = static_cast<double>(image.width()) / grid;
  const double cell_h = static_cast<double>(image.height()) / grid;
  const Eigen::Index l = static_cast<Eigen::Index>(grid) * grid;

  Eigen::MatrixXd vectors = Eigen::MatrixXd::Zero(l, dim);
  std::vector<Anchor> anchors;
  anchors.reserve(static_cast<std::size_t>(l));
  std::array<double, r * r> patch{};
  std::array<double, kRawDescriptorLength> raw{};

  for (int cy = 0; cy < grid; ++cy) {
    for (int cx = 0; cx < grid; ++cx) {
      const double x0 = cx * cell_w;
      const double y0 = cy * cell_h;
      for (int ky = 0; ky < r; ++ky) {
        for (int kx = 0; kx < r; ++kx) {
          // Lattice point in continuous coordinates, shifted to pixel-index space.
          const double px = x0 + (kx + 0.5) * cell_w / r - 0.5;
          const double py = y0 + (ky + 0.5) * cell_h / r - 0.5;
          patch[ky * r + kx] = bilinear_luminance(image, px, py);
        }
      }
      std::copy(patch.begin(), patch.end(), raw.begin() + kLuminanceOffset);
      for (int ky = 0; ky < r; ++ky) {
        for (int kx = 0; kx + 1 < r; ++kx) {
          raw[kGradXOffset + ky * (r - 1) + kx] = std::abs(patch[ky * r + kx + 1] - patch[ky * r + kx]);
        }
      }
      for (int ky = 0; ky + 1 < r; ++ky) {
        for (int kx = 0; kx < r; ++kx) {
          raw[kGradYOffset + ky * r + kx] = std::abs(patch[(ky + 1) * r + kx] - patch[ky * r + kx]);
        }
      }
      raw[kBiasOffset] = kBrightnessBias;

      const Eigen::Index row = static_cast<Eigen::Index>(cy) * grid + cx;
      const int kept = std::min(dim, kRawDescriptorLength);
      for (int k = 0; k < kept; ++k) vectors(row, k) = raw[k];
      double norm = vectors.row(row).norm();
      if (norm == 0.0) {
        // Only reachable when dim truncates into an all-dark luminance block.
        vectors.row(row).setOnes();
        norm = vectors.row(row).norm();
      }
      vectors.row(row) /= norm;
      anchors.push_back({x0 + 0.5 * cell_w, y0 + 0.5 * cell_h});
    }
  }
  return FeatureSet(std::move(vectors), std::move(anchors), image.width(), image.height());
}

ot::CostMatrix cosine_cost(const FeatureSet& source, const FeatureSet& target) {
  if (source.dim() != target.dim()) {
    throw InvalidInput("feature dimensions differ: " + std::to_string(source.dim()) + " vs " +
                       std::to_string(target.dim()));
  }
  if (source.count() != target.count()) {
    throw InvalidInput("feature counts differ: " + std::to_string(source.count()) + " vs " +
                       std::to_string(target.count()));
  }
  auto normalized = [](const Eigen::MatrixXd& v, const char* which) {
    Eigen::MatrixXd out = v;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const double n = out.row(i).norm();
      if (n == 0.0) {
        throw InvalidInput(std::string(which) + " feature " + std::to_string(i) +
                           " has zero norm; cosine cost is undefined");
      }
      out.row(i) /= n;
    }
    return out;
  };
  const Eigen::MatrixXd a = normalized(source.vectors(), "source");
  const Eigen::MatrixXd b = normalized(target.vectors(), "target");

  Eigen::MatrixXd m(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      m(i, j) = std::clamp(0.5 * (a.row(i) - b.row(j)).squaredNorm(), 0.0, 2.0);
    }
  }
  return ot::CostMatrix(std::move(m));
}

ot::MassVector uniform_masses(Eigen::Index l) { return ot::MassVector::uniform(l); }

std::vector<MatchLink> top_matches(const ot::TransportPlan& plan, const FeatureSet& source,
                                   const FeatureSet& target, std::size_t k) {
  if (plan.rows() != source.count() || plan.cols() != target.count()) {
    throw InvalidInput("plan shape does not match the feature sets");
  }
  const auto rows = static_cast<std::size_t>(plan.rows());
  const auto total = rows * static_cast<std::size_t>(plan.cols());
  k = std::min(k, total);

  // Flat index in row-major order, so ascending index is (row, col) ascending.
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto weight = [&](std::size_t idx) {
    return plan(static_cast<Eigen::Index>(idx / plan.cols()),
                static_cast<Eigen::Index>(idx % plan.cols()));
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double wa = weight(a);
                      const double wb = weight(b);
                      if (wa != wb) return wa > wb;
                      return a < b;
                    });

  std::vector<MatchLink> links;
  links.reserve(k);
  for (std::size_t n = 0; n < k; ++n) {
    const auto row = static_cast<Eigen::Index>(order[n] / plan.cols());
    const auto col = static_cast<Eigen::Index>(order[n] % plan.cols());
    links.push_back({row, col, source.anchors()[static_cast<std::size_t>(row)],
                     target.anchors()[static_cast<std::size_t>(col)], plan(row, col)});
  }
  return links;
}

}  // namespace viewcal::matching
