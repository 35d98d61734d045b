#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace viewcal {

/// Row-major RGB image with channel values in [0, 1].
class ImageGrid {
 public:
  static constexpr int kChannels = 3;

  ImageGrid(int width, int height);
  ImageGrid(int width, int height, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  double& at(int x, int y, int c) { return data_[index(x, y, c)]; }
  double at(int x, int y, int c) const { return data_[index(x, y, c)]; }

  /// Rec. 601 luma.
  double luminance(int x, int y) const {
    return 0.299 * at(x, y, 0) + 0.587 * at(x, y, 1) + 0.114 * at(x, y, 2);
  }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  bool operator==(const ImageGrid&) const = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * kChannels + static_cast<std::size_t>(c);
  }

  int width_;
  int height_;
  std::vector<double> data_;
};

/// Binary PPM (P6, maxval 255). Values are quantized with round(v * 255) on write and
/// mapped back with v / 255 on read.
void write_ppm(const std::filesystem::path& path, const ImageGrid& image);
ImageGrid read_ppm(const std::filesystem::path& path);

/// Quantize to the 8-bit grid a PPM round trip would produce.
ImageGrid quantize8(const ImageGrid& image);

}  // namespace viewcal
