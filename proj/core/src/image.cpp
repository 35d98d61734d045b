#include "viewcal/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "viewcal/error.hpp"

namespace viewcal {

namespace {

unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string token;
  while (in) {
    const int c = in.get();
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    if (c == EOF) break;
    token.push_back(static_cast<char>(c));
  }
  return token;
}

}  // namespace

ImageGrid::ImageGrid(int width, int height)
    : ImageGrid(width, height,
                std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) *
                                    static_cast<std::size_t>(std::max(height, 0)) * kChannels)) {}

ImageGrid::ImageGrid(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width <= 0 || height <= 0) throw InvalidInput("image dimensions must be positive");
  if (data_.size() != pixel_count() * kChannels) {
    throw InvalidInput("image data length " + std::to_string(data_.size()) + " does not match " +
                       std::to_string(width) + "x" + std::to_string(height) + "x3");
  }
  for (double v : data_) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("image value outside [0, 1]");
  }
}

void write_ppm(const std::filesystem::path& path, const ImageGrid& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
  std::vector<unsigned char> bytes(image.data().size());
  std::transform(image.data().begin(), image.data().end(), bytes.begin(), to_byte);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

ImageGrid read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  if (header_token(in) != "P6") throw IoError(path.string() + ": not a binary PPM (P6)");
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(header_token(in));
    height = std::stoi(header_token(in));
    maxval = std::stoi(header_token(in));
  } catch (const std::exception&) {
    throw IoError(path.string() + ": malformed PPM header");
  }
  if (maxval != 255) throw IoError(path.string() + ": only maxval 255 is supported");
  if (width <= 0 || height <= 0) throw IoError(path.string() + ": bad dimensions");
  std::vector<unsigned char> bytes(static_cast<std::size_t>(width) * height * 3);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw IoError(path.string() + ": truncated pixel data");
  }
  std::vector<double> data(bytes.size());
  std::transform(bytes.begin(), bytes.end(), data.begin(),
                 [](unsigned char b) { return static_cast<double>(b) / 255.0; });
  return ImageGrid(width, height, std::move(data));
}

ImageGrid quantize8(const ImageGrid& image) {
  std::vector<double> data(image.data().size());
  std::transform(image.data().begin(), image.data().end(), data.begin(),
                 [](double v) { return static_cast<double>(to_byte(v)) / 255.0; });
  return ImageGrid(image.width(), image.height(), std::move(data));
}

}  // namespace viewcal
