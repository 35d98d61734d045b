#include "viewcal/render.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "viewcal/error.hpp"

namespace viewcal::render {

void Intrinsics::validate() const {
  if (!(focal > 0.0)) throw InvalidInput("focal length must be positive");
  if (width < 1 || height < 1) throw InvalidInput("image size must be at least 1x1");
}

void RenderConfig::validate() const {
  if (n_samples < 1) throw InvalidInput("n_samples must be at least 1");
  if (!(near > 0.0) || !(near < far)) throw InvalidInput("render bounds need 0 < near < far");
  if ((background.array() < 0.0).any() || (background.array() > 1.0).any()) {
    throw InvalidInput("background color must lie in [0, 1]");
  }
}

Ray generate_ray(const geometry::Pose& pose, const Intrinsics& intr, int u, int v) {
  const Vec3 local((u + 0.5 - intr.cx()) / intr.focal, -(v + 0.5 - intr.cy()) / intr.focal, -1.0);
  return {pose.position(), (pose.rotation() * local).normalized()};
}

std::vector<Ray> generate_rays(const geometry::Pose& pose, const Intrinsics& intr) {
  intr.validate();
  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(intr.width) * static_cast<std::size_t>(intr.height));
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) rays.push_back(generate_ray(pose, intr, u, v));
  }
  return rays;
}

std::vector<double> transmittance(std::span<const double> sigmas, std::span<const double> deltas) {
  if (sigmas.size() != deltas.size()) throw InvalidInput("sigma and delta counts differ");
  std::vector<double> t(sigmas.size() + 1);
  t[0] = 1.0;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    t[i + 1] = t[i] * std::exp(-sigmas[i] * deltas[i]);
  }
  return t;
}

Vec3 composite(std::span<const Vec3> colors, std::span<const double> sigmas,
               std::span<const double> deltas, const Vec3& background) {
  if (colors.size() != sigmas.size() || sigmas.size() != deltas.size()) {
    throw InvalidInput("composite needs equal numbers of colors, densities and spacings");
  }
  Vec3 out = Vec3::Zero();
  double trans = 1.0;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (sigmas[i] < 0.0 || !std::isfinite(sigmas[i])) {
      throw InvalidInput("negative or non-finite density at sample " + std::to_string(i));
    }
    if (!(deltas[i] > 0.0)) throw InvalidInput("sample spacing must be positive");
    const double alpha = -std::expm1(-sigmas[i] * deltas[i]);
    out += trans * alpha * colors[i];
    trans *= 1.0 - alpha;
  }
  return out + trans * background;
}

void sample_depths(const RenderConfig& cfg, CounterRng* jitter, std::vector<double>& depths,
                   std::vector<double>& deltas) {
  const int n = cfg.n_samples;
  const double bin = (cfg.far - cfg.near) / n;
  depths.resize(static_cast<std::size_t>(n));
  deltas.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double offset = jitter != nullptr ? jitter->uniform() : 0.5;
    depths[static_cast<std::size_t>(i)] = cfg.near + (i + offset) * bin;
  }
  for (int i = 0; i + 1 < n; ++i) {
    deltas[static_cast<std::size_t>(i)] =
        depths[static_cast<std::size_t>(i + 1)] - depths[static_cast<std::size_t>(i)];
  }
  deltas.back() = cfg.far - depths.back();
  // A stratified draw can land exactly on far; keep the spacing positive.
  if (!(deltas.back() > 0.0)) deltas.back() = std::numeric_limits<double>::min();
}

ImageGrid render(const RadianceField& field, const geometry::Pose& pose, const Intrinsics& intr,
                 const RenderConfig& cfg, std::uint64_t seed) {
  intr.validate();
  cfg.validate();
  ImageGrid image(intr.width, intr.height);
  const auto n = static_cast<std::size_t>(cfg.n_samples);
  std::vector<double> depths, deltas, sigmas(n);
  std::vector<Vec3> colors(n);

  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      const Ray ray = generate_ray(pose, intr, u, v);
      const auto pixel = static_cast<std::uint64_t>(v) * static_cast<std::uint64_t>(intr.width) +
                         static_cast<std::uint64_t>(u);
      if (cfg.stratified) {
        CounterRng jitter(CounterRng::derive(seed, pixel));
        sample_depths(cfg, &jitter, depths, deltas);
      } else {
        sample_depths(cfg, nullptr, depths, deltas);
      }
      for (std::size_t i = 0; i < n; ++i) {
        const FieldSample s = field.query(ray.origin + depths[i] * ray.direction, ray.direction);
        colors[i] = s.color;
        sigmas[i] = s.sigma;
      }
      const Vec3 c = composite(colors, sigmas, deltas, cfg.background);
      for (int ch = 0; ch < ImageGrid::kChannels; ++ch) image.at(u, v, ch) = std::clamp(c[ch], 0.0, 1.0);
    }
  }
  return image;
}

double photometric_loss(std::span<const ImageGrid> rendered, std::span<const ImageGrid> real) {
  if (rendered.size() != real.size()) {
    throw InvalidInput("photometric loss needs as many rendered as real images");
  }
  if (rendered.empty()) throw InvalidInput("photometric loss over an empty image list");
  double total = 0.0;
  for (std::size_t k = 0; k < rendered.size(); ++k) {
    const ImageGrid& a = rendered[k];
    const ImageGrid& b = real[k];
    if (a.width() != b.width() || a.height() != b.height()) {
      throw InvalidInput("image " + std::to_string(k) + " dimensions differ");
    }
    double sum = 0.0;
    const auto da = a.data();
    const auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) {
      const double d = da[i] - db[i];
      sum += d * d;
    }
    total += sum;
  }
  return total / static_cast<double>(rendered.size());
}

}  // namespace viewcal::render
