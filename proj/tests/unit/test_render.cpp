#include <cmath>
#include <vector>

#include "doctest.h"
#include "viewcal/error.hpp"
#include "viewcal/render.hpp"
#include "viewcal/voxel_field.hpp"

using namespace viewcal;
using namespace viewcal::render;
using geometry::Mat3;
using geometry::Pose;

namespace {

// Homogeneous white emitter filling z in [-2, -1], seen from the origin along -z.
class Slab final : public RadianceField {
 public:
  FieldSample query(const Vec3& x, const Vec3&) const override {
    if (x.z() <= -1.0 && x.z() >= -2.0) return {Vec3::Ones(), 1.0};
    return {};
  }
};

double slab_luminance(int n) {
  RenderConfig cfg;
  cfg.n_samples = n;
  cfg.near = 1.0;
  cfg.far = 2.0;
  cfg.background = Vec3::Zero();
  Intrinsics intr;
  intr.width = intr.height = 1;
  const ImageGrid img = render::render(Slab{}, Pose(), intr, cfg);
  return img.luminance(0, 0);
}

std::vector<Vec3> random_colors(CounterRng& rng, int n) {
  std::vector<Vec3> out;
  for (int i = 0; i < n; ++i) out.emplace_back(rng.uniform(), rng.uniform(), rng.uniform());
  return out;
}

}  // namespace

TEST_CASE("ray generation") {
  Intrinsics odd;
  odd.width = odd.height = 65;
  const Ray center = generate_ray(Pose(), odd, 32, 32);
  CHECK((center.direction - Vec3(0, 0, -1)).norm() < 1e-15);

  const Intrinsics intr;
  const auto rays = generate_rays(Pose(), intr);
  REQUIRE(rays.size() == 64u * 64u);
  for (const Ray& r : rays) {
    CHECK(r.origin == Vec3::Zero());
    CHECK(std::abs(r.direction.norm() - 1.0) < 1e-12);
  }
  // Row-major: index 1 is pixel (1, 0), index 64 is pixel (0, 1). +v goes down.
  CHECK(rays[1].direction.x() > rays[0].direction.x());
  CHECK(rays[64].direction.y() < rays[0].direction.y());
  // Pixel (0, 0): direction proportional to (-31.5 / f, 31.5 / f, -1).
  const Vec3 expected = Vec3(-31.5 / 64.0, 31.5 / 64.0, -1.0).normalized();
  CHECK((rays[0].direction - expected).norm() < 1e-15);

  const Pose pose(geometry::euler_to_rotation({0, 0, 0, 0.4, -1.1, 2.0}), Vec3(1, 2, 3));
  const auto turned = generate_rays(pose, intr);
  for (std::size_t k = 0; k < rays.size(); k += 17) {
    CHECK((turned[k].direction - pose.rotation() * rays[k].direction).norm() < 1e-12);
    CHECK(turned[k].origin == pose.position());
  }
}

TEST_CASE("composite") {
  const Vec3 bg(0.2, 0.5, 0.9);
  CounterRng rng(1);
  const auto colors = random_colors(rng, 4);
  const std::vector<double> zeros(4, 0.0), deltas(4, 0.25);
  CHECK(composite(colors, zeros, deltas, bg) == bg);

  const std::vector<double> opaque{200.0, 1.0, 1.0, 1.0};
  CHECK((composite(colors, opaque, deltas, bg) - colors[0]).cwiseAbs().maxCoeff() < 1e-9);

  CHECK_THROWS_AS(composite(colors, std::vector<double>{1, -1, 1, 1}, deltas, bg), InvalidInput);
  CHECK_THROWS_AS(composite(colors, zeros, std::vector<double>{1, 1}, bg), InvalidInput);
  CHECK_THROWS_AS(composite(colors, zeros, std::vector<double>{1, 0, 1, 1}, bg), InvalidInput);
}

TEST_CASE("transmittance is non-increasing in [0, 1]") {
  CounterRng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(16), d(16);
    for (int i = 0; i < 16; ++i) {
      s[static_cast<std::size_t>(i)] = rng.uniform(0.0, 5.0);
      d[static_cast<std::size_t>(i)] = rng.uniform(0.01, 0.5);
    }
    const auto t = transmittance(s, d);
    REQUIRE(t.size() == 17);
    CHECK(t[0] == 1.0);
    for (std::size_t i = 1; i < t.size(); ++i) {
      CHECK(t[i] <= t[i - 1]);
      CHECK(t[i] >= 0.0);
    }
  }
}

TEST_CASE("composite respects the energy bound and depends only on sigma * delta") {
  CounterRng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto colors = random_colors(rng, 12);
    std::vector<double> s(12), d(12), s2(12), d2(12);
    for (std::size_t i = 0; i < 12; ++i) {
      s[i] = rng.uniform(0.0, 4.0);
      d[i] = rng.uniform(0.05, 0.5);
      s2[i] = 2.0 * s[i];
      d2[i] = 0.5 * d[i];
    }
    const Vec3 bg(rng.uniform(), rng.uniform(), rng.uniform());
    const Vec3 out = composite(colors, s, d, bg);
    for (int c = 0; c < 3; ++c) {
      double hi = bg[c];
      for (const Vec3& col : colors) hi = std::max(hi, col[c]);
      CHECK(out[c] <= hi + 1e-15);
      CHECK(out[c] >= 0.0);
    }
    CHECK((composite(colors, s2, d2, bg) - out).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("homogeneous slab converges to the closed-form integral") {
  const double analytic = 1.0 - std::exp(-1.0);
  double previous = 1.0;
  for (int n : {32, 64, 128, 256}) {
    const double err = std::abs(slab_luminance(n) - analytic);
    // Midpoint samples cover optical depth 1 - 1/(2N), so the error is e^-1 (e^{1/(2N)} - 1).
    CHECK(err == doctest::Approx(std::exp(-1.0) * std::expm1(0.5 / n)).epsilon(1e-9));
    CHECK(err < previous);
    previous = err;
  }
  CHECK(previous < 2e-3);
}

TEST_CASE("sample depths") {
  RenderConfig cfg;
  cfg.n_samples = 4;
  cfg.near = 2.0;
  cfg.far = 4.0;
  std::vector<double> depths, deltas;
  sample_depths(cfg, nullptr, depths, deltas);
  CHECK(depths == std::vector<double>{2.25, 2.75, 3.25, 3.75});
  CHECK(deltas == std::vector<double>{0.5, 0.5, 0.5, 0.25});

  CounterRng rng(4);
  cfg.stratified = true;
  sample_depths(cfg, &rng, depths, deltas);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(depths[i] >= 2.0 + 0.5 * static_cast<double>(i));
    CHECK(depths[i] < 2.5 + 0.5 * static_cast<double>(i));
    CHECK(deltas[i] > 0.0);
  }
  CHECK(deltas[3] == doctest::Approx(4.0 - depths[3]));
}

TEST_CASE("render basics") {
  Intrinsics intr;
  intr.width = 16;
  intr.height = 12;
  RenderConfig cfg;
  cfg.background = Vec3(0.25, 0.5, 0.75);
  const ImageGrid empty = render::render(EmptyField{}, Pose(), intr, cfg);
  CHECK(empty.width() == 16);
  CHECK(empty.height() == 12);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 16; ++x)
      for (int c = 0; c < 3; ++c) CHECK(empty.at(x, y, c) == cfg.background[c]);

  render::SceneSpec spec;
  spec.resolution = {16, 16, 16};
  spec.spheres.push_back({Vec3::Zero(), 0.8, Vec3(0.9, 0.2, 0.1), 20.0});
  const VoxelField field = build_voxel_field(spec);
  const Pose pose = geometry::look_at({0, -4, 1}, Vec3::Zero(), Vec3::UnitZ());
  CHECK(render::render(field, pose, intr, cfg) == render::render(field, pose, intr, cfg));

  cfg.stratified = true;
  const ImageGrid a = render::render(field, pose, intr, cfg, 1);
  CHECK(a == render::render(field, pose, intr, cfg, 1));
  CHECK_FALSE(a == render::render(field, pose, intr, cfg, 2));

  cfg.near = 3.0;
  cfg.far = 2.0;
  CHECK_THROWS_AS(render::render(field, pose, intr, cfg), InvalidInput);
}

TEST_CASE("opaque voxel projects onto its pinhole footprint") {
  // One cell of constant density: the whole box [-0.25, 0.25]^3 is opaque.
  VoxelField field({1, 1, 1}, Vec3::Constant(-0.25), Vec3::Constant(0.25));
  field.set(0, 0, 0, Vec3::Zero(), 1000.0);
  const Pose pose = geometry::look_at({4, 0, 0}, Vec3::Zero(), Vec3::UnitZ());
  const Intrinsics intr;
  RenderConfig cfg;
  cfg.n_samples = 512;
  const ImageGrid img = render::render(field, pose, intr, cfg);

  int min_u = intr.width, max_u = -1, min_v = intr.height, max_v = -1;
  for (int v = 0; v < intr.height; ++v)
    for (int u = 0; u < intr.width; ++u)
      if (img.at(u, v, 0) < 1.0) {
        min_u = std::min(min_u, u);
        max_u = std::max(max_u, u);
        min_v = std::min(min_v, v);
        max_v = std::max(max_v, v);
      }

  // Project the eight corners through the pinhole.
  double lo_u = 1e9, hi_u = -1e9, lo_v = 1e9, hi_v = -1e9;
  const Mat3 rt = pose.rotation().transpose();
  for (int corner = 0; corner < 8; ++corner) {
    const Vec3 x((corner & 1) ? 0.25 : -0.25, (corner & 2) ? 0.25 : -0.25, (corner & 4) ? 0.25 : -0.25);
    const Vec3 c = rt * (x - pose.position());
    const double pu = intr.focal * c.x() / -c.z() + intr.cx();
    const double pv = -intr.focal * c.y() / -c.z() + intr.cy();
    lo_u = std::min(lo_u, pu);
    hi_u = std::max(hi_u, pu);
    lo_v = std::min(lo_v, pv);
    hi_v = std::max(hi_v, pv);
  }
  REQUIRE(max_u >= 0);
  CHECK(std::abs(min_u - std::floor(lo_u)) <= 1);
  CHECK(std::abs(max_u - std::floor(hi_u)) <= 1);
  CHECK(std::abs(min_v - std::floor(lo_v)) <= 1);
  CHECK(std::abs(max_v - std::floor(hi_v)) <= 1);
  // Centered blob.
  CHECK(std::abs((min_u + max_u) / 2.0 - (intr.width - 1) / 2.0) <= 1.0);
  CHECK(std::abs((min_v + max_v) / 2.0 - (intr.height - 1) / 2.0) <= 1.0);
}

TEST_CASE("photometric loss") {
  CounterRng rng(5);
  ImageGrid a(5, 4), b(5, 4);
  for (double& v : a.data()) v = rng.uniform();
  for (double& v : b.data()) v = rng.uniform();
  const std::vector<ImageGrid> xs{a, b}, ys{b, a};
  CHECK(photometric_loss(xs, xs) == 0.0);

  const ImageGrid one(1, 1, {0.5, 0.5, 0.5}), other(1, 1, {1.0, 1.0, 1.0});
  CHECK(photometric_loss(std::span(&one, 1), std::span(&other, 1)) == 0.75);

  double oracle = 0.0;
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < xs[k].data().size(); ++i) {
      const double d = xs[k].data()[i] - ys[k].data()[i];
      oracle += d * d;
    }
  CHECK(std::abs(photometric_loss(xs, ys) - oracle / 2.0) < 1e-10);

  const ImageGrid small(2, 2);
  CHECK_THROWS_AS(photometric_loss(std::span(&a, 1), std::span(&small, 1)), InvalidInput);
  CHECK_THROWS_AS(photometric_loss(xs, std::span(&a, 1)), InvalidInput);
}

TEST_CASE("voxel field queries") {
  VoxelField field({4, 3, 2}, Vec3(0, 0, 0), Vec3(4, 3, 2));
  CHECK(field.voxel_count() == 24);
  CHECK(field.index(1, 0, 0) == 1);
  CHECK(field.index(0, 1, 0) == 4);
  CHECK(field.index(0, 0, 1) == 12);
  CHECK(field.cell_center(0, 0, 0) == Vec3(0.5, 0.5, 0.5));
  // Density linear in the cell-center coordinates is reproduced exactly between centers.
  for (int z = 0; z < 2; ++z)
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 4; ++x) {
        const Vec3 c = field.cell_center(x, y, z);
        field.set(x, y, z, Vec3(0.5, 0.5, 0.5), 1.0 + c.x() + 2.0 * c.y() + 3.0 * c.z());
      }
  for (const Vec3& p : {Vec3(0.7, 1.2, 0.9), Vec3(2.5, 2.5, 1.5), Vec3(3.1, 0.6, 0.5)}) {
    CHECK(field.query(p, Vec3::UnitX()).sigma == doctest::Approx(1.0 + p.x() + 2.0 * p.y() + 3.0 * p.z()).epsilon(1e-12));
  }
  CHECK(field.query(Vec3(-0.1, 1, 1), Vec3::UnitX()).sigma == 0.0);
  CHECK(field.query(Vec3(1, 3.01, 1), Vec3::UnitX()).sigma == 0.0);
  CHECK_THROWS_AS(field.set(0, 0, 0, Vec3::Zero(), -1.0), InvalidInput);
  CHECK_THROWS_AS(field.set(0, 0, 0, Vec3(1.5, 0, 0), 1.0), InvalidInput);
}

TEST_CASE("color is density weighted") {
  VoxelField field({2, 1, 1}, Vec3(0, 0, 0), Vec3(2, 1, 1));
  field.set(0, 0, 0, Vec3(1, 0, 0), 3.0);
  field.set(1, 0, 0, Vec3(0, 0, 1), 0.0);
  const FieldSample s = field.query(Vec3(1.0, 0.5, 0.5), Vec3::UnitX());
  CHECK(s.sigma == doctest::Approx(1.5));
  CHECK(s.color == Vec3(1, 0, 0));
}

TEST_CASE("voxelized sphere matches point sampling") {
  SceneSpec spec;
  spec.resolution = {20, 20, 20};
  spec.spheres.push_back({Vec3(0.2, -0.1, 0.0), 0.7, Vec3(0.1, 0.8, 0.3), 15.0});
  const VoxelField field = build_voxel_field(spec);
  for (int z = 0; z < 20; ++z)
    for (int y = 0; y < 20; ++y)
      for (int x = 0; x < 20; ++x) {
        const bool inside = (field.cell_center(x, y, z) - spec.spheres[0].center).norm() <= 0.7;
        CHECK((field.sigma(x, y, z) > 0.0) == inside);
        if (inside) CHECK(field.color(x, y, z) == spec.spheres[0].color);
      }

  const VoxelField empty = build_voxel_field(SceneSpec{});
  for (double s : empty.sigmas()) CHECK(s == 0.0);

  // Later primitives win where they overlap.
  spec.boxes.push_back({Vec3(-0.3, -0.3, -0.3), Vec3(0.3, 0.3, 0.3), Vec3(1, 1, 0), 5.0});
  const VoxelField both = build_voxel_field(spec);
  CHECK(both.sigma(10, 10, 10) == 5.0);
}
