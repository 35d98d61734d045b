#include <benchmark/benchmark.h>

#include "viewcal/render.hpp"
#include "viewcal/voxel_field.hpp"

using namespace viewcal;
using geometry::Vec3;

namespace {

const render::VoxelField& scene() {
  static const render::VoxelField field = [] {
    render::SceneSpec spec;
    spec.spheres.push_back({Vec3(-0.55, 0.25, 0.0), 0.5, Vec3(0.9, 0.25, 0.2), 20.0});
    spec.spheres.push_back({Vec3(0.55, -0.3, 0.15), 0.4, Vec3(0.2, 0.4, 0.9), 20.0});
    spec.light = Vec3(0.6, -0.4, 0.7);
    return render::build_voxel_field(spec);
  }();
  return field;
}

void BM_Render(benchmark::State& state) {
  render::Intrinsics intr;
  intr.width = intr.height = static_cast<int>(state.range(0));
  intr.focal = intr.width;
  render::RenderConfig cfg;
  cfg.n_samples = static_cast<int>(state.range(1));
  const geometry::Pose pose = geometry::look_at({4, 0, 1}, Vec3::Zero(), Vec3::UnitZ());
  for (auto _ : state) benchmark::DoNotOptimize(render::render(scene(), pose, intr, cfg).at(0, 0, 0));
  state.SetItemsProcessed(state.iterations() * intr.width * intr.height);
}
BENCHMARK(BM_Render)->Args({32, 32})->Args({64, 64})->Args({64, 128})->Unit(benchmark::kMillisecond);

void BM_BuildVoxelField(benchmark::State& state) {
  render::SceneSpec spec;
  spec.spheres.push_back({Vec3::Zero(), 0.8, Vec3::Ones(), 10.0});
  spec.resolution = {static_cast<int>(state.range(0)), static_cast<int>(state.range(0)),
                     static_cast<int>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(render::build_voxel_field(spec).voxel_count());
}
BENCHMARK(BM_BuildVoxelField)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
