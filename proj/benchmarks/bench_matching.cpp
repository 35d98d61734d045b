#include <benchmark/benchmark.h>

#include "viewcal/matching.hpp"
#include "viewcal/rng.hpp"

using namespace viewcal;

namespace {

ImageGrid noise(int size, std::uint64_t seed) {
  CounterRng rng(seed);
  ImageGrid img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = rng.uniform();
  return img;
}

void BM_ExtractFeatures(benchmark::State& state) {
  const ImageGrid img = noise(64, 1);
  const int grid = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(matching::extract_features(img, grid, 256).count());
}
BENCHMARK(BM_ExtractFeatures)->Arg(4)->Arg(8)->Arg(16);

void BM_CosineCost(benchmark::State& state) {
  const int grid = static_cast<int>(state.range(0));
  const auto a = matching::extract_features(noise(64, 2), grid, 256);
  const auto b = matching::extract_features(noise(64, 3), grid, 256);
  for (auto _ : state) benchmark::DoNotOptimize(matching::cosine_cost(a, b)(0, 0));
}
BENCHMARK(BM_CosineCost)->Arg(8)->Arg(16);

}  // namespace
