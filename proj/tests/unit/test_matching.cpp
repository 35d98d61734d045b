#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "viewcal/error.hpp"
#include "viewcal/matching.hpp"
#include "viewcal/rng.hpp"

using namespace viewcal;
using namespace viewcal::matching;

namespace {

ImageGrid constant_image(int w, int h, double r, double g, double b) {
  ImageGrid img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = r;
      img.at(x, y, 1) = g;
      img.at(x, y, 2) = b;
    }
  return img;
}

ImageGrid random_image(CounterRng& rng, int w, int h) {
  ImageGrid img(w, h);
  for (double& v : img.data()) v = rng.uniform();
  return img;
}

// Random color per cell, `shift` cells to the right with wrap-around.
ImageGrid block_image(std::uint64_t seed, int grid, int cell, int shift) {
  ImageGrid img(grid * cell, grid * cell);
  for (int cy = 0; cy < grid; ++cy) {
    for (int cx = 0; cx < grid; ++cx) {
      CounterRng rng(CounterRng::derive(seed, static_cast<std::uint64_t>(cy * grid + cx)));
      const int dst = (cx + shift) % grid;
      // Sub-cell texture so gradient blocks are not all zero.
      for (int y = 0; y < cell; ++y)
        for (int x = 0; x < cell; ++x)
          for (int c = 0; c < 3; ++c) img.at(dst * cell + x, cy * cell + y, c) = rng.uniform();
    }
  }
  return img;
}

FeatureSet manual_set(const Eigen::MatrixXd& v) {
  std::vector<Anchor> anchors(static_cast<std::size_t>(v.rows()), Anchor{0.5, 0.5});
  return FeatureSet(v, anchors, 1, 1);
}

}  // namespace

TEST_CASE("descriptor layout constants") {
  CHECK(kRawDescriptorLength == 64 + 56 + 56 + 1);
  CHECK(kBiasOffset == kRawDescriptorLength - 1);
}

TEST_CASE("constant image gives identical descriptors") {
  for (double level : {0.0, 0.3, 1.0}) {
    const FeatureSet fs = extract_features(constant_image(64, 64, level, level, level), 8, 256);
    CHECK(fs.count() == 64);
    CHECK(fs.dim() == 256);
    CHECK(fs.is_normalized());
    for (Eigen::Index i = 1; i < fs.count(); ++i) CHECK(fs.vectors().row(i) == fs.vectors().row(0));
  }
}

TEST_CASE("extraction is deterministic") {
  CounterRng rng(1);
  const ImageGrid img = random_image(rng, 48, 40);
  const ImageGrid copy = img;
  CHECK(extract_features(img, 8, 256) == extract_features(copy, 8, 256));
}

TEST_CASE("bright quadrant cells carry the largest luminance block") {
  ImageGrid img = constant_image(64, 64, 0.1, 0.1, 0.1);
  for (int y = 0; y < 32; ++y)
    for (int x = 32; x < 64; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = 0.9;
  const FeatureSet fs = extract_features(img, 8, 256);

  // Direct per-cell mean luminance from the pixels.
  std::vector<double> mean(64, 0.0);
  for (int cy = 0; cy < 8; ++cy)
    for (int cx = 0; cx < 8; ++cx) {
      double s = 0.0;
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) s += img.luminance(cx * 8 + x, cy * 8 + y);
      mean[static_cast<std::size_t>(cy * 8 + cx)] = s / 64.0;
    }
  const double best_mean = *std::max_element(mean.begin(), mean.end());

  std::vector<double> lum(64);
  for (Eigen::Index i = 0; i < 64; ++i)
    lum[static_cast<std::size_t>(i)] = fs.vectors().row(i).segment(kLuminanceOffset, 64).sum();
  const double best_lum = *std::max_element(lum.begin(), lum.end());
  for (std::size_t i = 0; i < 64; ++i) {
    const bool bright_by_oracle = mean[i] == best_mean;
    CHECK(bright_by_oracle == (lum[i] == best_lum));
    const int cx = static_cast<int>(i % 8), cy = static_cast<int>(i / 8);
    CHECK(bright_by_oracle == (cx >= 4 && cy < 4));
  }
}

TEST_CASE("shifting content by one cell permutes descriptors") {
  const ImageGrid base = block_image(5, 8, 8, 0);
  const ImageGrid shifted = block_image(5, 8, 8, 1);
  const FeatureSet a = extract_features(base, 8, 256);
  const FeatureSet b = extract_features(shifted, 8, 256);
  for (int cy = 0; cy < 8; ++cy)
    for (int cx = 0; cx < 8; ++cx)
      CHECK(b.vectors().row(cy * 8 + (cx + 1) % 8) == a.vectors().row(cy * 8 + cx));
}

TEST_CASE("anchors are cell centers in row-major order") {
  const FeatureSet fs = extract_features(constant_image(40, 20, 0.5, 0.5, 0.5), 4, 32);
  CHECK(fs.anchors()[0] == Anchor{5.0, 2.5});
  CHECK(fs.anchors()[1] == Anchor{15.0, 2.5});
  CHECK(fs.anchors()[4] == Anchor{5.0, 7.5});
  CHECK(fs.dim() == 32);
  CHECK(fs.is_normalized());
}

TEST_CASE("extraction errors") {
  CHECK_THROWS_AS(extract_features(ImageGrid(4, 4), 8, 256), InvalidInput);
  CHECK_THROWS_AS(extract_features(ImageGrid(8, 8), 0, 256), InvalidInput);
  CHECK_THROWS_AS(extract_features(ImageGrid(8, 8), 2, 0), InvalidInput);
  CHECK_THROWS_AS(FeatureSet(Eigen::MatrixXd::Ones(1, 3), {Anchor{5, 5}}, 4, 4), InvalidInput);
  CHECK_THROWS_AS(FeatureSet(Eigen::MatrixXd::Ones(2, 3), {Anchor{1, 1}}, 4, 4), InvalidInput);
}

TEST_CASE("cosine cost") {
  Eigen::MatrixXd v(3, 3);
  v << 1, 0, 0, 0, 1, 0, -1, 0, 0;
  const auto m = cosine_cost(manual_set(v), manual_set(v));
  CHECK(m(0, 0) == 0.0);
  CHECK(m(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m(0, 2) == doctest::Approx(2.0).epsilon(1e-15));

  // Unnormalized rows are normalized first.
  Eigen::MatrixXd scaled = v * 3.0;
  CHECK(cosine_cost(manual_set(scaled), manual_set(v)).values() == m.values());

  Eigen::MatrixXd zero = v;
  zero.row(1).setZero();
  CHECK_THROWS_AS(cosine_cost(manual_set(zero), manual_set(v)), InvalidInput);
  CHECK_THROWS_AS(cosine_cost(manual_set(v), manual_set(Eigen::MatrixXd::Ones(3, 2))), InvalidInput);
  CHECK_THROWS_AS(cosine_cost(manual_set(v), manual_set(Eigen::MatrixXd::Ones(2, 3))), InvalidInput);
}

TEST_CASE("cosine cost properties on extracted features") {
  CounterRng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const FeatureSet fs = extract_features(random_image(rng, 64, 64), 8, 256);
    const FeatureSet ft = extract_features(random_image(rng, 64, 64), 8, 256);
    const auto self = cosine_cost(fs, fs);
    for (Eigen::Index i = 0; i < 64; ++i) CHECK(self(i, i) == 0.0);
    const auto st = cosine_cost(fs, ft);
    CHECK(st.values() == cosine_cost(ft, fs).values().transpose());
    CHECK(st.values().minCoeff() >= 0.0);
    CHECK(st.values().maxCoeff() <= 2.0);
    // Against the textbook formula.
    for (Eigen::Index i = 0; i < 64; i += 7)
      for (Eigen::Index j = 0; j < 64; j += 5) {
        const double cosine = fs.vectors().row(i).dot(ft.vectors().row(j)) /
                              (fs.vectors().row(i).norm() * ft.vectors().row(j).norm());
        CHECK(std::abs(st(i, j) - (1.0 - cosine)) < 1e-12);
      }
  }
}

TEST_CASE("uniform masses") {
  CHECK(uniform_masses(1).values()[0] == 1.0);
  const auto four = uniform_masses(4);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(four[i] == 0.25);
  for (Eigen::Index l : {3, 7, 64, 1000}) CHECK(std::abs(uniform_masses(l).total() - 1.0) < 1e-12);
  CHECK_THROWS_AS(uniform_masses(0), InvalidInput);
}

TEST_CASE("top matches") {
  const FeatureSet fs = extract_features(constant_image(16, 16, 0.5, 0.5, 0.5), 2, 8);

  Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(4, 4);
  diag.diagonal() << 0.1, 0.4, 0.2, 0.3;
  const auto one = top_matches(ot::TransportPlan(diag), fs, fs, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].row == 1);
  CHECK(one[0].col == 1);
  CHECK(one[0].source == fs.anchors()[1]);
  CHECK(one[0].target == fs.anchors()[1]);
  CHECK(one[0].weight == 0.4);

  const auto ties = top_matches(ot::TransportPlan(Eigen::MatrixXd::Constant(4, 4, 1.0 / 16)), fs, fs, 2);
  REQUIRE(ties.size() == 2);
  CHECK((ties[0].row == 0 && ties[0].col == 0));
  CHECK((ties[1].row == 0 && ties[1].col == 1));

  CHECK(top_matches(ot::TransportPlan(diag), fs, fs, 100).size() == 16);

  CounterRng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd p(4, 4);
    for (double& x : p.reshaped()) x = std::floor(rng.uniform() * 6.0) / 10.0 + 0.01;  // many ties
    const auto got = top_matches(ot::TransportPlan(p), fs, fs, 5);
    // Full sort of every entry.
    std::vector<std::tuple<double, int, int>> all;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) all.emplace_back(-p(i, j), i, j);
    std::sort(all.begin(), all.end());
    REQUIRE(got.size() == 5);
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(got[k].row == std::get<1>(all[k]));
      CHECK(got[k].col == std::get<2>(all[k]));
      CHECK(got[k].weight == -std::get<0>(all[k]));
      if (k > 0) CHECK(got[k].weight <= got[k - 1].weight);
    }
  }
  CHECK_THROWS_AS(top_matches(ot::TransportPlan(Eigen::MatrixXd::Ones(3, 3)), fs, fs, 1), InvalidInput);
}
