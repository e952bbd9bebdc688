#include <cmath>

#include "doctest.h"
#include "sdfforge/kernels.hpp"
#include "support.hpp"

using namespace sdfforge;
using namespace sdfforge::kernels;

TEST_CASE("splat omp matches serial bit for bit") {
  sdfforge::Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Resolution res{8 + static_cast<int>(rng.below(120)), 8 + static_cast<int>(rng.below(120))};
    std::vector<SplatPoint> pts;
    const int n = static_cast<int>(rng.below(2000));
    for (int i = 0; i < n; ++i) {
      pts.push_back({rng.uniform(-10, res.width + 10), rng.uniform(-10, res.height + 10), rng.uniform(0, 5)});
    }
    pts.push_back({std::nan(""), 3.0, 1.0});
    const double r = rng.uniform(0, 6);
    std::vector<double> a(res.pixels(), 0.0), b(res.pixels(), 0.0);
    splat_disc_omp(pts, res, r, a);
    splat_disc_serial(pts, res, r, b);
    REQUIRE(a == b);
  }
}

TEST_CASE("splat covers exactly the pixel centers inside the disc") {
  const Resolution res{9, 9};
  std::vector<double> out(res.pixels(), 0.0);
  const SplatPoint p{4.5, 4.5, 2.0};
  splat_disc_serial(std::span(&p, 1), res, 1.0, out);
  int covered = 0;
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 9; ++x) {
      const double dx = x + 0.5 - 4.5, dy = y + 0.5 - 4.5;
      const double expect = dx * dx + dy * dy <= 1.0 ? 2.0 : 0.0;
      CHECK(out[y * 9 + x] == expect);
      covered += expect > 0;
    }
  }
  CHECK(covered == 5);
}

TEST_CASE("zero radius only hits exact centers") {
  const Resolution res{4, 4};
  std::vector<double> out(res.pixels(), 0.0);
  const SplatPoint pts[] = {{1.5, 2.5, 1.0}, {1.2, 2.5, 1.0}};
  splat_disc_serial(pts, res, 0.0, out);
  CHECK(out[2 * 4 + 1] == 1.0);
  double total = 0;
  for (double v : out) total += v;
  CHECK(total == 1.0);
}

TEST_CASE("integrate omp matches serial bit for bit") {
  sdfforge::Rng rng(22);
  IntegrationParams prm{{0, -9.8, 0}, 0.05, 1.0 / 60, 3.0, 0.4, {{-0.3, 0, -0.3}, {0.3, 0.6, 0.3}}};
  auto snap = testing::random_snapshot(rng, 5000, prm.container, 4.0);
  auto a = snap.particles, b = snap.particles;
  for (int k = 0; k < 30; ++k) {
    CHECK(integrate_omp(a, prm));
    CHECK(integrate_serial(b, prm));
  }
  CHECK(a == b);
}

TEST_CASE("luminance features omp matches serial") {
  sdfforge::Rng rng(23);
  std::vector<Image> imgs;
  for (int i = 0; i < 12; ++i) {
    Image img({20 + static_cast<int>(rng.below(80)), 20 + static_cast<int>(rng.below(80))});
    for (auto& byte : img.bytes()) byte = static_cast<std::uint8_t>(rng.below(256));
    imgs.push_back(std::move(img));
  }
  std::vector<const Image*> ptrs;
  for (const auto& i : imgs) ptrs.push_back(&i);
  std::vector<std::vector<double>> a(imgs.size()), b(imgs.size());
  luminance_features_omp(ptrs, a);
  luminance_features_serial(ptrs, b);
  CHECK(a == b);
  for (const auto& f : a) CHECK(f.size() == static_cast<std::size_t>(kFeatureSide * kFeatureSide));
}
