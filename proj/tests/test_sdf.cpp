#include <bit>
#include <cstring>

#include "doctest.h"
#include "oracle/oracle.hpp"
#include "sdfforge/error.hpp"
#include "sdfforge/sdf.hpp"
#include "support.hpp"

using namespace sdfforge;

namespace {

CameraModel front_camera(int side = 64) {
  CameraModel cam;
  cam.position = {0, 0, 3};
  cam.look_at = {0, 0, 0};
  cam.up = {0, 1, 0};
  cam.resolution = {side, side};
  cam.focal_length = side;
  cam.near_plane = 0.01;
  return cam;
}

ParticleSnapshot at(std::initializer_list<Particle> ps) {
  ParticleSnapshot s;
  s.particles = ps;
  return s;
}

// A random camera looking at the unit cube from outside.
CameraModel random_camera(sdfforge::Rng& rng, int side) {
  CameraModel cam;
  const double th = rng.uniform(0, 6.283185307179586), ph = rng.uniform(-0.9, 0.9);
  const double r = rng.uniform(2.5, 5.0);
  cam.position = {r * std::cos(ph) * std::cos(th), r * std::sin(ph), r * std::cos(ph) * std::sin(th)};
  cam.look_at = {rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)};
  cam.up = {0, 1, 0};
  cam.resolution = {side, side};
  cam.focal_length = side * rng.uniform(0.8, 2.0);
  cam.near_plane = 0.01;
  return cam;
}

}  // namespace

TEST_CASE("project_velocity") {
  CHECK(project_velocity({0, 0, 2}, {0, 0, 0}, {0, 0, 5}) == 2.0);
  CHECK(project_velocity({1, 0, 0}, {0, 0, 0}, {0, 0, 5}) == 0.0);
  CHECK(project_velocity({3, 4, 0}, {0, 0, 0}, {1, 0, 0}) == 3.0);
  CHECK(project_velocity({0, 0, -2}, {0, 0, 0}, {0, 0, 5}) == -2.0);
  CHECK_THROWS_AS(project_velocity({1, 0, 0}, {1, 2, 3}, {1, 2, 3}), DegenerateGeometry);
}

TEST_CASE("blue_density hand sums") {
  // The camera sits at z = 3; a particle at the origin projects to the center.
  const auto cam = front_camera();
  SdfParams prm;

  SUBCASE("single term, no attenuation") {
    prm.kappa = 1;
    prm.alpha = 0;
    CHECK(blue_density(32, 32, at({{{0, 0, 0}, {3, 0, 0}}}), cam, prm) == doctest::Approx(3.0).epsilon(1e-15));
  }
  SUBCASE("attenuated at distance 1") {
    prm.kappa = 2;
    prm.alpha = 1;
    CHECK(blue_density(32, 32, at({{{0, 0, 2}, {0, 4, 0}}}), cam, prm) == doctest::Approx(4.0).epsilon(1e-15));
  }
  SUBCASE("two terms at distances 0 and 2") {
    // A particle at distance 0 sits on the camera center, outside any frustum,
    // so the sum is checked on the per-particle weights.
    prm.kappa = 1;
    prm.alpha = 0.5;
    const double w0 = particle_weight({{0, 0, 3}, {1, 0, 0}}, cam.position, prm);
    const double w2 = particle_weight({{0, 0, 1}, {0, 6, 0}}, cam.position, prm);
    CHECK(prm.kappa * (w0 + w2) == 3.0);
  }
  SUBCASE("in-frustum pair sums") {
    prm.kappa = 1;
    prm.alpha = 0.5;
    const auto snap = at({{{0, 0, 2}, {2, 0, 0}}, {{0, 0, 1}, {0, 6, 0}}});
    CHECK(blue_density(32, 32, snap, cam, prm) == doctest::Approx(2.0 / 1.5 + 6.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("particles outside the frustum contribute zero") {
    prm.alpha = 0;
    CHECK(blue_density(32, 32, at({{{0, 0, 5}, {3, 0, 0}}}), cam, prm) == 0.0);
    CHECK(blue_density(32, 32, at({{{50, 0, 0}, {3, 0, 0}}}), cam, prm) == 0.0);
  }
  SUBCASE("projected integrand clamps receding motion to zero") {
    prm.integrand = Integrand::projected;
    prm.alpha = 0;
    CHECK(blue_density(32, 32, at({{{0, 0, 0}, {0, 0, -2}}}), cam, prm) == 0.0);
    CHECK(blue_density(32, 32, at({{{0, 0, 0}, {0, 0, 2}}}), cam, prm) == doctest::Approx(2.0));
  }
}

TEST_CASE("renderer matches the brute-force oracle") {
  sdfforge::Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const int side = 16 + static_cast<int>(rng.below(49));
    const auto cam = random_camera(rng, side);
    const auto snap = testing::random_snapshot(rng, 1 + static_cast<int>(rng.below(100)), {{-1, -1, -1}, {1, 1, 1}}, 3.0);
    SdfParams prm;
    prm.kappa = rng.uniform(0.1, 3);
    prm.alpha = rng.uniform(0, 2);
    prm.splat_radius = rng.uniform(0.5, 4);
    prm.integrand = trial % 2 ? Integrand::projected : Integrand::speed;
    const auto img = render_sdf(snap, cam, prm);
    const auto ref = oracle::sdf_density(snap, cam, prm);
    REQUIRE(img.density.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) REQUIRE(oracle::close_rel(img.density[i], ref[i], 1e-6));
    // The direct single-pixel path agrees too.
    const int u = static_cast<int>(rng.below(side)), v = static_cast<int>(rng.below(side));
    CHECK(oracle::close_rel(blue_density(u, v, snap, cam, prm), ref[v * side + u], 1e-6));
  }
}

TEST_CASE("omp and serial renders are bit-identical") {
  sdfforge::Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const auto cam = random_camera(rng, 64);
    const auto snap = testing::random_snapshot(rng, 400, {{-1, -1, -1}, {1, 1, 1}}, 2.0);
    SdfParams prm;
    const auto a = render_sdf(snap, cam, prm), b = render_sdf_serial(snap, cam, prm);
    CHECK(a.density == b.density);
    CHECK(a.rgb == b.rgb);
  }
}

TEST_CASE("zero velocities give zero density and floor blue") {
  auto snap = at({{{0, 0, 0}, {0, 0, 0}}, {{0.1, 0, 0}, {0, 0, 0}}});
  const auto cam = front_camera(32);
  const Image base(cam.resolution, {100, 100, 100});
  SdfParams prm;
  const auto img = render_sdf(snap, cam, prm, &base);
  for (double d : img.density) CHECK(d == 0.0);
  const auto gray = static_cast<std::uint8_t>(std::lround(0.5 * 100));
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) CHECK(img.rgb.at(x, y) == Rgb{gray, gray, gray});
  }
}

TEST_CASE("doubling speeds doubles densities") {
  sdfforge::Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto cam = random_camera(rng, 48);
    auto snap = testing::random_snapshot(rng, 60, {{-1, -1, -1}, {1, 1, 1}}, 2.0);
    SdfParams prm;
    prm.alpha = rng.uniform(0, 1);
    const auto a = render_sdf(snap, cam, prm);
    for (auto& p : snap.particles) p.velocity = p.velocity * 2.0;
    const auto b = render_sdf(snap, cam, prm);
    for (std::size_t i = 0; i < a.density.size(); ++i) REQUIRE(b.density[i] == 2.0 * a.density[i]);
  }
}

TEST_CASE("moving a particle away strictly lowers its contribution") {
  SdfParams prm;
  prm.alpha = 0.7;
  const Vec3 c{0, 0, 3};
  double last = particle_weight({{0, 0, 2}, {1, 1, 0}}, c, prm);
  for (double z = 1.5; z > -5; z -= 0.5) {
    const double w = particle_weight({{0, 0, z}, {1, 1, 0}}, c, prm);
    CHECK(w < last);
    last = w;
  }
}

TEST_CASE("densities are non-negative in both modes") {
  sdfforge::Rng rng(14);
  for (auto mode : {Integrand::speed, Integrand::projected}) {
    const auto cam = random_camera(rng, 32);
    const auto snap = testing::random_snapshot(rng, 80, {{-1, -1, -1}, {1, 1, 1}}, 3.0);
    SdfParams prm;
    prm.integrand = mode;
    for (double d : render_sdf(snap, cam, prm).density) CHECK(d >= 0.0);
  }
}

TEST_CASE("argmax is the same under both normalizations") {
  sdfforge::Rng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const auto cam = random_camera(rng, 32);
    const auto snap = testing::random_snapshot(rng, 30, {{-1, -1, -1}, {1, 1, 1}}, 3.0);
    SdfParams fixed, per_frame;
    fixed.v_ref = rng.uniform(0.1, 5);
    per_frame.normalization = Normalization::per_frame_max;
    CHECK(max_blue_pixel(render_sdf(snap, cam, fixed)) == max_blue_pixel(render_sdf(snap, cam, per_frame)));
  }
}

TEST_CASE("quantization") {
  CHECK(quantize_blue(0.0, 1.0) == 0);
  CHECK(quantize_blue(1.0, 1.0) == 255);
  CHECK(quantize_blue(5.0, 1.0) == 255);
  CHECK(quantize_blue(0.5, 1.0) == 128);
  CHECK(quantize_blue(1.0, 0.0) == 0);
  int last = 0;
  for (int i = 0; i <= 1000; ++i) {
    const int q = quantize_blue(i / 500.0, 1.0);
    CHECK(q >= last);
    last = q;
  }
}

TEST_CASE("fixed_max normalizer is kappa times v_ref") {
  SdfParams prm;
  prm.kappa = 2.5;
  prm.v_ref = 1.2;
  const auto img = render_sdf(at({{{0, 0, 0}, {1, 0, 0}}}), front_camera(16), prm);
  CHECK(img.normalizer == 2.5 * 1.2);
  prm.normalization = Normalization::per_frame_max;
  const auto pf = render_sdf(at({{{0, 0, 0}, {1, 0, 0}}}), front_camera(16), prm);
  CHECK(pf.normalizer == *std::max_element(pf.density.begin(), pf.density.end()));
}

TEST_CASE("density sidecar round trip") {
  testing::TempDir dir("sidecar");
  sdfforge::Rng rng(16);
  const auto cam = front_camera(24);
  const auto img = render_sdf(testing::random_snapshot(rng, 40, {{-1, -1, -1}, {1, 1, 1}}, 2.0), cam, SdfParams{});
  write_density_sidecar(dir / "d.f32", img);
  CHECK(std::filesystem::file_size(dir / "d.f32") == 24u * 24u * 4u);
  const auto back = read_density_sidecar(dir / "d.f32", cam.resolution);
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == static_cast<float>(img.density[i]));
  const auto bytes = testing::slurp(dir / "d.f32");
  const auto u = [&](int i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i])); };
  const std::uint32_t first = u(0) | u(1) << 8 | u(2) << 16 | u(3) << 24;
  CHECK(first == std::bit_cast<std::uint32_t>(static_cast<float>(img.density[0])));
}

TEST_CASE("parameter validation") {
  SdfParams prm;
  prm.kappa = 0;
  CHECK_THROWS_AS(prm.validate(), ConfigError);
  prm = {};
  prm.alpha = -1;
  CHECK_THROWS_AS(prm.validate(), ConfigError);
  prm = {};
  prm.splat_radius = -0.5;
  CHECK_THROWS_AS(prm.validate(), ConfigError);
  CameraModel cam = front_camera();
  cam.up = {0, 0, 1};
  CHECK_THROWS_AS(cam.validate(), ConfigError);
}
