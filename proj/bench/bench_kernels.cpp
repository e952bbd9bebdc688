// OpenMP kernels against their serial twins.
#include <benchmark/benchmark.h>

#include "sdfforge/kernels.hpp"
#include "sdfforge/rng.hpp"
#include "sdfforge/sdf.hpp"

using namespace sdfforge;

namespace {

std::vector<kernels::SplatPoint> points(int n, Resolution res) {
  Rng rng(1);
  std::vector<kernels::SplatPoint> out(n);
  for (auto& p : out) p = {rng.uniform(0, res.width), rng.uniform(0, res.height), rng.uniform(0, 2)};
  return out;
}

std::vector<Particle> particles(int n) {
  Rng rng(2);
  std::vector<Particle> out(n);
  for (auto& p : out) {
    p.position = {rng.uniform(-0.3, 0.3), rng.uniform(0, 0.6), rng.uniform(-0.3, 0.3)};
    p.velocity = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
  }
  return out;
}

template <auto Kernel>
void splat(benchmark::State& state) {
  const Resolution res{256, 256};
  const auto pts = points(static_cast<int>(state.range(0)), res);
  std::vector<double> out(res.pixels());
  for (auto _ : state) {
    std::fill(out.begin(), out.end(), 0.0);
    Kernel(pts, res, 3.0, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Kernel>
void integrate(benchmark::State& state) {
  auto ps = particles(static_cast<int>(state.range(0)));
  const kernels::IntegrationParams prm{{0, -9.8, 0}, 0.05, 1.0 / 60, 20.0, 0.2, {{-0.3, 0, -0.3}, {0.3, 0.6, 0.3}}};
  for (auto _ : state) {
    Kernel(ps, prm);
    benchmark::DoNotOptimize(ps.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Kernel>
void features(benchmark::State& state) {
  Rng rng(3);
  std::vector<Image> imgs(static_cast<std::size_t>(state.range(0)), Image({128, 128}));
  for (auto& img : imgs) {
    for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(rng.below(256));
  }
  std::vector<const Image*> ptrs;
  for (const auto& img : imgs) ptrs.push_back(&img);
  std::vector<std::vector<double>> out(imgs.size());
  for (auto _ : state) {
    Kernel(ptrs, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void render(benchmark::State& state, bool serial) {
  Rng rng(4);
  ParticleSnapshot snap;
  snap.particles = particles(static_cast<int>(state.range(0)));
  CameraModel cam;
  cam.position = {0, 0.3, 1.2};
  cam.look_at = {0, 0.3, 0};
  cam.resolution = {128, 128};
  cam.focal_length = 134;
  const SdfParams prm;
  for (auto _ : state) {
    auto img = serial ? render_sdf_serial(snap, cam, prm) : render_sdf(snap, cam, prm);
    benchmark::DoNotOptimize(img.density.data());
  }
}

}  // namespace

BENCHMARK(splat<kernels::splat_disc_serial>)->Name("splat/serial")->Arg(1000)->Arg(10000);
BENCHMARK(splat<kernels::splat_disc_omp>)->Name("splat/omp")->Arg(1000)->Arg(10000);
BENCHMARK(integrate<kernels::integrate_serial>)->Name("integrate/serial")->Arg(10000)->Arg(100000);
BENCHMARK(integrate<kernels::integrate_omp>)->Name("integrate/omp")->Arg(10000)->Arg(100000);
BENCHMARK(features<kernels::luminance_features_serial>)->Name("features/serial")->Arg(64);
BENCHMARK(features<kernels::luminance_features_omp>)->Name("features/omp")->Arg(64);
BENCHMARK_CAPTURE(render, serial, true)->Name("render_sdf/serial")->Arg(2000);
BENCHMARK_CAPTURE(render, omp, false)->Name("render_sdf/omp")->Arg(2000);

BENCHMARK_MAIN();
