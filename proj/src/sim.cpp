#include "sdfforge/sim.hpp"

#include <algorithm>
#include <cmath>

#include "sdfforge/error.hpp"
#include "sdfforge/kernels.hpp"
#include "sdfforge/rng.hpp"

namespace sdfforge {

double damping_for(Viscosity v) {
  switch (v) {
    case Viscosity::low:
      return 0.01;
    case Viscosity::medium:
      return 0.05;
    case Viscosity::high:
      return 0.20;
  }
  return 0.0;
}

void SimScene::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("scene dt must be > 0");
  if (steps < 0) throw ConfigError("scene steps must be >= 0");
  if (!(restitution >= 0.0 && restitution <= 1.0)) throw ConfigError("scene restitution must be in [0,1]");
  if (!(v_max > 0.0)) throw ConfigError("scene v_max must be > 0");
  if (!is_finite(gravity)) throw ConfigError("scene gravity must be finite");
  if (!is_finite(container.min) || !is_finite(container.max) || !(container.min.x < container.max.x) ||
      !(container.min.y < container.max.y) || !(container.min.z < container.max.z)) {
    throw ConfigError("scene container must be a non-empty finite box");
  }
  if (!container.contains(emitter.position)) throw ConfigError("emitter position must lie inside the container");
  if (emitter.rate < 0) throw ConfigError("emitter rate must be >= 0");
  if (!(emitter.speed >= 0.0) || !std::isfinite(emitter.speed)) throw ConfigError("emitter speed must be >= 0");
  if (!(emitter.jitter >= 0.0) || !(emitter.spread >= 0.0)) throw ConfigError("emitter jitter/spread must be >= 0");
  if (emitter.rate > 0 && !(norm(emitter.direction) > 0.0)) throw ConfigError("emitter direction must be non-zero");
}

namespace {

Vec3 clamp_to(const Box& box, Vec3 p) {
  for (int a = 0; a < 3; ++a) p[a] = std::min(box.max[a], std::max(box.min[a], p[a]));
  return p;
}

void spawn(const SimScene& scene, int step_index, std::vector<Particle>& out) {
  const Emitter& e = scene.emitter;
  if (e.rate == 0) return;
  if (e.active_steps >= 0 && step_index > e.active_steps) return;
  Rng rng(mix_seed(scene.seed, static_cast<std::uint64_t>(step_index)));
  const double angle = e.swirl * step_index;
  const Vec3 d0 = normalized(e.direction);
  const Vec3 dir{d0.x * std::cos(angle) + d0.z * std::sin(angle), d0.y,
                 -d0.x * std::sin(angle) + d0.z * std::cos(angle)};
  for (int i = 0; i < e.rate; ++i) {
    Vec3 offset{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    Vec3 kick{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    Particle p;
    p.position = clamp_to(scene.container, e.position + offset * e.jitter);
    p.velocity = dir * e.speed + kick * (e.spread * e.speed);
    const double speed = norm(p.velocity);
    if (speed > scene.v_max) p.velocity = p.velocity * (scene.v_max / speed);
    out.push_back(p);
  }
}

}  // namespace

ParticleSnapshot initial_snapshot(const SimScene& scene) {
  scene.validate();
  ParticleSnapshot s;
  spawn(scene, 0, s.particles);
  return s;
}

ParticleSnapshot step(const ParticleSnapshot& state, const SimScene& scene) {
  ParticleSnapshot next;
  next.step = state.step + 1;
  next.time = next.step * scene.dt;
  next.particles = state.particles;
  const kernels::IntegrationParams params{scene.gravity, scene.damping(), scene.dt, scene.v_max,
                                          scene.restitution, scene.container};
  if (!kernels::integrate_omp(next.particles, params)) throw SimulationDiverged(next.step);
  spawn(scene, next.step, next.particles);
  return next;
}

std::vector<ParticleSnapshot> simulate(const SimScene& scene) {
  std::vector<ParticleSnapshot> out;
  out.reserve(static_cast<std::size_t>(scene.steps) + 1);
  out.push_back(initial_snapshot(scene));
  for (int k = 0; k < scene.steps; ++k) out.push_back(step(out.back(), scene));
  return out;
}

double kinetic_energy(const ParticleSnapshot& snapshot) {
  double e = 0.0;
  for (const auto& p : snapshot.particles) e += 0.5 * dot(p.velocity, p.velocity);
  return e;
}

Image background_image(Background preset, Resolution res) {
  Image img(res);
  auto lerp = [](Rgb a, Rgb b, double t) {
    auto mix = [t](int x, int y) { return static_cast<std::uint8_t>(std::lround(x + (y - x) * t)); };
    return Rgb{mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
  };
  for (int y = 0; y < res.height; ++y) {
    const double t = res.height > 1 ? static_cast<double>(y) / (res.height - 1) : 0.0;
    Rgb c;
    switch (preset) {
      case Background::blank:
        c = {236, 236, 236};
        break;
      case Background::indoor:
        c = lerp({214, 202, 186}, {188, 172, 152}, t);
        break;
      case Background::outdoor:
        c = lerp({176, 208, 236}, {166, 196, 160}, t);
        break;
    }
    for (int x = 0; x < res.width; ++x) img.set(x, y, c);
  }
  return img;
}

Image emit_rgb(const ParticleSnapshot& snapshot, const CameraModel& camera, const SimScene& scene,
               const RgbStyle& style) {
  const Projector projector(camera);
  const Resolution res = camera.resolution;
  Image img = background_image(scene.background, res);

  if (style.draw_container) {
    const Box& b = scene.container;
    const Vec3 corners[8] = {{b.min.x, b.min.y, b.min.z}, {b.max.x, b.min.y, b.min.z},
                             {b.max.x, b.max.y, b.min.z}, {b.min.x, b.max.y, b.min.z},
                             {b.min.x, b.min.y, b.max.z}, {b.max.x, b.min.y, b.max.z},
                             {b.max.x, b.max.y, b.max.z}, {b.min.x, b.max.y, b.max.z}};
    const int edges[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
    const int samples = 4 * std::max(res.width, res.height);
    for (const auto& e : edges) {
      for (int s = 0; s <= samples; ++s) {
        const double t = static_cast<double>(s) / samples;
        const auto proj = projector.project(corners[e[0]] * (1.0 - t) + corners[e[1]] * t);
        if (!proj) continue;
        const int x = static_cast<int>(std::floor(proj->u));
        const int y = static_cast<int>(std::floor(proj->v));
        if (x >= 0 && y >= 0 && x < res.width && y < res.height) img.set(x, y, {96, 96, 96});
      }
    }
  }

  std::vector<kernels::SplatPoint> points;
  points.reserve(snapshot.particles.size());
  for (const auto& p : snapshot.particles) {
    if (const auto proj = projector.project(p.position)) points.push_back({proj->u, proj->v, 1.0});
  }
  std::vector<double> coverage(res.pixels(), 0.0);
  kernels::splat_disc_omp(points, res, style.particle_radius_px, coverage);
  for (int y = 0; y < res.height; ++y) {
    for (int x = 0; x < res.width; ++x) {
      if (coverage[static_cast<std::size_t>(y) * res.width + x] > 0.0) img.set(x, y, scene.liquid_color);
    }
  }
  return img;
}

}  // namespace sdfforge
