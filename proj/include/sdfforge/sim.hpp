#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdfforge/camera.hpp"
#include "sdfforge/image.hpp"
#include "sdfforge/vec3.hpp"

namespace sdfforge {

enum class Viscosity { low, medium, high };
enum class Background { blank, indoor, outdoor };

// Per-step velocity damping for each viscosity preset (water, oil, honey).
double damping_for(Viscosity v);

struct Box {
  Vec3 min;
  Vec3 max;
  bool contains(const Vec3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
           p.z <= max.z;
  }
  Vec3 center() const { return (min + max) * 0.5; }
};

struct Emitter {
  Vec3 position;
  Vec3 direction{0.0, -1.0, 0.0};
  double speed = 1.0;      // m/s
  int rate = 8;            // particles per step
  int active_steps = -1;   // emitter stops spawning after this step; < 0 means never
  double jitter = 0.01;    // m, half-width of the spawn cube
  double spread = 0.05;    // velocity jitter, fraction of speed
  double swirl = 0.0;      // rad/step rotation of direction about +y
};

struct SimScene {
  Box container{{-0.3, 0.0, -0.3}, {0.3, 0.6, 0.3}};
  Emitter emitter;
  Vec3 gravity{0.0, -9.8, 0.0};
  Viscosity viscosity = Viscosity::low;
  double restitution = 0.2;
  double dt = 1.0 / 60.0;
  int steps = 60;
  std::uint64_t seed = 0;
  double v_max = 20.0;
  Rgb liquid_color{40, 90, 200};
  Background background = Background::blank;

  double damping() const { return damping_for(viscosity); }
  // Throws ConfigError.
  void validate() const;
};

struct Particle {
  Vec3 position;  // m
  Vec3 velocity;  // m/s
  bool operator==(const Particle&) const = default;
};

struct ParticleSnapshot {
  int step = 0;
  double time = 0.0;  // s
  std::vector<Particle> particles;
  bool operator==(const ParticleSnapshot&) const = default;
};

// Step 0: the emitter's first spawn batch.
ParticleSnapshot initial_snapshot(const SimScene& scene);

// Semi-implicit Euler: v' = (1 - gamma)(v + g dt), p' = p + v' dt, then wall
// collisions and spawning. Throws SimulationDiverged.
ParticleSnapshot step(const ParticleSnapshot& state, const SimScene& scene);

// steps + 1 snapshots.
std::vector<ParticleSnapshot> simulate(const SimScene& scene);

double kinetic_energy(const ParticleSnapshot& snapshot);  // sum of 0.5 |v|^2, unit mass

struct RgbStyle {
  double particle_radius_px = 2.0;
  bool draw_container = true;
};

Image background_image(Background preset, Resolution res);

// Pinhole projection of every particle as a flat disc over the background.
Image emit_rgb(const ParticleSnapshot& snapshot, const CameraModel& camera, const SimScene& scene,
               const RgbStyle& style = {});

}  // namespace sdfforge
