#pragma once

#include <filesystem>
#include <vector>

#include "sdfforge/camera.hpp"
#include "sdfforge/image.hpp"
#include "sdfforge/sim.hpp"

namespace sdfforge {

enum class Normalization { fixed_max, per_frame_max };
// speed: |v_i| as in the blue-density integral; projected: max(0, v . r_hat).
enum class Integrand { speed, projected };

struct SdfParams {
  double kappa = 1.0;         // intensity scale
  double alpha = 1.0;         // attenuation, 1/m^2
  double splat_radius = 2.0;  // pixels
  Normalization normalization = Normalization::fixed_max;
  double v_ref = 1.5;         // m/s, used by fixed_max
  Integrand integrand = Integrand::speed;
  double dim = 0.5;           // grayscale factor for the underlying RGB frame

  // Throws ConfigError.
  void validate() const;
};

// Component of v toward the camera: v . (c - p) / |c - p|. Negative when the
// particle recedes. Throws DegenerateGeometry when p == c.
double project_velocity(const Vec3& v, const Vec3& p, const Vec3& c);

// Per-particle weight before kappa: w_i / (1 + alpha |c - p_i|^2).
double particle_weight(const Particle& particle, const Vec3& camera_position, const SdfParams& params);

// Direct evaluation of one pixel (no acceleration structure).
double blue_density(int u, int v, const ParticleSnapshot& snapshot, const CameraModel& camera,
                    const SdfParams& params);

struct SdfImage {
  Resolution resolution;
  std::vector<double> density;  // row-major, >= 0
  double normalizer = 0.0;      // density mapped to blue = 255
  Image rgb;

  double at(int x, int y) const { return density[static_cast<std::size_t>(y) * resolution.width + x]; }
};

struct PixelIndex {
  int x = 0;
  int y = 0;
  bool operator==(const PixelIndex&) const = default;
};

// `base` is the RGB frame shown dimmed under the blue field; black if null.
SdfImage render_sdf(const ParticleSnapshot& snapshot, const CameraModel& camera, const SdfParams& params,
                    const Image* base = nullptr);
SdfImage render_sdf_serial(const ParticleSnapshot& snapshot, const CameraModel& camera,
                           const SdfParams& params, const Image* base = nullptr);

// Blue value for a density: round(clamp(density / normalizer, 0, 1) * 255).
std::uint8_t quantize_blue(double density, double normalizer);

// Location of the largest normalized density, first in raster order on ties.
PixelIndex max_blue_pixel(const SdfImage& image);

// Flat sidecar: row-major little-endian float32, width*height values, no header.
void write_density_sidecar(const std::filesystem::path& path, const SdfImage& image);
std::vector<float> read_density_sidecar(const std::filesystem::path& path, Resolution res);

}  // namespace sdfforge
