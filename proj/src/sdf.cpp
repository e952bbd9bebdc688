#include "sdfforge/sdf.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "sdfforge/error.hpp"
#include "sdfforge/kernels.hpp"

namespace sdfforge {

void SdfParams::validate() const {
  if (!(kappa > 0.0)) throw ConfigError("sdf kappa must be > 0");
  if (!(alpha >= 0.0)) throw ConfigError("sdf alpha must be >= 0");
  if (!(splat_radius >= 0.0)) throw ConfigError("sdf splat_radius must be >= 0");
  if (normalization == Normalization::fixed_max && !(v_ref > 0.0)) throw ConfigError("sdf v_ref must be > 0");
  if (!(dim >= 0.0 && dim <= 1.0)) throw ConfigError("sdf dim must be in [0,1]");
}

double project_velocity(const Vec3& v, const Vec3& p, const Vec3& c) {
  const Vec3 r = c - p;
  const double len = norm(r);
  if (len == 0.0) throw DegenerateGeometry("particle coincides with the camera position");
  return dot(v, r / len);
}

double particle_weight(const Particle& particle, const Vec3& camera_position, const SdfParams& params) {
  const Vec3 r = camera_position - particle.position;
  const double w = params.integrand == Integrand::speed
                       ? norm(particle.velocity)
                       : std::max(0.0, project_velocity(particle.velocity, particle.position, camera_position));
  return w / (1.0 + params.alpha * dot(r, r));
}

double blue_density(int u, int v, const ParticleSnapshot& snapshot, const CameraModel& camera,
                    const SdfParams& params) {
  const Projector projector(camera);
  const double r2 = params.splat_radius * params.splat_radius;
  double sum = 0.0;
  for (const auto& p : snapshot.particles) {
    const auto proj = projector.project_in_frustum(p.position);
    if (!proj) continue;
    const double dx = (u + 0.5) - proj->u;
    const double dy = (v + 0.5) - proj->v;
    if (dx * dx + dy * dy <= r2) sum += particle_weight(p, camera.position, params);
  }
  return params.kappa * sum;
}

std::uint8_t quantize_blue(double density, double normalizer) {
  if (!(normalizer > 0.0)) return 0;
  const double t = std::clamp(density / normalizer, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(t * 255.0));
}

namespace {

using SplatFn = void (*)(std::span<const kernels::SplatPoint>, Resolution, double, std::span<double>);

SdfImage render_with(SplatFn splat, const ParticleSnapshot& snapshot, const CameraModel& camera,
                     const SdfParams& params, const Image* base) {
  params.validate();
  const Projector projector(camera);
  const Resolution res = camera.resolution;
  if (base && base->resolution() != res) throw ConfigError("SDF base frame resolution differs from camera");

  std::vector<kernels::SplatPoint> points;
  points.reserve(snapshot.particles.size());
  for (const auto& p : snapshot.particles) {
    if (const auto proj = projector.project_in_frustum(p.position)) {
      points.push_back({proj->u, proj->v, particle_weight(p, camera.position, params)});
    }
  }

  SdfImage out;
  out.resolution = res;
  out.density.assign(res.pixels(), 0.0);
  splat(points, res, params.splat_radius, out.density);
  double max_density = 0.0;
  for (double& d : out.density) {
    d *= params.kappa;
    max_density = std::max(max_density, d);
  }
  out.normalizer = params.normalization == Normalization::fixed_max ? params.kappa * params.v_ref : max_density;

  out.rgb = Image(res);
  for (int y = 0; y < res.height; ++y) {
    for (int x = 0; x < res.width; ++x) {
      std::uint8_t gray = 0;
      if (base) {
        const Rgb c = base->at(x, y);
        const long luma = 299L * c.r + 587L * c.g + 114L * c.b;
        gray = static_cast<std::uint8_t>(std::lround(params.dim * static_cast<double>(luma) / 1000.0));
      }
      const std::uint8_t blue = std::max(gray, quantize_blue(out.at(x, y), out.normalizer));
      out.rgb.set(x, y, {gray, gray, blue});
    }
  }
  return out;
}

}  // namespace

SdfImage render_sdf(const ParticleSnapshot& snapshot, const CameraModel& camera, const SdfParams& params,
                    const Image* base) {
  return render_with(&kernels::splat_disc_omp, snapshot, camera, params, base);
}

SdfImage render_sdf_serial(const ParticleSnapshot& snapshot, const CameraModel& camera,
                           const SdfParams& params, const Image* base) {
  return render_with(&kernels::splat_disc_serial, snapshot, camera, params, base);
}

PixelIndex max_blue_pixel(const SdfImage& image) {
  PixelIndex best;
  double best_value = -1.0;
  const double scale = image.normalizer > 0.0 ? 1.0 / image.normalizer : 0.0;
  for (int y = 0; y < image.resolution.height; ++y) {
    for (int x = 0; x < image.resolution.width; ++x) {
      const double t = image.at(x, y) * scale;
      if (t > best_value) {
        best_value = t;
        best = {x, y};
      }
    }
  }
  return best;
}

void write_density_sidecar(const std::filesystem::path& path, const SdfImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write density sidecar " + path.string());
  for (double d : image.density) {
    auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(d));
    unsigned char le[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                           static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
    out.write(reinterpret_cast<const char*>(le), 4);
  }
  if (!out) throw IoError("short write on density sidecar " + path.string());
}

std::vector<float> read_density_sidecar(const std::filesystem::path& path, Resolution res) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read density sidecar " + path.string());
  std::vector<float> out(res.pixels());
  for (float& f : out) {
    unsigned char le[4];
    if (!in.read(reinterpret_cast<char*>(le), 4)) throw IoError("density sidecar too short: " + path.string());
    const std::uint32_t bits = le[0] | (le[1] << 8) | (le[2] << 16) | (static_cast<std::uint32_t>(le[3]) << 24);
    f = std::bit_cast<float>(bits);
  }
  return out;
}

}  // namespace sdfforge
