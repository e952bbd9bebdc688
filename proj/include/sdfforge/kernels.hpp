#pragma once

// Data-parallel inner loops. Every *_omp kernel has a *_serial twin that
// must produce bit-identical output; the serial versions are what the tests
// and the benchmark compare against.

#include <span>
#include <vector>

#include "sdfforge/image.hpp"
#include "sdfforge/sim.hpp"

namespace sdfforge::kernels {

struct SplatPoint {
  double u = 0.0;
  double v = 0.0;
  double weight = 0.0;
};

// out[y * width + x] += weight of every point whose disc of `radius` covers
// the pixel center. Per pixel, contributions are added in point order.
void splat_disc_omp(std::span<const SplatPoint> points, Resolution res, double radius,
                    std::span<double> out);
void splat_disc_serial(std::span<const SplatPoint> points, Resolution res, double radius,
                       std::span<double> out);

struct IntegrationParams {
  Vec3 gravity;
  double damping = 0.0;
  double dt = 0.0;
  double v_max = 0.0;
  double restitution = 0.0;
  Box container;
};

// Returns false if any particle ended non-finite.
bool integrate_omp(std::span<Particle> particles, const IntegrationParams& params);
bool integrate_serial(std::span<Particle> particles, const IntegrationParams& params);

inline constexpr int kFeatureSide = 32;

// 32x32 box-downsampled luma (integer weights 299/587/114), mean subtracted.
std::vector<double> luminance_feature(const Image& image);

void luminance_features_omp(std::span<const Image* const> images, std::span<std::vector<double>> out);
void luminance_features_serial(std::span<const Image* const> images, std::span<std::vector<double>> out);

}  // namespace sdfforge::kernels
