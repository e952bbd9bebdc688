#include <omp.h>

#include <algorithm>

#include "detail.hpp"

namespace sdfforge::kernels {

void splat_disc_omp(std::span<const SplatPoint> points, Resolution res, double radius,
                    std::span<double> out) {
  const auto buckets = detail::bucket_rows(points, res.height, radius);
#pragma omp parallel for schedule(dynamic, 4)
  for (int y = 0; y < res.height; ++y) {
    detail::splat_row(points, buckets, y, res.width, radius, out.data() + static_cast<std::size_t>(y) * res.width);
  }
}

bool integrate_omp(std::span<Particle> particles, const IntegrationParams& params) {
  const auto n = static_cast<std::ptrdiff_t>(particles.size());
  int bad = 0;
#pragma omp parallel for reduction(+ : bad)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (!detail::integrate_one(particles[i], params)) ++bad;
  }
  return bad == 0;
}

void luminance_features_omp(std::span<const Image* const> images, std::span<std::vector<double>> out) {
  const auto n = static_cast<std::ptrdiff_t>(images.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = luminance_feature(*images[i]);
}

}  // namespace sdfforge::kernels
