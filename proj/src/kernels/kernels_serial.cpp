#include "detail.hpp"

namespace sdfforge::kernels {

void splat_disc_serial(std::span<const SplatPoint> points, Resolution res, double radius,
                       std::span<double> out) {
  const auto buckets = detail::bucket_rows(points, res.height, radius);
  for (int y = 0; y < res.height; ++y) {
    detail::splat_row(points, buckets, y, res.width, radius, out.data() + static_cast<std::size_t>(y) * res.width);
  }
}

bool integrate_serial(std::span<Particle> particles, const IntegrationParams& params) {
  bool ok = true;
  for (auto& p : particles) ok = detail::integrate_one(p, params) && ok;
  return ok;
}

void luminance_features_serial(std::span<const Image* const> images, std::span<std::vector<double>> out) {
  for (std::size_t i = 0; i < images.size(); ++i) out[i] = luminance_feature(*images[i]);
}

std::vector<double> luminance_feature(const Image& image) {
  const int w = image.width();
  const int h = image.height();
  const auto& px = image.bytes();
  std::vector<double> f(static_cast<std::size_t>(kFeatureSide) * kFeatureSide);
  auto cell_range = [](int i, int extent, int& lo, int& hi) {
    lo = std::min(extent - 1, static_cast<int>(static_cast<long>(i) * extent / kFeatureSide));
    hi = std::max(lo + 1, static_cast<int>(static_cast<long>(i + 1) * extent / kFeatureSide));
  };
  for (int cy = 0; cy < kFeatureSide; ++cy) {
    int y0, y1;
    cell_range(cy, h, y0, y1);
    for (int cx = 0; cx < kFeatureSide; ++cx) {
      int x0, x1;
      cell_range(cx, w, x0, x1);
      long sum = 0;
      for (int y = y0; y < y1; ++y) {
        const std::uint8_t* row = &px[(static_cast<std::size_t>(y) * w) * 3];
        for (int x = x0; x < x1; ++x) {
          sum += 299L * row[3 * x] + 587L * row[3 * x + 1] + 114L * row[3 * x + 2];
        }
      }
      f[cy * kFeatureSide + cx] = static_cast<double>(sum) / ((y1 - y0) * (x1 - x0));
    }
  }
  double mean = 0.0;
  for (double v : f) mean += v;
  mean /= static_cast<double>(f.size());
  for (double& v : f) v -= mean;
  return f;
}

}  // namespace sdfforge::kernels
