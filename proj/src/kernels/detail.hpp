#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "sdfforge/kernels.hpp"

namespace sdfforge::kernels::detail {

// Row-bucketed point lists (CSR), preserving point order within each row.
struct RowBuckets {
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> points;
};

inline bool row_span(const SplatPoint& p, int height, double radius, int& lo, int& hi) {
  if (!std::isfinite(p.u) || !std::isfinite(p.v)) return false;
  lo = std::max(0, static_cast<int>(std::floor(p.v - radius - 0.5)));
  hi = std::min(height - 1, static_cast<int>(std::ceil(p.v + radius - 0.5)));
  return lo <= hi;
}

inline RowBuckets bucket_rows(std::span<const SplatPoint> points, int height, double radius) {
  RowBuckets b;
  b.offsets.assign(static_cast<std::size_t>(height) + 1, 0);
  int lo, hi;
  for (const auto& p : points) {
    if (!row_span(p, height, radius, lo, hi)) continue;
    for (int y = lo; y <= hi; ++y) ++b.offsets[y + 1];
  }
  for (int y = 0; y < height; ++y) b.offsets[y + 1] += b.offsets[y];
  b.points.resize(b.offsets[height]);
  std::vector<std::size_t> cursor(b.offsets.begin(), b.offsets.end() - 1);
  for (std::uint32_t i = 0; i < points.size(); ++i) {
    if (!row_span(points[i], height, radius, lo, hi)) continue;
    for (int y = lo; y <= hi; ++y) b.points[cursor[y]++] = i;
  }
  return b;
}

inline void splat_row(std::span<const SplatPoint> points, const RowBuckets& b, int y, int width,
                      double radius, double* row) {
  const double r2 = radius * radius;
  const double cy = y + 0.5;
  for (std::size_t k = b.offsets[y]; k < b.offsets[y + 1]; ++k) {
    const SplatPoint& p = points[b.points[k]];
    const double dy = cy - p.v;
    const double rem = r2 - dy * dy;
    if (rem < 0.0) continue;
    const double half = std::sqrt(rem);
    const int lo = std::max(0, static_cast<int>(std::floor(p.u - half - 0.5)));
    const int hi = std::min(width - 1, static_cast<int>(std::ceil(p.u + half - 0.5)));
    for (int x = lo; x <= hi; ++x) {
      const double dx = (x + 0.5) - p.u;
      if (dx * dx + dy * dy <= r2) row[x] += p.weight;
    }
  }
}

inline bool integrate_one(Particle& q, const IntegrationParams& prm) {
  Vec3 v = (q.velocity + prm.gravity * prm.dt) * (1.0 - prm.damping);
  const double speed = norm(v);
  if (speed > prm.v_max) v = v * (prm.v_max / speed);
  Vec3 p = q.position + v * prm.dt;
  for (int a = 0; a < 3; ++a) {
    if (p[a] < prm.container.min[a]) {
      p[a] = prm.container.min[a];
      if (v[a] < 0.0) v[a] = -prm.restitution * v[a];
    } else if (p[a] > prm.container.max[a]) {
      p[a] = prm.container.max[a];
      if (v[a] > 0.0) v[a] = -prm.restitution * v[a];
    }
  }
  q.position = p;
  q.velocity = v;
  return is_finite(p) && is_finite(v);
}

}  // namespace sdfforge::kernels::detail
