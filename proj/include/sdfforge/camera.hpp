#pragma once

#include <optional>

#include "sdfforge/image.hpp"
#include "sdfforge/vec3.hpp"

namespace sdfforge {

// Pinhole camera. Pixel (i, j) has its center at (i + 0.5, j + 0.5); the
// principal point is the image center, image v grows downward.
struct CameraModel {
  Vec3 position{0.0, 0.0, 1.0};
  Vec3 look_at{0.0, 0.0, 0.0};
  Vec3 up{0.0, 1.0, 0.0};
  double focal_length = 64.0;  // pixels
  Resolution resolution{64, 64};
  double near_plane = 0.01;  // meters

  // Throws ConfigError.
  void validate() const;
};

struct Projection {
  double u = 0.0;      // pixel x
  double v = 0.0;      // pixel y
  double depth = 0.0;  // distance along the optical axis, meters
};

class Projector {
 public:
  explicit Projector(const CameraModel& camera);

  // Empty when depth < near_plane (behind the camera or too close).
  std::optional<Projection> project(const Vec3& p) const;

  // Frustum test: in front of the near plane and inside the image rectangle.
  std::optional<Projection> project_in_frustum(const Vec3& p) const;

  const CameraModel& camera() const { return camera_; }

 private:
  CameraModel camera_;
  Vec3 forward_;
  Vec3 right_;
  Vec3 up_;
  double cx_;
  double cy_;
};

}  // namespace sdfforge
