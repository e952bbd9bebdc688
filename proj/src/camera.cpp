#include "sdfforge/camera.hpp"

#include "sdfforge/error.hpp"

namespace sdfforge {

void CameraModel::validate() const {
  if (!(focal_length > 0.0)) throw ConfigError("camera focal_length must be > 0");
  if (resolution.width <= 0 || resolution.height <= 0) throw ConfigError("camera resolution must be > 0");
  if (!(near_plane >= 0.0)) throw ConfigError("camera near_plane must be >= 0");
  if (!is_finite(position) || !is_finite(look_at) || !is_finite(up)) {
    throw ConfigError("camera vectors must be finite");
  }
  const Vec3 view = look_at - position;
  if (norm(view) == 0.0) throw ConfigError("camera look_at coincides with position");
  if (norm(cross(view, up)) <= 1e-12 * norm(view) * norm(up)) {
    throw ConfigError("camera up vector is parallel to the view direction");
  }
}

Projector::Projector(const CameraModel& camera) : camera_(camera) {
  camera_.validate();
  forward_ = normalized(camera_.look_at - camera_.position);
  right_ = normalized(cross(forward_, camera_.up));
  up_ = cross(right_, forward_);
  cx_ = 0.5 * camera_.resolution.width;
  cy_ = 0.5 * camera_.resolution.height;
}

std::optional<Projection> Projector::project(const Vec3& p) const {
  const Vec3 d = p - camera_.position;
  const double depth = dot(d, forward_);
  if (!(depth >= camera_.near_plane) || depth <= 0.0) return std::nullopt;
  const double f = camera_.focal_length / depth;
  return Projection{cx_ + f * dot(d, right_), cy_ - f * dot(d, up_), depth};
}

std::optional<Projection> Projector::project_in_frustum(const Vec3& p) const {
  auto proj = project(p);
  if (!proj) return std::nullopt;
  if (proj->u < 0.0 || proj->v < 0.0 || proj->u > camera_.resolution.width ||
      proj->v > camera_.resolution.height) {
    return std::nullopt;
  }
  return proj;
}

}  // namespace sdfforge
