#include "semloc/geometry.hpp"

#include "semloc/error.hpp"

#include <cmath>
#include <limits>

namespace semloc {

Quat canonical_quaternion(const Quat& q) {
  const double n = q.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    fail(ErrorCode::kInvalidArgument, "quaternion must be finite and non-zero");
  }
  Quat out = q;
  if (std::abs(n - 1.0) > 4.0 * std::numeric_limits<double>::epsilon()) {
    out.coeffs() /= n;
  }
  if (out.w() < 0.0) out.coeffs() = -out.coeffs();
  return out;
}

Quat quat_from_rotation_vector(const Vec3& omega) {
  const double angle = omega.norm();
  if (angle < 1e-12) {
    // Second-order expansion keeps the map smooth through zero.
    Quat q(1.0, 0.5 * omega.x(), 0.5 * omega.y(), 0.5 * omega.z());
    return canonical_quaternion(q);
  }
  return canonical_quaternion(Quat(Eigen::AngleAxisd(angle, omega / angle)));
}

Vec3 rotation_vector_from_quat(const Quat& q) {
  const Quat c = canonical_quaternion(q);
  const Vec3 v = c.vec();
  const double s = v.norm();
  if (s < 1e-15) return 2.0 * v;
  const double angle = 2.0 * std::atan2(s, c.w());
  return v * (angle / s);
}

CameraPose::CameraPose(const Quat& q, const Vec3& t)
    : q_(canonical_quaternion(q)), t_(t) {
  if (!t_.allFinite()) fail(ErrorCode::kInvalidArgument, "pose translation must be finite");
}

Vec3 CameraPose::world_to_camera(const Vec3& x) const {
  return q_.conjugate() * (x - t_);
}

Vec3 CameraPose::camera_to_world(const Vec3& x_cam) const { return q_ * x_cam + t_; }

bool CameraPose::operator==(const CameraPose& other) const {
  return q_.coeffs() == other.q_.coeffs() && t_ == other.t_;
}

RelativePose::RelativePose(const Quat& q, const Vec3& t)
    : q_(canonical_quaternion(q)), t_(t) {
  if (!t_.allFinite()) fail(ErrorCode::kInvalidArgument, "relative translation must be finite");
}

RelativePose RelativePose::inverse() const { return RelativePose(q_.conjugate(), -t_); }

CameraModel::CameraModel(double fx_, double fy_, double cx_, double cy_, int width_,
                         int height_)
    : fx(fx_), fy(fy_), cx(cx_), cy(cy_), width(width_), height(height_) {
  validate();
}

void CameraModel::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) fail(ErrorCode::kInvalidArgument, "focal lengths must be positive");
  if (width <= 0 || height <= 0) fail(ErrorCode::kInvalidArgument, "raster size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    fail(ErrorCode::kInvalidArgument, "principal point must lie inside the raster");
  }
}

double CameraModel::diagonal() const {
  return std::hypot(static_cast<double>(width), static_cast<double>(height));
}

std::optional<PixelProjection> project_unbounded(const Vec3& x, const CameraPose& pose,
                                                 const CameraModel& cam,
                                                 double near_plane) {
  const Vec3 xc = pose.world_to_camera(x);
  if (!(xc.z() > near_plane)) return std::nullopt;
  return PixelProjection{cam.fx * xc.x() / xc.z() + cam.cx,
                         cam.fy * xc.y() / xc.z() + cam.cy, xc.z()};
}

std::optional<PixelProjection> project(const Vec3& x, const CameraPose& pose,
                                       const CameraModel& cam, double near_plane) {
  auto p = project_unbounded(x, pose, cam, near_plane);
  if (!p) return std::nullopt;
  if (!(p->u >= 0.0 && p->u < cam.width && p->v >= 0.0 && p->v < cam.height)) {
    return std::nullopt;
  }
  return p;
}

CameraPose compose_correction(const CameraPose& coarse, const RelativePose& delta) {
  return CameraPose(delta.rotation() * coarse.rotation(),
                    coarse.translation() + delta.translation());
}

double rotation_angle_deg(const Quat& a, const Quat& b) {
  // 2 acos(|<a,b>|) evaluated through atan2 for accuracy near zero.
  const Quat rel = a.conjugate() * b;
  const double s = rel.vec().norm();
  const double c = std::abs(rel.w());
  return rad2deg(2.0 * std::atan2(s, c));
}

double rotation_angle_deg(const CameraPose& a, const CameraPose& b) {
  return rotation_angle_deg(a.rotation(), b.rotation());
}

}  // namespace semloc
