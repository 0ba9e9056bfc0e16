#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>

namespace semloc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDefaultNearPlane = 0.1;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

// Unit quaternion with w >= 0. Already-unit inputs are left bit-identical so
// that canonicalisation is idempotent.
Quat canonical_quaternion(const Quat& q);

Quat quat_from_rotation_vector(const Vec3& omega);
Vec3 rotation_vector_from_quat(const Quat& q);

/// Camera-to-world rotation `q` and camera centre `t` (meters, world frame).
/// A world point maps to the camera frame as R(q)^T (x - t).
class CameraPose {
 public:
  CameraPose() : q_(Quat::Identity()), t_(Vec3::Zero()) {}
  CameraPose(const Quat& q, const Vec3& t);

  const Quat& rotation() const { return q_; }
  const Vec3& translation() const { return t_; }
  Mat3 rotation_matrix() const { return q_.toRotationMatrix(); }

  Vec3 world_to_camera(const Vec3& x) const;
  Vec3 camera_to_world(const Vec3& x_cam) const;

  bool operator==(const CameraPose& other) const;

 private:
  Quat q_;
  Vec3 t_;
};

/// Correction applied to a coarse pose: rotation pre-multiplied, translation
/// added in the world frame.
class RelativePose {
 public:
  RelativePose() : q_(Quat::Identity()), t_(Vec3::Zero()) {}
  RelativePose(const Quat& q, const Vec3& t);

  const Quat& rotation() const { return q_; }
  const Vec3& translation() const { return t_; }

  RelativePose inverse() const;

 private:
  Quat q_;
  Vec3 t_;
};

struct CameraModel {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  CameraModel() = default;
  CameraModel(double fx, double fy, double cx, double cy, int width, int height);

  // Throws kInvalidArgument when an invariant is violated.
  void validate() const;
  double diagonal() const;
};

struct PixelProjection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

// Returns nothing when the point is behind the near plane or lands outside
// [0, width) x [0, height).
std::optional<PixelProjection> project(const Vec3& x, const CameraPose& pose,
                                       const CameraModel& cam,
                                       double near_plane = kDefaultNearPlane);

// Projection without the raster bounds check (still requires depth > near).
std::optional<PixelProjection> project_unbounded(
    const Vec3& x, const CameraPose& pose, const CameraModel& cam,
    double near_plane = kDefaultNearPlane);

CameraPose compose_correction(const CameraPose& coarse, const RelativePose& delta);

double rotation_angle_deg(const Quat& a, const Quat& b);
double rotation_angle_deg(const CameraPose& a, const CameraPose& b);

}  // namespace semloc
