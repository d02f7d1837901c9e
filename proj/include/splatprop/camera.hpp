#pragma once

#include <Eigen/Dense>

#include <optional>

namespace splatprop {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Pinhole intrinsics. Convention: right-handed, camera looks down +z,
/// image x right / y down, pixel centers at integer coordinates.
struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  Mat3 matrix() const;
  Mat3 inverse_matrix() const;

  /// K^-1 * (u, v, 1): the camera-frame ray with z = 1.
  Vec3 pixel_ray(const Vec2& pixel) const;

  bool contains(const Vec2& pixel) const {
    return pixel.x() >= 0.0 && pixel.x() <= width - 1.0 && pixel.y() >= 0.0 &&
           pixel.y() <= height - 1.0;
  }

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && cx > 0.0 && cx < width && cy > 0.0 && cy < height;
  }
};

/// World-to-camera rigid transform: x_cam = rotation * x_world + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 to_camera(const Vec3& x_world) const { return rotation * x_world + translation; }
  Vec3 to_world(const Vec3& x_cam) const { return rotation.transpose() * (x_cam - translation); }

  /// Camera center in world coordinates, -R^T t.
  Vec3 center() const { return -rotation.transpose() * translation; }

  /// ||R^T R - I|| and det(R) check.
  bool orthonormal(double tol = 1e-9) const;
};

/// Maps reference-camera coordinates to neighbor-camera coordinates.
struct RelativePose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& x_ref) const { return rotation * x_ref + translation; }
};

/// Local plane in a camera frame: n^T x = d with d > 0 and n oriented so that
/// n^T (K^-1 p~) > 0 at the owner pixel. d == 0 marks an invalid hypothesis.
struct PlaneHypothesis {
  Vec3 normal = Vec3::Zero();
  double distance = 0.0;

  bool valid() const { return distance > 0.0; }
  static PlaneHypothesis invalid() { return {}; }
};

struct PixelDepth {
  Vec2 pixel;
  double depth;
};

/// Projects a world point; empty when the point lies at or behind the camera.
std::optional<PixelDepth> project(const Intrinsics& K, const Pose& pose, const Vec3& x_world);

/// Inverse of project for depth z > 0. Throws std::invalid_argument on z <= 0.
Vec3 backproject(const Intrinsics& K, const Vec2& pixel, double z, const Pose& pose);

/// Camera-frame variant: z * K^-1 * p~.
Vec3 backproject_camera(const Intrinsics& K, const Vec2& pixel, double z);

/// rel maps ref-camera coords to src-camera coords: W_rel = W_src W_ref^T,
/// t_rel = t_src - W_rel t_ref.
RelativePose relative_transform(const Pose& ref, const Pose& src);

/// Plane-induced homography H = K (W_rel - t_rel n^T / d) K^-1 from the
/// reference view to the neighbor view. Requires plane.valid().
Mat3 homography(const Intrinsics& K, const RelativePose& rel, const PlaneHypothesis& plane);

/// Two-intrinsics variant for views with different calibrations.
Mat3 homography(const Intrinsics& K_ref, const Intrinsics& K_src, const RelativePose& rel,
                const PlaneHypothesis& plane);

/// Applies H to a pixel and normalizes; empty when |w| < 1e-12.
std::optional<Vec2> warp_pixel(const Mat3& H, const Vec2& pixel);

/// World-to-camera pose with the camera at eye looking at target; image y is
/// aligned with -world_up (y grows down).
Pose look_at_pose(const Vec3& eye, const Vec3& target, const Vec3& world_up);

}  // namespace splatprop
