#include "splatprop/camera.hpp"

#include <cmath>
#include <stdexcept>

namespace splatprop {

Mat3 Intrinsics::matrix() const {
  Mat3 K = Mat3::Identity();
  K(0, 0) = fx;
  K(1, 1) = fy;
  K(0, 2) = cx;
  K(1, 2) = cy;
  return K;
}

Mat3 Intrinsics::inverse_matrix() const {
  Mat3 Kinv = Mat3::Identity();
  Kinv(0, 0) = 1.0 / fx;
  Kinv(1, 1) = 1.0 / fy;
  Kinv(0, 2) = -cx / fx;
  Kinv(1, 2) = -cy / fy;
  return Kinv;
}

Vec3 Intrinsics::pixel_ray(const Vec2& pixel) const {
  return Vec3((pixel.x() - cx) / fx, (pixel.y() - cy) / fy, 1.0);
}

bool Pose::orthonormal(double tol) const {
  const Mat3 err = rotation.transpose() * rotation - Mat3::Identity();
  return err.norm() < tol && rotation.determinant() > 0.0;
}

std::optional<PixelDepth> project(const Intrinsics& K, const Pose& pose, const Vec3& x_world) {
  const Vec3 x_cam = pose.to_camera(x_world);
  if (x_cam.z() <= 0.0) return std::nullopt;
  const double inv_z = 1.0 / x_cam.z();
  return PixelDepth{Vec2(K.fx * x_cam.x() * inv_z + K.cx, K.fy * x_cam.y() * inv_z + K.cy),
                    x_cam.z()};
}

Vec3 backproject(const Intrinsics& K, const Vec2& pixel, double z, const Pose& pose) {
  return pose.to_world(backproject_camera(K, pixel, z));
}

Vec3 backproject_camera(const Intrinsics& K, const Vec2& pixel, double z) {
  if (!(z > 0.0)) throw std::invalid_argument("backproject: depth must be positive");
  return z * K.pixel_ray(pixel);
}

RelativePose relative_transform(const Pose& ref, const Pose& src) {
  RelativePose rel;
  rel.rotation = src.rotation * ref.rotation.transpose();
  rel.translation = src.translation - rel.rotation * ref.translation;
  return rel;
}

Mat3 homography(const Intrinsics& K, const RelativePose& rel, const PlaneHypothesis& plane) {
  return homography(K, K, rel, plane);
}

Mat3 homography(const Intrinsics& K_ref, const Intrinsics& K_src, const RelativePose& rel,
                const PlaneHypothesis& plane) {
  if (!plane.valid()) throw std::invalid_argument("homography: invalid plane hypothesis");
  // The textbook product K (W - t n^T / d) K^-1 expects the camera-facing
  // normal, for which the plane reads n^T X + d = 0. The hypothesis stores
  // the opposite orientation (n^T X = d with n . K^-1 p~ > 0), so flip.
  const Vec3 n_facing = -plane.normal;
  const Mat3 mid = rel.rotation - (rel.translation * n_facing.transpose()) / plane.distance;
  return K_src.matrix() * mid * K_ref.inverse_matrix();
}

std::optional<Vec2> warp_pixel(const Mat3& H, const Vec2& pixel) {
  const Vec3 q = H * Vec3(pixel.x(), pixel.y(), 1.0);
  if (std::abs(q.z()) < 1e-12) return std::nullopt;
  return Vec2(q.x() / q.z(), q.y() / q.z());
}

Pose look_at_pose(const Vec3& eye, const Vec3& target, const Vec3& world_up) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(world_up);
  if (right.norm() < 1e-12) {
    // forward parallel to up: pick any perpendicular axis
    right = forward.cross(Vec3::UnitX());
    if (right.norm() < 1e-12) right = forward.cross(Vec3::UnitY());
  }
  right.normalize();
  const Vec3 down = forward.cross(right);  // image y grows down

  Pose pose;
  pose.rotation.row(0) = right;
  pose.rotation.row(1) = down;
  pose.rotation.row(2) = forward;
  pose.translation = -pose.rotation * eye;
  return pose;
}

}  // namespace splatprop
