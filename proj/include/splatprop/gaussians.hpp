#pragma once

#include "splatprop/camera.hpp"

#include <filesystem>
#include <vector>

namespace splatprop {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// One anisotropic 3D Gaussian. Raw (unactivated) parameters:
///   rotation  - quaternion (w, x, y, z), renormalized before use
///   log_scales - exp() gives the axis lengths in meters
///   opacity_raw - sigmoid() gives opacity in (0,1)
///   color     - degree-0 RGB in [0,1]
struct Gaussian {
  Vec3 position = Vec3::Zero();
  Vec4 rotation = Vec4(1.0, 0.0, 0.0, 0.0);
  Vec3 log_scales = Vec3::Zero();
  double opacity_raw = 0.0;
  Vec3 color = Vec3::Zero();

  // Per-component std::exp: Eigen's vectorized exp may differ by one ulp
  // between SIMD lanes, which would break exact ties in the argmin axis.
  Vec3 scales() const {
    return Vec3(std::exp(log_scales[0]), std::exp(log_scales[1]), std::exp(log_scales[2]));
  }
  double opacity() const { return sigmoid(opacity_raw); }
};

/// Rotation matrix of a (not necessarily unit) quaternion (w, x, y, z).
Mat3 rotation_matrix(const Vec4& quaternion);

/// Inverse of rotation_matrix; returns a unit quaternion with w >= 0.
Vec4 quaternion_from_rotation(const Mat3& R);

/// Sigma = R diag(s^2) R^T.
Mat3 covariance(const Gaussian& g);

/// z-component of W mu + t. May be negative; the renderer culls.
double view_depth(const Gaussian& g, const Pose& pose);

/// Unit direction of the shortest covariance axis, sign-flipped so that
/// n . (camera_center - mu) > 0. Scale ties break toward the smallest index.
Vec3 shortest_axis_normal(const Gaussian& g, const Vec3& camera_center);

/// Structure-of-arrays Gaussian set plus the densification statistics
/// accumulated from render backward passes.
struct GaussianCloud {
  std::vector<Vec3> positions;
  std::vector<Vec4> rotations;
  std::vector<Vec3> log_scales;
  std::vector<double> opacities_raw;
  std::vector<Vec3> colors;

  // Accumulated 2D positional-gradient norms and visibility counts.
  std::vector<double> grad2d_accum;
  std::vector<int> seen_count;

  size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }

  Gaussian get(size_t i) const {
    return Gaussian{positions[i], rotations[i], log_scales[i], opacities_raw[i], colors[i]};
  }

  void append(const Gaussian& g);
  void reserve(size_t n);

  /// Removes the Gaussians flagged in keep[i] == false. Order is preserved.
  void compact(const std::vector<uint8_t>& keep);

  void reset_stats();

  /// All field arrays must stay the same length.
  bool consistent() const;
};

/// Binary little-endian PLY with properties x,y,z, nx,ny,nz (shortest-axis
/// direction), red,green,blue, opacity, scale_0..2, rot_0..3. Raw opacity and
/// log scales are stored so the parameterization round-trips.
void save_ply(const std::filesystem::path& path, const GaussianCloud& cloud);
GaussianCloud load_ply(const std::filesystem::path& path);

}  // namespace splatprop
