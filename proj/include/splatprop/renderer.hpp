#pragma once

#include "splatprop/gaussians.hpp"
#include "splatprop/view.hpp"

#include <optional>

namespace splatprop {

struct RenderConfig {
  int tile_size = 16;
  double near_plane = 0.01;
  double covariance_dilation = 0.3;  // pixels^2, added to the 2D covariance diagonal
  double alpha_clamp = 0.99;
  double transmittance_min = 1e-4;  // front-to-back termination
  double alpha_norm_min = 1e-3;     // below this, depth/normal stay un-normalized
  // Tile coverage radius in units of the largest 2D standard deviation. Large
  // enough that contributions dropped by tiling stay below 1e-9 opacity.
  double coverage_sigma = 6.5;
  int threads = 1;
};

/// Screen-space footprint of one Gaussian after EWA projection.
struct Projected2DGaussian {
  Vec2 mean2 = Vec2::Zero();
  Mat2 cov2 = Mat2::Zero();   // dilated 2D covariance, pixels^2
  Mat2 conic = Mat2::Zero();  // cov2^-1
  double depth = 0.0;
  Vec3 normal_cam = Vec3::Zero();  // camera-frame, oriented toward the camera
  double opacity = 0.0;
  Vec3 color = Vec3::Zero();
  Vec3 p_cam = Vec3::Zero();
  uint32_t index = 0;
};

/// Rendered raster buffers. Color and alpha follow the plain front-to-back
/// blend; depth is divided by accumulated alpha and the normal renormalized
/// wherever alpha exceeds alpha_norm_min.
struct GeoMaps {
  ColorImage color;
  GrayImage depth;
  ColorImage normal;
  GrayImage alpha;
};

/// Upstream gradients with respect to the post-processed GeoMaps. Empty
/// members are treated as zero.
struct MapGradients {
  ColorImage d_color;
  GrayImage d_depth;
  ColorImage d_normal;
  GrayImage d_alpha;
};

/// Per-parameter gradients plus the densification statistics of one backward
/// pass (screen-space positional gradient norm and a visibility flag).
struct CloudGradients {
  std::vector<Vec3> d_position;
  std::vector<Vec4> d_rotation;
  std::vector<Vec3> d_log_scales;
  std::vector<double> d_opacity_raw;
  std::vector<Vec3> d_color;
  std::vector<double> grad2d_norm;
  std::vector<uint8_t> seen;

  void resize(size_t n);
};

/// EWA projection of one Gaussian; empty when the Gaussian is culled
/// (depth <= near plane, or a degenerate 2D covariance).
std::optional<Projected2DGaussian> project_to_2d(const Gaussian& g, const Intrinsics& K,
                                                 const Pose& pose,
                                                 const RenderConfig& cfg = {});

GeoMaps render(const Intrinsics& K, const Pose& pose, const GaussianCloud& cloud,
               const RenderConfig& cfg = {});
GeoMaps render(const CameraView& view, const GaussianCloud& cloud, const RenderConfig& cfg = {});

CloudGradients render_backward(const Intrinsics& K, const Pose& pose, const GaussianCloud& cloud,
                               const MapGradients& upstream, const RenderConfig& cfg = {});
CloudGradients render_backward(const CameraView& view, const GaussianCloud& cloud,
                               const MapGradients& upstream, const RenderConfig& cfg = {});

}  // namespace splatprop
