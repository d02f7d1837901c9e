#pragma once

#include "splatprop/propagation.hpp"

#include <random>

namespace splatprop {

struct GeometricFilterConfig {
  double max_reproj_px = 2.0;
  double max_rel_depth_err = 0.01;
  double max_normal_angle_deg = 10.0;
  int min_consistent = 1;  // neighbor views that must agree
  int num_neighbor_views = 3;
  int threads = 1;
};

/// Cross-view consistency check for one view's propagated maps. maps[i] may
/// be null for views that have no propagated maps yet; those cannot confirm
/// anything. The returned maps equal the input with the valid mask tightened.
PropagatedMaps geometric_filter_view(size_t ref, const std::vector<CameraView>& views,
                                     const std::vector<const PropagatedMaps*>& maps,
                                     const GeometricFilterConfig& cfg = {});

/// Filters every view against the others.
std::vector<PropagatedMaps> geometric_filter(const std::vector<CameraView>& views,
                                             const std::vector<PropagatedMaps>& maps,
                                             const GeometricFilterConfig& cfg = {});

/// Pixels worth growing new Gaussians at: filtered-valid pixels that are
/// either uncovered (rendered alpha < 1e-3) or whose rendered depth deviates
/// from the filtered depth by more than sigma in relative terms (the filtered
/// depth is the denominator).
MaskImage select_growth_pixels(const PropagatedMaps& filtered, const GrayImage& rendered_depth,
                               const GrayImage& rendered_alpha, double sigma);

struct SpawnConfig {
  int stride = 2;  // keep every stride-th masked pixel per axis
  int knn = 3;     // isotropic scale = mean distance to this many nearest points
  double opacity = 0.1;
  double fallback_scale = 0.1;  // when no neighbor points exist at all
};

/// Back-projects the masked pixels through the filtered depth and appends new
/// Gaussians: image color, opacity 0.1, isotropic knn scale, rotation chosen
/// so the shortest axis matches the filtered normal. Returns the number of
/// appended Gaussians.
size_t spawn_gaussians(const MaskImage& mask, const PropagatedMaps& filtered,
                       const CameraView& view, GaussianCloud& cloud,
                       const SpawnConfig& cfg = {});

struct DensifyConfig {
  double grad_threshold = 2e-4;  // mean screen-space positional gradient norm
  double percent_dense = 0.01;   // split when max scale > percent_dense * extent
  double split_scale_divisor = 1.6;
  int split_children = 2;
  double opacity_floor = 0.005;
};

struct DensifyStats {
  std::vector<uint8_t> kept_of_old;  // survivors of the pre-call cloud, in order
  size_t appended = 0;               // clones + split children, added at the end
  size_t cloned = 0;
  size_t split_parents = 0;
  size_t pruned = 0;
};

/// Gradient-driven clone/split plus opacity pruning, 3DGS-style. Split
/// children sample their positions from the parent distribution via rng.
/// Resets the cloud's accumulated statistics.
DensifyStats clone_split_prune(GaussianCloud& cloud, double scene_extent,
                               const DensifyConfig& cfg, std::mt19937_64& rng);

}  // namespace splatprop
