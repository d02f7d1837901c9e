#pragma once

#include "splatprop/renderer.hpp"
#include "splatprop/view.hpp"

#include <optional>
#include <vector>

namespace splatprop {

struct PropagationConfig {
  int patch_radius = 5;        // 11x11 grayscale patches
  int num_iterations = 3;      // checkerboard sweeps
  double ncc_min = 0.1;        // scores below this mark the pixel invalid (-1 disables)
  int num_neighbor_views = 3;  // nearest views used for matching
  enum class PhaseOrder { EvenOdd, OddEven } phase_order = PhaseOrder::EvenOdd;
  double init_alpha_min = 1e-3;  // rendered pixels below this start without a hypothesis
  double max_oob_fraction = 0.3;
  double min_patch_variance = 1e-8;
  int threads = 1;

  /// Throws std::invalid_argument on violated invariants (u >= 1, radius >= 2).
  void validate() const;
};

/// Checkerboard color of a pixel: even means (x + y) % 2 == 0.
enum class CheckerPhase { Even, Odd };
inline CheckerPhase checker_color(int x, int y) {
  return ((x + y) & 1) == 0 ? CheckerPhase::Even : CheckerPhase::Odd;
}

/// Eq. d = z n^T K^-1 p~ with n re-oriented so the hypothesis has d > 0.
/// Grazing planes (|n^T K^-1 p~| < 1e-9) yield an invalid hypothesis.
PlaneHypothesis plane_from_pixel(const Vec2& pixel, double z, const Vec3& normal,
                                 const Intrinsics& K);

struct DepthNormal {
  double depth;
  Vec3 normal;
};

/// z = d / (n^T K^-1 p~); empty when the decoded depth is non-positive or
/// non-finite. The normal is returned unchanged (hypothesis orientation).
std::optional<DepthNormal> depth_normal_from_plane(const Vec2& pixel, const PlaneHypothesis& h,
                                                   const Intrinsics& K);

using HypothesisGrid = Grid<PlaneHypothesis>;

/// The pixel's own hypothesis plus the valid hypotheses of its four nearest
/// neighbors (always the opposite checkerboard color). Border pixels get
/// fewer candidates; invalid entries are skipped.
std::vector<PlaneHypothesis> candidate_set(int x, int y, CheckerPhase phase,
                                           const HypothesisGrid& grid);

/// Zero-mean NCC of the 11x11 luma patch around `pixel` against its
/// homography warp into src. Returns -1 for invalid warps, patches with more
/// than max_oob_fraction out-of-bounds samples, or degenerate variance.
double ncc_score(const CameraView& ref, const CameraView& src, const Vec2& pixel,
                 const PlaneHypothesis& h, const PropagationConfig& cfg = {});

struct PropagatedMaps {
  GrayImage depth;
  ColorImage normal;  // camera frame, oriented toward the camera
  GrayImage score;    // best aggregated NCC per pixel (-1 where unscored)
  MaskImage valid;

  PropagatedMaps() = default;
  PropagatedMaps(int w, int h)
      : depth(w, h, 0.0), normal(w, h, Vec3::Zero()), score(w, h, -1.0), valid(w, h, 0) {}
};

/// Indices of the views closest to views[ref] by camera-center distance.
std::vector<size_t> select_neighbor_views(const std::vector<CameraView>& views, size_t ref,
                                          int count);

/// PatchMatch-style propagation: hypotheses start from the rendered
/// depth/normal maps, then alternate checkerboard sweeps adopt the neighbor
/// candidate with the best aggregated NCC (mean of the best min(3, available)
/// per-view scores). Ties keep the incumbent.
PropagatedMaps propagate(const CameraView& ref, const std::vector<const CameraView*>& neighbors,
                         const GeoMaps& rendered, const PropagationConfig& cfg);

}  // namespace splatprop
