#include "splatprop/propagation.hpp"

#include "splatprop/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace splatprop {

void PropagationConfig::validate() const {
  if (num_iterations < 1) throw std::invalid_argument("propagation: num_iterations must be >= 1");
  if (patch_radius < 2) throw std::invalid_argument("propagation: patch_radius must be >= 2");
  if (num_neighbor_views < 1)
    throw std::invalid_argument("propagation: num_neighbor_views must be >= 1");
}

PlaneHypothesis plane_from_pixel(const Vec2& pixel, double z, const Vec3& normal,
                                 const Intrinsics& K) {
  if (!(z > 0.0)) return PlaneHypothesis::invalid();
  const double nn = normal.norm();
  if (nn < 1e-9) return PlaneHypothesis::invalid();
  const Vec3 n = normal / nn;
  const double along_ray = n.dot(K.pixel_ray(pixel));
  if (std::abs(along_ray) < 1e-9) return PlaneHypothesis::invalid();
  PlaneHypothesis h;
  h.distance = z * along_ray;
  h.normal = n;
  if (h.distance < 0.0) {  // re-orient so d is a true positive distance
    h.distance = -h.distance;
    h.normal = -n;
  }
  return h;
}

std::optional<DepthNormal> depth_normal_from_plane(const Vec2& pixel, const PlaneHypothesis& h,
                                                   const Intrinsics& K) {
  if (!h.valid()) return std::nullopt;
  const double along_ray = h.normal.dot(K.pixel_ray(pixel));
  if (along_ray < 1e-12) return std::nullopt;
  const double z = h.distance / along_ray;
  if (!(z > 0.0) || !std::isfinite(z)) return std::nullopt;
  return DepthNormal{z, h.normal};
}

std::vector<PlaneHypothesis> candidate_set(int x, int y, CheckerPhase /*phase*/,
                                           const HypothesisGrid& grid) {
  std::vector<PlaneHypothesis> out;
  out.reserve(5);
  if (grid.at(x, y).valid()) out.push_back(grid.at(x, y));
  constexpr int dx[4] = {0, 0, -1, 1};
  constexpr int dy[4] = {-1, 1, 0, 0};
  for (int k = 0; k < 4; ++k) {
    const int nx = x + dx[k], ny = y + dy[k];
    if (!grid.inside(nx, ny)) continue;
    if (grid.at(nx, ny).valid()) out.push_back(grid.at(nx, ny));
  }
  return out;
}

namespace {

struct MatchView {
  const GrayImage* gray;
  Intrinsics intrinsics;
  RelativePose rel;  // reference camera -> this camera
};

double ncc_against_view(const GrayImage& ref_gray, const Intrinsics& ref_K, const MatchView& mv,
                        const Vec2& pixel, const PlaneHypothesis& h,
                        const PropagationConfig& cfg) {
  if (!h.valid()) return -1.0;
  Mat3 H;
  try {
    H = homography(ref_K, mv.intrinsics, mv.rel, h);
  } catch (const std::invalid_argument&) {
    return -1.0;
  }
  {
    const Vec3 center = H * Vec3(pixel.x(), pixel.y(), 1.0);
    if (center.z() < 1e-12) return -1.0;  // degenerate or behind the neighbor camera
  }

  // The patch is the (2r+1)^2 window clipped to the reference image; warped
  // samples that fall outside the neighbor view count as out-of-bounds.
  const int r = cfg.patch_radius;
  const int full = (2 * r + 1) * (2 * r + 1);
  int in_ref = 0, used = 0;
  double sum_a = 0.0, sum_b = 0.0, sum_aa = 0.0, sum_bb = 0.0, sum_ab = 0.0;
  const int px = int(std::lround(pixel.x()));
  const int py = int(std::lround(pixel.y()));
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const int rx = px + dx, ry = py + dy;
      if (!ref_gray.inside(rx, ry)) continue;
      ++in_ref;
      const Vec3 q = H * Vec3(rx, ry, 1.0);
      if (q.z() < 1e-12) continue;
      double b;
      if (!sample_bilinear(*mv.gray, Vec2(q.x() / q.z(), q.y() / q.z()), &b)) continue;
      const double a = ref_gray.at(rx, ry);
      sum_a += a;
      sum_b += b;
      sum_aa += a * a;
      sum_bb += b * b;
      sum_ab += a * b;
      ++used;
    }
  }
  if (in_ref < full / 4) return -1.0;  // degenerate sliver at an image corner
  if (used < in_ref * (1.0 - cfg.max_oob_fraction)) return -1.0;

  const double inv_n = 1.0 / used;
  const double var_a = (sum_aa - sum_a * sum_a * inv_n) * inv_n;
  const double var_b = (sum_bb - sum_b * sum_b * inv_n) * inv_n;
  if (var_a < cfg.min_patch_variance || var_b < cfg.min_patch_variance) return -1.0;
  const double cov = (sum_ab - sum_a * sum_b * inv_n) * inv_n;
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

// Mean of the best min(3, available) per-view NCC scores.
double aggregate_score(const GrayImage& ref_gray, const Intrinsics& ref_K,
                       const std::vector<MatchView>& views, const Vec2& pixel,
                       const PlaneHypothesis& h, const PropagationConfig& cfg) {
  if (views.empty()) return -1.0;
  std::vector<double> scores;
  scores.reserve(views.size());
  for (const MatchView& mv : views) scores.push_back(ncc_against_view(ref_gray, ref_K, mv, pixel, h, cfg));
  std::sort(scores.begin(), scores.end(), std::greater<double>());
  const size_t use = std::min<size_t>(3, scores.size());
  double sum = 0.0;
  for (size_t i = 0; i < use; ++i) sum += scores[i];
  return sum / double(use);
}

}  // namespace

double ncc_score(const CameraView& ref, const CameraView& src, const Vec2& pixel,
                 const PlaneHypothesis& h, const PropagationConfig& cfg) {
  const GrayImage ref_gray = luma(ref.image);
  const GrayImage src_gray = luma(src.image);
  MatchView mv{&src_gray, src.intrinsics, relative_transform(ref.pose, src.pose)};
  return ncc_against_view(ref_gray, ref.intrinsics, mv, pixel, h, cfg);
}

std::vector<size_t> select_neighbor_views(const std::vector<CameraView>& views, size_t ref,
                                          int count) {
  std::vector<std::pair<double, size_t>> dist;
  const Vec3 c_ref = views[ref].pose.center();
  for (size_t i = 0; i < views.size(); ++i) {
    if (i == ref) continue;
    dist.emplace_back((views[i].pose.center() - c_ref).norm(), i);
  }
  std::sort(dist.begin(), dist.end());
  std::vector<size_t> out;
  for (size_t i = 0; i < dist.size() && int(i) < count; ++i) out.push_back(dist[i].second);
  return out;
}

PropagatedMaps propagate(const CameraView& ref, const std::vector<const CameraView*>& neighbors,
                         const GeoMaps& rendered, const PropagationConfig& cfg) {
  cfg.validate();
  const int w = ref.intrinsics.width, h_img = ref.intrinsics.height;
  PropagatedMaps out(w, h_img);

  if (neighbors.empty()) {
    // Nothing to match against: every pixel stays invalid.
    return out;
  }

  const GrayImage ref_gray = luma(ref.image);
  std::vector<GrayImage> neighbor_gray;
  neighbor_gray.reserve(neighbors.size());
  std::vector<MatchView> match_views;
  for (const CameraView* nv : neighbors) {
    neighbor_gray.push_back(luma(nv->image));
    match_views.push_back(MatchView{nullptr, nv->intrinsics,
                                    relative_transform(ref.pose, nv->pose)});
  }
  for (size_t i = 0; i < match_views.size(); ++i) match_views[i].gray = &neighbor_gray[i];

  HypothesisGrid hyps(w, h_img, PlaneHypothesis::invalid());
  GrayImage best(w, h_img, -std::numeric_limits<double>::infinity());

  // Seed from the rendered maps and score the seeds.
  parallel_for(size_t(h_img), cfg.threads, [&](size_t row) {
    const int y = int(row);
    for (int x = 0; x < w; ++x) {
      if (rendered.alpha.at(x, y) <= cfg.init_alpha_min) continue;
      const double z = rendered.depth.at(x, y);
      if (!(z > 0.0)) continue;
      const PlaneHypothesis h0 =
          plane_from_pixel(Vec2(x, y), z, rendered.normal.at(x, y), ref.intrinsics);
      if (!h0.valid()) continue;
      hyps.at(x, y) = h0;
      best.at(x, y) = aggregate_score(ref_gray, ref.intrinsics, match_views, Vec2(x, y), h0, cfg);
    }
  });

  const std::array<CheckerPhase, 2> order =
      cfg.phase_order == PropagationConfig::PhaseOrder::EvenOdd
          ? std::array<CheckerPhase, 2>{CheckerPhase::Even, CheckerPhase::Odd}
          : std::array<CheckerPhase, 2>{CheckerPhase::Odd, CheckerPhase::Even};

  for (int iter = 0; iter < cfg.num_iterations; ++iter) {
    for (const CheckerPhase phase : order) {
      // One phase updates only one color class; the reads touch the opposite
      // class plus the pixel's own cached state, so rows are data-parallel.
      parallel_for(size_t(h_img), cfg.threads, [&](size_t row) {
        const int y = int(row);
        for (int x = 0; x < w; ++x) {
          if (checker_color(x, y) != phase) continue;
          constexpr int dx[4] = {0, 0, -1, 1};
          constexpr int dy[4] = {-1, 1, 0, 0};
          for (int k = 0; k < 4; ++k) {
            const int nx = x + dx[k], ny = y + dy[k];
            if (!hyps.inside(nx, ny)) continue;
            const PlaneHypothesis& cand = hyps.at(nx, ny);
            if (!cand.valid()) continue;
            if (cand.normal == hyps.at(x, y).normal && cand.distance == hyps.at(x, y).distance)
              continue;  // identical to the incumbent
            const double s =
                aggregate_score(ref_gray, ref.intrinsics, match_views, Vec2(x, y), cand, cfg);
            if (s > best.at(x, y)) {
              best.at(x, y) = s;
              hyps.at(x, y) = cand;
            }
          }
        }
      });
    }
  }

  // Decode hypotheses into depth/normal maps, normals oriented toward the
  // camera to match the rendered-map convention.
  parallel_for(size_t(h_img), cfg.threads, [&](size_t row) {
    const int y = int(row);
    for (int x = 0; x < w; ++x) {
      const PlaneHypothesis& h = hyps.at(x, y);
      if (!h.valid()) continue;
      const auto decoded = depth_normal_from_plane(Vec2(x, y), h, ref.intrinsics);
      if (!decoded) continue;
      const double s = best.at(x, y);
      out.depth.at(x, y) = decoded->depth;
      out.normal.at(x, y) = -decoded->normal;
      out.score.at(x, y) = std::isfinite(s) ? s : -1.0;
      out.valid.at(x, y) = (s >= cfg.ncc_min) ? 1 : 0;
    }
  });
  return out;
}

}  // namespace splatprop
