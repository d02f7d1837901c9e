#include "splatprop/densify.hpp"

#include "splatprop/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace splatprop {

namespace {

// Bilinear depth/normal lookup that demands all four taps valid; quantizing
// to the nearest pixel would leak the neighbor's depth gradient into the
// consistency thresholds at grazing angles.
bool lookup_depth_normal(const PropagatedMaps& maps, const Vec2& pixel, double* depth,
                         Vec3* normal) {
  const int x0 = int(std::floor(pixel.x()));
  const int y0 = int(std::floor(pixel.y()));
  if (x0 < 0 || y0 < 0 || x0 + 1 >= maps.valid.width || y0 + 1 >= maps.valid.height) return false;
  if (!maps.valid.at(x0, y0) || !maps.valid.at(x0 + 1, y0) || !maps.valid.at(x0, y0 + 1) ||
      !maps.valid.at(x0 + 1, y0 + 1))
    return false;
  sample_bilinear(maps.depth, pixel, depth);
  sample_bilinear(maps.normal, pixel, normal);
  const double nn = normal->norm();
  if (nn < 1e-9 || !(*depth > 0.0)) return false;
  *normal /= nn;
  return true;
}

}  // namespace

PropagatedMaps geometric_filter_view(size_t ref, const std::vector<CameraView>& views,
                                     const std::vector<const PropagatedMaps*>& maps,
                                     const GeometricFilterConfig& cfg) {
  const CameraView& rv = views[ref];
  const PropagatedMaps& own = *maps[ref];
  PropagatedMaps out = own;
  const double cos_min = std::cos(cfg.max_normal_angle_deg * std::numbers::pi / 180.0);
  const std::vector<size_t> neighbors = select_neighbor_views(views, ref, cfg.num_neighbor_views);

  parallel_for(size_t(rv.intrinsics.height), cfg.threads, [&](size_t row) {
    const int y = int(row);
    for (int x = 0; x < rv.intrinsics.width; ++x) {
      if (!own.valid.at(x, y)) continue;
      const double z = own.depth.at(x, y);
      const Vec3 x_world = backproject(rv.intrinsics, Vec2(x, y), z, rv.pose);
      const Vec3 n_world = rv.pose.rotation.transpose() * own.normal.at(x, y);

      int consistent = 0;
      for (const size_t j : neighbors) {
        if (!maps[j]) continue;
        const CameraView& nv = views[j];
        const auto proj = project(nv.intrinsics, nv.pose, x_world);
        if (!proj) continue;
        double z_q;
        Vec3 n_q;
        if (!lookup_depth_normal(*maps[j], proj->pixel, &z_q, &n_q)) continue;

        const Vec3 x_back = backproject(nv.intrinsics, proj->pixel, z_q, nv.pose);
        const auto back = project(rv.intrinsics, rv.pose, x_back);
        if (!back) continue;
        if ((back->pixel - Vec2(x, y)).norm() > cfg.max_reproj_px) continue;
        if (std::abs(back->depth - z) / z > cfg.max_rel_depth_err) continue;
        const Vec3 n_world_j = nv.pose.rotation.transpose() * n_q;
        if (n_world.dot(n_world_j) < cos_min) continue;
        if (++consistent >= cfg.min_consistent) break;
      }
      if (consistent < cfg.min_consistent) out.valid.at(x, y) = 0;
    }
  });
  return out;
}

std::vector<PropagatedMaps> geometric_filter(const std::vector<CameraView>& views,
                                             const std::vector<PropagatedMaps>& maps,
                                             const GeometricFilterConfig& cfg) {
  std::vector<const PropagatedMaps*> ptrs;
  ptrs.reserve(maps.size());
  for (const auto& m : maps) ptrs.push_back(&m);
  std::vector<PropagatedMaps> out;
  out.reserve(views.size());
  for (size_t i = 0; i < views.size(); ++i)
    out.push_back(geometric_filter_view(i, views, ptrs, cfg));
  return out;
}

MaskImage select_growth_pixels(const PropagatedMaps& filtered, const GrayImage& rendered_depth,
                               const GrayImage& rendered_alpha, double sigma) {
  MaskImage mask(filtered.depth.width, filtered.depth.height, 0);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!filtered.valid.at(x, y)) continue;
      if (rendered_alpha.at(x, y) < 1e-3) {
        mask.at(x, y) = 1;
        continue;
      }
      const double zf = filtered.depth.at(x, y);
      if (std::abs(zf - rendered_depth.at(x, y)) / zf > sigma) mask.at(x, y) = 1;
    }
  }
  return mask;
}

namespace {

// Right-handed orthonormal frame whose first column is the given unit vector.
Mat3 frame_from_first_axis(const Vec3& n) {
  Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 u = n.cross(helper).normalized();
  const Vec3 v = n.cross(u);
  Mat3 R;
  R.col(0) = n;
  R.col(1) = u;
  R.col(2) = v;
  if (R.determinant() < 0.0) R.col(2) = -v;
  return R;
}

}  // namespace

size_t spawn_gaussians(const MaskImage& mask, const PropagatedMaps& filtered,
                       const CameraView& view, GaussianCloud& cloud, const SpawnConfig& cfg) {
  struct Candidate {
    Vec3 position;
    Vec3 color;
    Vec3 normal_world;
  };
  std::vector<Candidate> fresh;
  for (int y = 0; y < mask.height; y += cfg.stride) {
    for (int x = 0; x < mask.width; x += cfg.stride) {
      if (!mask.at(x, y)) continue;
      const double z = filtered.depth.at(x, y);
      if (!(z > 0.0)) continue;
      Candidate c;
      c.position = backproject(view.intrinsics, Vec2(x, y), z, view.pose);
      c.color = view.image.at(x, y);
      c.normal_world = view.pose.rotation.transpose() * filtered.normal.at(x, y);
      const double nn = c.normal_world.norm();
      if (nn < 1e-9) continue;
      c.normal_world /= nn;
      fresh.push_back(c);
    }
  }
  if (fresh.empty()) return 0;

  // knn over existing + new positions for the isotropic scale
  std::vector<Vec3> all_positions = cloud.positions;
  all_positions.reserve(all_positions.size() + fresh.size());
  for (const Candidate& c : fresh) all_positions.push_back(c.position);
  const size_t base = cloud.positions.size();

  std::vector<double> scales(fresh.size(), cfg.fallback_scale);
  parallel_for(fresh.size(), 1, [&](size_t i) {
    std::array<double, 3> nearest = {std::numeric_limits<double>::infinity(),
                                     std::numeric_limits<double>::infinity(),
                                     std::numeric_limits<double>::infinity()};
    const Vec3& p = all_positions[base + i];
    for (size_t j = 0; j < all_positions.size(); ++j) {
      if (j == base + i) continue;
      const double d = (all_positions[j] - p).norm();
      if (d < nearest[2]) {
        nearest[2] = d;
        if (nearest[2] < nearest[1]) std::swap(nearest[1], nearest[2]);
        if (nearest[1] < nearest[0]) std::swap(nearest[0], nearest[1]);
      }
    }
    double sum = 0.0;
    int used = 0;
    for (int k = 0; k < cfg.knn; ++k) {
      if (std::isinf(nearest[k])) break;
      sum += nearest[k];
      ++used;
    }
    if (used > 0) scales[i] = std::max(sum / used, 1e-12);
  });

  for (size_t i = 0; i < fresh.size(); ++i) {
    Gaussian g;
    g.position = fresh[i].position;
    g.color = fresh[i].color;
    g.opacity_raw = logit(cfg.opacity);
    g.log_scales = Vec3::Constant(std::log(scales[i]));
    g.rotation = quaternion_from_rotation(frame_from_first_axis(fresh[i].normal_world));
    cloud.append(g);
  }
  return fresh.size();
}

DensifyStats clone_split_prune(GaussianCloud& cloud, double scene_extent,
                               const DensifyConfig& cfg, std::mt19937_64& rng) {
  const size_t n = cloud.size();
  DensifyStats stats;
  stats.kept_of_old.assign(n, 1);

  GaussianCloud additions;
  std::normal_distribution<double> unit_normal(0.0, 1.0);

  for (size_t i = 0; i < n; ++i) {
    const Gaussian g = cloud.get(i);
    if (g.opacity() < cfg.opacity_floor) {
      stats.kept_of_old[i] = 0;
      ++stats.pruned;
      continue;
    }
    const double mean_grad =
        cloud.seen_count[i] > 0 ? cloud.grad2d_accum[i] / cloud.seen_count[i] : 0.0;
    if (mean_grad <= cfg.grad_threshold) continue;

    const Vec3 s = g.scales();
    if (s.maxCoeff() > cfg.percent_dense * scene_extent) {
      stats.kept_of_old[i] = 0;
      ++stats.split_parents;
      const Mat3 R = rotation_matrix(g.rotation);
      for (int c = 0; c < cfg.split_children; ++c) {
        Gaussian child = g;
        const Vec3 xi(unit_normal(rng), unit_normal(rng), unit_normal(rng));
        child.position = g.position + R * (s.cwiseProduct(xi));
        child.log_scales = g.log_scales.array() - std::log(cfg.split_scale_divisor);
        additions.append(child);
      }
    } else {
      ++stats.cloned;
      additions.append(g);
    }
  }

  cloud.compact(stats.kept_of_old);
  for (size_t i = 0; i < additions.size(); ++i) cloud.append(additions.get(i));
  stats.appended = additions.size();
  cloud.reset_stats();
  return stats;
}

}  // namespace splatprop
