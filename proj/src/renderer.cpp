#include "splatprop/renderer.hpp"

#include "splatprop/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace splatprop {

void CloudGradients::resize(size_t n) {
  d_position.assign(n, Vec3::Zero());
  d_rotation.assign(n, Vec4::Zero());
  d_log_scales.assign(n, Vec3::Zero());
  d_opacity_raw.assign(n, 0.0);
  d_color.assign(n, Vec3::Zero());
  grad2d_norm.assign(n, 0.0);
  seen.assign(n, 0);
}

namespace {

// Perspective Jacobian of (fx x/z + cx, fy y/z + cy) at a camera point.
Eigen::Matrix<double, 2, 3> perspective_jacobian(const Intrinsics& K, const Vec3& p_cam) {
  const double z = p_cam.z();
  const double inv_z = 1.0 / z;
  const double inv_z2 = inv_z * inv_z;
  Eigen::Matrix<double, 2, 3> J;
  J << K.fx * inv_z, 0.0, -K.fx * p_cam.x() * inv_z2,
      0.0, K.fy * inv_z, -K.fy * p_cam.y() * inv_z2;
  return J;
}

struct ProjectedScene {
  std::vector<Projected2DGaussian> splats;           // culled-out Gaussians removed
  std::vector<std::vector<uint32_t>> tile_lists;     // indices into splats, depth-sorted
  int tiles_x = 0;
  int tiles_y = 0;
};

ProjectedScene project_scene(const Intrinsics& K, const Pose& pose, const GaussianCloud& cloud,
                             const RenderConfig& cfg) {
  ProjectedScene scene;
  scene.tiles_x = (K.width + cfg.tile_size - 1) / cfg.tile_size;
  scene.tiles_y = (K.height + cfg.tile_size - 1) / cfg.tile_size;
  scene.tile_lists.resize(size_t(scene.tiles_x) * scene.tiles_y);

  std::vector<std::optional<Projected2DGaussian>> projected(cloud.size());
  parallel_for(cloud.size(), cfg.threads, [&](size_t i) {
    projected[i] = project_to_2d(cloud.get(i), K, pose, cfg);
    if (projected[i]) projected[i]->index = static_cast<uint32_t>(i);
  });

  scene.splats.reserve(cloud.size());
  for (auto& p : projected) {
    if (!p) continue;
    const Eigen::SelfAdjointEigenSolver<Mat2> eig(p->cov2);
    const double radius = cfg.coverage_sigma * std::sqrt(std::max(0.0, eig.eigenvalues()(1)));
    const int x0 = std::max(0, int(std::floor((p->mean2.x() - radius) / cfg.tile_size)));
    const int x1 = std::min(scene.tiles_x - 1, int(std::floor((p->mean2.x() + radius) / cfg.tile_size)));
    const int y0 = std::max(0, int(std::floor((p->mean2.y() - radius) / cfg.tile_size)));
    const int y1 = std::min(scene.tiles_y - 1, int(std::floor((p->mean2.y() + radius) / cfg.tile_size)));
    if (x0 > x1 || y0 > y1) continue;  // fully off screen
    const uint32_t slot = static_cast<uint32_t>(scene.splats.size());
    scene.splats.push_back(*p);
    for (int ty = y0; ty <= y1; ++ty)
      for (int tx = x0; tx <= x1; ++tx)
        scene.tile_lists[size_t(ty) * scene.tiles_x + tx].push_back(slot);
  }

  parallel_for(scene.tile_lists.size(), cfg.threads, [&](size_t t) {
    auto& list = scene.tile_lists[t];
    std::sort(list.begin(), list.end(), [&](uint32_t a, uint32_t b) {
      if (scene.splats[a].depth != scene.splats[b].depth)
        return scene.splats[a].depth < scene.splats[b].depth;
      return scene.splats[a].index < scene.splats[b].index;
    });
  });
  return scene;
}

inline double gaussian_weight(const Projected2DGaussian& s, const Vec2& pixel, Vec2* conic_delta) {
  const Vec2 delta = pixel - s.mean2;
  const Vec2 cd = s.conic * delta;
  if (conic_delta) *conic_delta = cd;
  return std::exp(-0.5 * delta.dot(cd));
}

}  // namespace

std::optional<Projected2DGaussian> project_to_2d(const Gaussian& g, const Intrinsics& K,
                                                 const Pose& pose, const RenderConfig& cfg) {
  const Vec3 p_cam = pose.to_camera(g.position);
  if (p_cam.z() <= cfg.near_plane) return std::nullopt;

  Projected2DGaussian out;
  out.p_cam = p_cam;
  out.depth = p_cam.z();
  out.mean2 = Vec2(K.fx * p_cam.x() / p_cam.z() + K.cx, K.fy * p_cam.y() / p_cam.z() + K.cy);

  const Eigen::Matrix<double, 2, 3> M = perspective_jacobian(K, p_cam) * pose.rotation;
  out.cov2 = M * covariance(g) * M.transpose();
  out.cov2(0, 0) += cfg.covariance_dilation;
  out.cov2(1, 1) += cfg.covariance_dilation;
  const double det = out.cov2.determinant();
  if (det <= 0.0) return std::nullopt;
  out.conic << out.cov2(1, 1), -out.cov2(0, 1), -out.cov2(1, 0), out.cov2(0, 0);
  out.conic /= det;

  out.normal_cam = pose.rotation * shortest_axis_normal(g, pose.center());
  out.opacity = g.opacity();
  out.color = g.color;
  return out;
}

GeoMaps render(const Intrinsics& K, const Pose& pose, const GaussianCloud& cloud,
               const RenderConfig& cfg) {
  GeoMaps maps;
  maps.color = ColorImage(K.width, K.height, Vec3::Zero());
  maps.depth = GrayImage(K.width, K.height, 0.0);
  maps.normal = ColorImage(K.width, K.height, Vec3::Zero());
  maps.alpha = GrayImage(K.width, K.height, 0.0);
  if (cloud.empty()) return maps;

  const ProjectedScene scene = project_scene(K, pose, cloud, cfg);

  parallel_for(scene.tile_lists.size(), cfg.threads, [&](size_t t) {
    const auto& list = scene.tile_lists[t];
    if (list.empty()) return;
    const int tx = int(t) % scene.tiles_x;
    const int ty = int(t) / scene.tiles_x;
    const int px0 = tx * cfg.tile_size, px1 = std::min(K.width, px0 + cfg.tile_size);
    const int py0 = ty * cfg.tile_size, py1 = std::min(K.height, py0 + cfg.tile_size);

    for (int py = py0; py < py1; ++py) {
      for (int px = px0; px < px1; ++px) {
        const Vec2 pixel(px, py);
        Vec3 color = Vec3::Zero(), normal = Vec3::Zero();
        double depth = 0.0, transmittance = 1.0;
        for (const uint32_t si : list) {
          if (transmittance < cfg.transmittance_min) break;
          const Projected2DGaussian& s = scene.splats[si];
          const double alpha =
              std::min(cfg.alpha_clamp, s.opacity * gaussian_weight(s, pixel, nullptr));
          const double w = alpha * transmittance;
          color += s.color * w;
          depth += s.depth * w;
          normal += s.normal_cam * w;
          transmittance *= 1.0 - alpha;
        }
        const double alpha_acc = 1.0 - transmittance;
        maps.color.at(px, py) = color;
        maps.alpha.at(px, py) = alpha_acc;
        if (alpha_acc > cfg.alpha_norm_min) {
          maps.depth.at(px, py) = depth / alpha_acc;
          const double nn = normal.norm();
          maps.normal.at(px, py) = nn > 1e-12 ? Vec3(normal / nn) : normal;
        } else {
          maps.depth.at(px, py) = depth;
          maps.normal.at(px, py) = normal;
        }
      }
    }
  });
  return maps;
}

GeoMaps render(const CameraView& view, const GaussianCloud& cloud, const RenderConfig& cfg) {
  return render(view.intrinsics, view.pose, cloud, cfg);
}

namespace {

struct SplatGrad {
  Vec3 d_color = Vec3::Zero();
  double d_opacity = 0.0;  // activated opacity
  Vec2 d_mean2 = Vec2::Zero();
  Mat2 d_cov2 = Mat2::Zero();
  double d_depth = 0.0;
  Vec3 d_normal_cam = Vec3::Zero();
};

struct BlendRecord {
  uint32_t slot;  // position in the tile list
  double alpha;
  double weight;  // exp term, pre-opacity
  double transmittance;
  Vec2 conic_delta;
  bool clamped;
};

// dR/dq entries for a unit quaternion (w, x, y, z).
void rotation_quaternion_jacobian(const Vec4& q, Mat3 dR[4]) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  dR[0] << 0, -z, y, z, 0, -x, -y, x, 0;
  dR[1] << 0, y, z, y, -2 * x, -w, z, w, -2 * x;
  dR[2] << -2 * y, x, w, x, 0, z, -w, z, -2 * y;
  dR[3] << -2 * z, -w, x, w, -2 * z, y, x, y, 0;
  for (int k = 0; k < 4; ++k) dR[k] *= 2.0;
}

}  // namespace

CloudGradients render_backward(const Intrinsics& K, const Pose& pose, const GaussianCloud& cloud,
                               const MapGradients& upstream, const RenderConfig& cfg) {
  CloudGradients grads;
  grads.resize(cloud.size());
  if (cloud.empty()) return grads;

  const ProjectedScene scene = project_scene(K, pose, cloud, cfg);
  const bool has_color = !upstream.d_color.empty();
  const bool has_depth = !upstream.d_depth.empty();
  const bool has_normal = !upstream.d_normal.empty();
  const bool has_alpha = !upstream.d_alpha.empty();

  // Per-tile gradient buffers, merged in tile order after the parallel pass
  // so the reduction order never depends on the thread count.
  std::vector<std::vector<SplatGrad>> tile_grads(scene.tile_lists.size());

  parallel_for(scene.tile_lists.size(), cfg.threads, [&](size_t t) {
    const auto& list = scene.tile_lists[t];
    if (list.empty()) return;
    auto& tg = tile_grads[t];
    tg.assign(list.size(), SplatGrad{});
    const int tx = int(t) % scene.tiles_x;
    const int ty = int(t) / scene.tiles_x;
    const int px0 = tx * cfg.tile_size, px1 = std::min(K.width, px0 + cfg.tile_size);
    const int py0 = ty * cfg.tile_size, py1 = std::min(K.height, py0 + cfg.tile_size);

    std::vector<BlendRecord> records;
    records.reserve(list.size());

    for (int py = py0; py < py1; ++py) {
      for (int px = px0; px < px1; ++px) {
        const Vec2 pixel(px, py);

        // Forward replay: raw accumulations and the per-splat blend records.
        records.clear();
        Vec3 normal_raw = Vec3::Zero();
        double depth_raw = 0.0, transmittance = 1.0;
        for (uint32_t li = 0; li < list.size(); ++li) {
          if (transmittance < cfg.transmittance_min) break;
          const Projected2DGaussian& s = scene.splats[list[li]];
          Vec2 cd;
          const double weight = gaussian_weight(s, pixel, &cd);
          const double alpha_pre = s.opacity * weight;
          const bool clamped = alpha_pre > cfg.alpha_clamp;
          const double alpha = clamped ? cfg.alpha_clamp : alpha_pre;
          records.push_back({li, alpha, weight, transmittance, cd, clamped});
          depth_raw += s.depth * alpha * transmittance;
          normal_raw += s.normal_cam * alpha * transmittance;
          transmittance *= 1.0 - alpha;
        }
        const double alpha_acc = 1.0 - transmittance;

        // Upstream gradients w.r.t. the raw blended quantities.
        Vec3 g_color = has_color ? upstream.d_color.at(px, py) : Vec3::Zero();
        double g_depth_raw = 0.0;
        Vec3 g_normal_raw = Vec3::Zero();
        double g_alpha = has_alpha ? upstream.d_alpha.at(px, py) : 0.0;
        if (has_depth) {
          const double gd = upstream.d_depth.at(px, py);
          if (alpha_acc > cfg.alpha_norm_min) {
            g_depth_raw = gd / alpha_acc;
            g_alpha -= gd * depth_raw / (alpha_acc * alpha_acc);
          } else {
            g_depth_raw = gd;
          }
        }
        if (has_normal) {
          const Vec3 gn = upstream.d_normal.at(px, py);
          const double nn = normal_raw.norm();
          if (alpha_acc > cfg.alpha_norm_min && nn > 1e-12) {
            const Vec3 n_hat = normal_raw / nn;
            g_normal_raw = (gn - n_hat * n_hat.dot(gn)) / nn;
          } else {
            g_normal_raw = gn;
          }
        }

        // Reverse scan: suffix sums give d(blend)/d(alpha_i).
        double suffix = 0.0;
        for (size_t ri = records.size(); ri-- > 0;) {
          const BlendRecord& rec = records[ri];
          const Projected2DGaussian& s = scene.splats[list[rec.slot]];
          SplatGrad& sg = tg[rec.slot];

          const double u = s.color.dot(g_color) + s.depth * g_depth_raw +
                           s.normal_cam.dot(g_normal_raw) + g_alpha;
          const double w = rec.alpha * rec.transmittance;
          sg.d_color += g_color * w;
          sg.d_depth += g_depth_raw * w;
          sg.d_normal_cam += g_normal_raw * w;

          const double d_alpha = u * rec.transmittance - suffix / (1.0 - rec.alpha);
          suffix += u * w;
          if (rec.clamped) continue;  // clamp zeroes the alpha chain

          sg.d_opacity += d_alpha * rec.weight;
          const double d_q = -0.5 * rec.alpha * d_alpha;
          // q = delta^T conic delta with delta = pixel - mean2
          sg.d_mean2 += -2.0 * d_q * rec.conic_delta;
          sg.d_cov2 += d_q * -(rec.conic_delta * rec.conic_delta.transpose());
        }
      }
    }
  });

  // Deterministic merge and visibility marking.
  std::vector<SplatGrad> splat_grads(scene.splats.size());
  for (size_t t = 0; t < scene.tile_lists.size(); ++t) {
    const auto& list = scene.tile_lists[t];
    const auto& tg = tile_grads[t];
    for (size_t li = 0; li < tg.size(); ++li) {
      SplatGrad& dst = splat_grads[list[li]];
      const SplatGrad& src = tg[li];
      dst.d_color += src.d_color;
      dst.d_opacity += src.d_opacity;
      dst.d_mean2 += src.d_mean2;
      dst.d_cov2 += src.d_cov2;
      dst.d_depth += src.d_depth;
      dst.d_normal_cam += src.d_normal_cam;
    }
  }

  // Chain from screen space to the raw Gaussian parameters.
  parallel_for(scene.splats.size(), cfg.threads, [&](size_t si) {
    const Projected2DGaussian& s = scene.splats[si];
    const SplatGrad& sg = splat_grads[si];
    const size_t gi = s.index;
    const Gaussian g = cloud.get(gi);

    grads.seen[gi] = 1;
    grads.grad2d_norm[gi] = sg.d_mean2.norm();
    grads.d_color[gi] = sg.d_color;
    grads.d_opacity_raw[gi] = sg.d_opacity * s.opacity * (1.0 - s.opacity);

    const Eigen::Matrix<double, 2, 3> J = perspective_jacobian(K, s.p_cam);
    const Eigen::Matrix<double, 2, 3> M = J * pose.rotation;
    const Mat3 R = rotation_matrix(g.rotation);
    const Vec3 scales = g.scales();
    const Mat3 sigma3 = covariance(g);

    Vec3 d_p_cam = J.transpose() * sg.d_mean2;
    d_p_cam.z() += sg.d_depth;

    // cov2 = M sigma3 M^T + dilation
    const Mat3 d_sigma3 = M.transpose() * sg.d_cov2 * M;
    const Eigen::Matrix<double, 2, 3> d_M = (sg.d_cov2 + sg.d_cov2.transpose()) * M * sigma3;
    const Eigen::Matrix<double, 2, 3> d_J = d_M * pose.rotation.transpose();

    const double z = s.p_cam.z();
    const double inv_z2 = 1.0 / (z * z);
    const double inv_z3 = inv_z2 / z;
    d_p_cam.x() += d_J(0, 2) * (-K.fx * inv_z2);
    d_p_cam.y() += d_J(1, 2) * (-K.fy * inv_z2);
    d_p_cam.z() += d_J(0, 0) * (-K.fx * inv_z2) + d_J(1, 1) * (-K.fy * inv_z2) +
                   d_J(0, 2) * (2.0 * K.fx * s.p_cam.x() * inv_z3) +
                   d_J(1, 2) * (2.0 * K.fy * s.p_cam.y() * inv_z3);

    grads.d_position[gi] = pose.rotation.transpose() * d_p_cam;

    // sigma3 = R diag(s^2) R^T
    Mat3 d_R = (d_sigma3 + d_sigma3.transpose()) * R * Vec3(scales.array().square()).asDiagonal();
    const Mat3 RtGR = R.transpose() * d_sigma3 * R;
    for (int k = 0; k < 3; ++k)
      grads.d_log_scales[gi][k] = RtGR(k, k) * 2.0 * scales[k] * scales[k];

    // normal attribute: n_cam = W * (sign * R.col(r))
    int r = 0;
    if (scales[1] < scales[r]) r = 1;
    if (scales[2] < scales[r]) r = 2;
    const Vec3 axis = R.col(r);
    const double sign = axis.dot(pose.center() - g.position) < 0.0 ? -1.0 : 1.0;
    d_R.col(r) += sign * (pose.rotation.transpose() * sg.d_normal_cam);

    Mat3 dR_dq[4];
    const Vec4 q_hat = g.rotation.normalized();
    rotation_quaternion_jacobian(q_hat, dR_dq);
    Vec4 d_q_hat;
    for (int k = 0; k < 4; ++k) d_q_hat[k] = (d_R.array() * dR_dq[k].array()).sum();
    const double qn = g.rotation.norm();
    grads.d_rotation[gi] = (d_q_hat - q_hat * q_hat.dot(d_q_hat)) / qn;
  });

  return grads;
}

CloudGradients render_backward(const CameraView& view, const GaussianCloud& cloud,
                               const MapGradients& upstream, const RenderConfig& cfg) {
  return render_backward(view.intrinsics, view.pose, cloud, upstream, cfg);
}

}  // namespace splatprop
