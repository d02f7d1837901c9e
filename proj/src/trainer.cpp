#include "splatprop/trainer.hpp"

#include <json.hpp>

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>

namespace splatprop {

namespace {

using nlohmann::json;

// Fixed-format double printing so equal runs produce byte-equal logs.
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct AdamState {
  std::vector<Vec3> m_pos, v_pos, m_col, v_col, m_ls, v_ls;
  std::vector<Vec4> m_rot, v_rot;
  std::vector<double> m_op, v_op;

  void resize_zero(size_t n) {
    m_pos.assign(n, Vec3::Zero());
    v_pos.assign(n, Vec3::Zero());
    m_col.assign(n, Vec3::Zero());
    v_col.assign(n, Vec3::Zero());
    m_ls.assign(n, Vec3::Zero());
    v_ls.assign(n, Vec3::Zero());
    m_rot.assign(n, Vec4::Zero());
    v_rot.assign(n, Vec4::Zero());
    m_op.assign(n, 0.0);
    v_op.assign(n, 0.0);
  }

  template <typename T>
  static void compact_vec(std::vector<T>& v, const std::vector<uint8_t>& keep) {
    size_t out = 0;
    for (size_t i = 0; i < v.size(); ++i)
      if (keep[i]) v[out++] = v[i];
    v.resize(out);
  }

  void remap(const std::vector<uint8_t>& keep, size_t appended) {
    for (auto* v : {&m_pos, &v_pos, &m_col, &v_col, &m_ls, &v_ls}) compact_vec(*v, keep);
    compact_vec(m_rot, keep);
    compact_vec(v_rot, keep);
    compact_vec(m_op, keep);
    compact_vec(v_op, keep);
    const size_t n = m_pos.size() + appended;
    m_pos.resize(n, Vec3::Zero());
    v_pos.resize(n, Vec3::Zero());
    m_col.resize(n, Vec3::Zero());
    v_col.resize(n, Vec3::Zero());
    m_ls.resize(n, Vec3::Zero());
    v_ls.resize(n, Vec3::Zero());
    m_rot.resize(n, Vec4::Zero());
    v_rot.resize(n, Vec4::Zero());
    m_op.resize(n, 0.0);
    v_op.resize(n, 0.0);
  }

  void append_zeros(size_t appended) { remap(std::vector<uint8_t>(m_pos.size(), 1), appended); }
};

template <typename T>
void adam_update(T& param, const T& grad, T& m, T& v, double lr, double beta1, double beta2,
                 double eps, double bias1, double bias2) {
  m = beta1 * m + (1.0 - beta1) * grad;
  if constexpr (std::is_same_v<T, double>) {
    v = beta2 * v + (1.0 - beta2) * grad * grad;
    param -= lr * (m / bias1) / (std::sqrt(v / bias2) + eps);
  } else {
    v = beta2 * v + (1.0 - beta2) * T(grad.array().square());
    param -= lr * T((m / bias1).array() / ((v / bias2).array().sqrt() + eps));
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("train config: iterations must be >= 1");
  if (propagation_interval < 1)
    throw std::invalid_argument("train config: propagation_interval must be >= 1");
  if (densify_interval < 1)
    throw std::invalid_argument("train config: densify_interval must be >= 1");
  if (holdout_every < 2) throw std::invalid_argument("train config: holdout_every must be >= 2");
  if (sigma <= 0.0) throw std::invalid_argument("train config: sigma must be positive");
  propagation.validate();
}

TrainReport train(const Scene& scene, GaussianCloud cloud, const TrainConfig& cfg,
                  std::ostream* metrics_log, const std::filesystem::path& out_dir) {
  cfg.validate();
  const auto wall_start = std::chrono::steady_clock::now();

  std::vector<size_t> train_idx, holdout_idx;
  for (size_t i = 0; i < scene.views.size(); ++i)
    (i % size_t(cfg.holdout_every) == 0 ? holdout_idx : train_idx).push_back(i);
  if (train_idx.size() < 2) {
    // Tiny scenes keep everything for training rather than failing outright.
    train_idx.clear();
    holdout_idx.clear();
    for (size_t i = 0; i < scene.views.size(); ++i) train_idx.push_back(i);
  }
  if (train_idx.size() < 2) throw std::invalid_argument("train: need at least two training views");

  std::vector<CameraView> train_views;
  train_views.reserve(train_idx.size());
  for (const size_t i : train_idx) train_views.push_back(scene.views[i]);

  const double extent = scene_extent(scene.views, scene.points);
  const double pos_lr_scale = cfg.scale_position_lr_by_extent ? extent : 1.0;

  RenderConfig render_cfg;
  render_cfg.threads = cfg.threads;
  PropagationConfig prop_cfg = cfg.propagation;
  prop_cfg.threads = cfg.threads;
  GeometricFilterConfig filter_cfg = cfg.filter;
  filter_cfg.threads = cfg.threads;

  std::mt19937_64 rng(cfg.seed);
  AdamState adam;
  adam.resize_zero(cloud.size());

  // Per-training-view caches: latest propagated maps (for cross-view
  // filtering) and filtered normal maps + valid sets (for the planar loss).
  std::vector<std::optional<PropagatedMaps>> prop_store(train_views.size());
  std::vector<ColorImage> cached_normal(train_views.size());
  std::vector<MaskImage> cached_q(train_views.size());

  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  TrainReport report;
  report.iteration_loss.reserve(cfg.iterations);

  auto eval_holdout = [&](double* out_ssim) {
    const auto& idx = holdout_idx.empty() ? train_idx : holdout_idx;
    double sum_psnr = 0.0, sum_ssim = 0.0;
    for (const size_t i : idx) {
      const GeoMaps maps = render(scene.views[i], cloud, render_cfg);
      sum_psnr += psnr(maps.color, scene.views[i].image);
      if (out_ssim) sum_ssim += ssim(maps.color, scene.views[i].image);
    }
    if (out_ssim) *out_ssim = sum_ssim / double(idx.size());
    return sum_psnr / double(idx.size());
  };

  for (int it = 1; it <= cfg.iterations; ++it) {
    const size_t vi = size_t(it - 1) % train_views.size();
    const CameraView& view = train_views[vi];

    const GeoMaps maps = render(view, cloud, render_cfg);
    const ImageLoss photo = l1_dssim(maps.color, view.image, cfg.weights.lambda_dssim);

    ImageLoss nloss;
    ScaleLoss sloss;
    const bool planar_active = cfg.enable_planar_loss;
    if (planar_active && cfg.weights.beta != 0.0 && !cached_q[vi].empty())
      nloss = normal_loss(maps.normal, cached_normal[vi], cached_q[vi], cfg.normal_loss_mean);
    if (planar_active && cfg.weights.gamma != 0.0) sloss = scale_loss(cloud);

    const double planar_value =
        planar_active ? planar_loss(nloss.value, sloss.value, cfg.weights.beta, cfg.weights.gamma)
                      : 0.0;
    const double total = photo.value + planar_value;
    report.iteration_loss.push_back(total);

    if (!std::isfinite(total)) {
      if (!out_dir.empty()) save_ply(out_dir / "diagnostic_cloud.ply", cloud);
      throw NumericalError("non-finite loss at iteration " + std::to_string(it) + " on view '" +
                           view.name + "'");
    }

    MapGradients upstream;
    upstream.d_color = photo.grad;
    if (planar_active && cfg.weights.beta != 0.0 && !nloss.grad.empty()) {
      upstream.d_normal = nloss.grad;
      for (Vec3& g : upstream.d_normal.data) g *= cfg.weights.beta;
    }
    CloudGradients grads = render_backward(view, cloud, upstream, render_cfg);
    if (planar_active && cfg.weights.gamma != 0.0)
      for (size_t i = 0; i < cloud.size(); ++i)
        grads.d_log_scales[i] += cfg.weights.gamma * sloss.d_log_scales[i];

    for (size_t i = 0; i < cloud.size(); ++i) {
      cloud.grad2d_accum[i] += grads.grad2d_norm[i];
      cloud.seen_count[i] += grads.seen[i];
    }

    // Adam step; the position rate decays exponentially over the run.
    const double progress = double(it) / double(cfg.iterations);
    const double pos_lr = pos_lr_scale * cfg.position_lr_init *
                          std::pow(cfg.position_lr_final / cfg.position_lr_init, progress);
    const double bias1 = 1.0 - std::pow(cfg.adam_beta1, it);
    const double bias2 = 1.0 - std::pow(cfg.adam_beta2, it);
    for (size_t i = 0; i < cloud.size(); ++i) {
      adam_update(cloud.positions[i], grads.d_position[i], adam.m_pos[i], adam.v_pos[i], pos_lr,
                  cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, bias1, bias2);
      adam_update(cloud.colors[i], grads.d_color[i], adam.m_col[i], adam.v_col[i], cfg.color_lr,
                  cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, bias1, bias2);
      adam_update(cloud.log_scales[i], grads.d_log_scales[i], adam.m_ls[i], adam.v_ls[i],
                  cfg.scale_lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, bias1, bias2);
      adam_update(cloud.rotations[i], grads.d_rotation[i], adam.m_rot[i], adam.v_rot[i],
                  cfg.rotation_lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, bias1, bias2);
      adam_update(cloud.opacities_raw[i], grads.d_opacity_raw[i], adam.m_op[i], adam.v_op[i],
                  cfg.opacity_lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, bias1, bias2);
    }

    if (metrics_log)
      *metrics_log << "{\"iter\":" << it << ",\"loss\":" << fmt(total)
                   << ",\"photometric\":" << fmt(photo.value)
                   << ",\"normal_weighted\":" << fmt(planar_active ? cfg.weights.beta * nloss.value : 0.0)
                   << ",\"scale_weighted\":" << fmt(planar_active ? cfg.weights.gamma * sloss.value : 0.0)
                   << ",\"gaussians\":" << cloud.size() << "}\n";

    // 3DGS clone/split/prune on the accumulated gradient statistics.
    if (it >= cfg.densify_from && it <= cfg.densify_until && it % cfg.densify_interval == 0) {
      const DensifyStats stats = clone_split_prune(cloud, extent, cfg.densify, rng);
      adam.remap(stats.kept_of_old, stats.appended);
    }

    // Propagation-guided growth on the current view.
    if (cfg.enable_propagation && it >= cfg.propagation_from && it <= cfg.propagation_until &&
        it % cfg.propagation_interval == 0) {
      std::vector<size_t> neighbor_idx =
          select_neighbor_views(train_views, vi, prop_cfg.num_neighbor_views);
      std::vector<const CameraView*> neighbors;
      for (const size_t j : neighbor_idx) neighbors.push_back(&train_views[j]);

      prop_store[vi] = propagate(view, neighbors, maps, prop_cfg);

      std::vector<const PropagatedMaps*> store_ptrs(train_views.size(), nullptr);
      for (size_t j = 0; j < train_views.size(); ++j)
        if (prop_store[j]) store_ptrs[j] = &*prop_store[j];
      const PropagatedMaps filtered =
          geometric_filter_view(vi, train_views, store_ptrs, filter_cfg);

      cached_normal[vi] = filtered.normal;
      cached_q[vi] = filtered.valid;

      const MaskImage mask = select_growth_pixels(filtered, maps.depth, maps.alpha, cfg.sigma);
      size_t spawned = 0;
      if (cloud.size() < cfg.max_gaussians)
        spawned = spawn_gaussians(mask, filtered, view, cloud, cfg.spawn);
      if (spawned > 0) adam.append_zeros(spawned);

      if (cfg.debug_dumps && !out_dir.empty()) {
        GrayImage mask_img(mask.width, mask.height, 0.0);
        for (size_t i = 0; i < mask.data.size(); ++i) mask_img.data[i] = mask.data[i];
        char buf[64];
        std::snprintf(buf, sizeof(buf), "growth_mask_%06d.pfm", it);
        write_pfm(out_dir / buf, mask_img);
        if (spawned > 0) {
          GaussianCloud fresh;
          for (size_t i = cloud.size() - spawned; i < cloud.size(); ++i) fresh.append(cloud.get(i));
          std::snprintf(buf, sizeof(buf), "spawned_%06d.ply", it);
          save_ply(out_dir / buf, fresh);
        }
      }

      if (metrics_log)
        *metrics_log << "{\"iter\":" << it << ",\"event\":\"propagation\",\"spawned\":" << spawned
                     << ",\"gaussians\":" << cloud.size() << "}\n";
    }

    if (it % cfg.eval_interval == 0 || it == cfg.iterations) {
      const double hold_psnr = eval_holdout(nullptr);
      if (metrics_log)
        *metrics_log << "{\"iter\":" << it << ",\"holdout_psnr\":" << fmt(hold_psnr)
                     << ",\"gaussians\":" << cloud.size() << "}\n";
    }

    if (!out_dir.empty() && cfg.checkpoint_interval > 0 && it % cfg.checkpoint_interval == 0) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "checkpoint_%06d.ply", it);
      save_ply(out_dir / buf, cloud);
    }
  }

  report.psnr = eval_holdout(&report.ssim);
  report.gaussian_count = cloud.size();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();

  if (!out_dir.empty()) {
    save_ply(out_dir / "final_cloud.ply", cloud);
    json j;
    j["psnr"] = report.psnr;
    j["ssim"] = report.ssim;
    j["gaussian_count"] = report.gaussian_count;
    j["wall_time"] = report.wall_seconds;
    std::ofstream out(out_dir / "report.json");
    out << j.dump(2) << "\n";
  }
  return report;
}

// --- config JSON ------------------------------------------------------------

TrainConfig parse_train_config(const std::string& json_text) {
  const json j = json::parse(json_text);
  TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "iterations") c.iterations = value;
    else if (key == "seed") c.seed = value;
    else if (key == "threads") c.threads = value;
    else if (key == "position_lr_init") c.position_lr_init = value;
    else if (key == "position_lr_final") c.position_lr_final = value;
    else if (key == "scale_position_lr_by_extent") c.scale_position_lr_by_extent = value;
    else if (key == "color_lr") c.color_lr = value;
    else if (key == "opacity_lr") c.opacity_lr = value;
    else if (key == "scale_lr") c.scale_lr = value;
    else if (key == "rotation_lr") c.rotation_lr = value;
    else if (key == "lambda_dssim") c.weights.lambda_dssim = value;
    else if (key == "beta") c.weights.beta = value;
    else if (key == "gamma") c.weights.gamma = value;
    else if (key == "densify_interval") c.densify_interval = value;
    else if (key == "densify_from") c.densify_from = value;
    else if (key == "densify_until") c.densify_until = value;
    else if (key == "densify_grad_threshold") c.densify.grad_threshold = value;
    else if (key == "opacity_floor") c.densify.opacity_floor = value;
    else if (key == "percent_dense") c.densify.percent_dense = value;
    else if (key == "enable_propagation") c.enable_propagation = value;
    else if (key == "enable_planar_loss") c.enable_planar_loss = value;
    else if (key == "propagation_interval") c.propagation_interval = value;
    else if (key == "propagation_from") c.propagation_from = value;
    else if (key == "propagation_until") c.propagation_until = value;
    else if (key == "propagation_iterations") c.propagation.num_iterations = value;
    else if (key == "patch_radius") c.propagation.patch_radius = value;
    else if (key == "ncc_min") c.propagation.ncc_min = value;
    else if (key == "num_neighbor_views") {
      c.propagation.num_neighbor_views = value;
      c.filter.num_neighbor_views = value;
    } else if (key == "sigma") c.sigma = value;
    else if (key == "filter_max_reproj_px") c.filter.max_reproj_px = value;
    else if (key == "filter_max_rel_depth_err") c.filter.max_rel_depth_err = value;
    else if (key == "filter_max_normal_angle_deg") c.filter.max_normal_angle_deg = value;
    else if (key == "spawn_stride") c.spawn.stride = value;
    else if (key == "holdout_every") c.holdout_every = value;
    else if (key == "eval_interval") c.eval_interval = value;
    else if (key == "checkpoint_interval") c.checkpoint_interval = value;
    else if (key == "normal_loss_mean") c.normal_loss_mean = value;
    else if (key == "max_gaussians") c.max_gaussians = value;
    else if (key == "debug_dumps") c.debug_dumps = value;
    else throw std::invalid_argument("train config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

std::string train_config_to_json(const TrainConfig& c) {
  json j;
  j["iterations"] = c.iterations;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["position_lr_init"] = c.position_lr_init;
  j["position_lr_final"] = c.position_lr_final;
  j["scale_position_lr_by_extent"] = c.scale_position_lr_by_extent;
  j["color_lr"] = c.color_lr;
  j["opacity_lr"] = c.opacity_lr;
  j["scale_lr"] = c.scale_lr;
  j["rotation_lr"] = c.rotation_lr;
  j["lambda_dssim"] = c.weights.lambda_dssim;
  j["beta"] = c.weights.beta;
  j["gamma"] = c.weights.gamma;
  j["densify_interval"] = c.densify_interval;
  j["densify_from"] = c.densify_from;
  j["densify_until"] = c.densify_until;
  j["densify_grad_threshold"] = c.densify.grad_threshold;
  j["opacity_floor"] = c.densify.opacity_floor;
  j["percent_dense"] = c.densify.percent_dense;
  j["enable_propagation"] = c.enable_propagation;
  j["enable_planar_loss"] = c.enable_planar_loss;
  j["propagation_interval"] = c.propagation_interval;
  j["propagation_from"] = c.propagation_from;
  j["propagation_until"] = c.propagation_until;
  j["propagation_iterations"] = c.propagation.num_iterations;
  j["patch_radius"] = c.propagation.patch_radius;
  j["ncc_min"] = c.propagation.ncc_min;
  j["num_neighbor_views"] = c.propagation.num_neighbor_views;
  j["sigma"] = c.sigma;
  j["holdout_every"] = c.holdout_every;
  j["eval_interval"] = c.eval_interval;
  j["checkpoint_interval"] = c.checkpoint_interval;
  j["normal_loss_mean"] = c.normal_loss_mean;
  j["max_gaussians"] = c.max_gaussians;
  j["debug_dumps"] = c.debug_dumps;
  return j.dump(2);
}

}  // namespace splatprop
