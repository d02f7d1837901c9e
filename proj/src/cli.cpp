#include "splatprop/cli.hpp"

#include "splatprop/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace splatprop {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_synth(const fs::path& spec_path, const fs::path& out_dir) {
  const SyntheticSceneSpec spec = parse_scene_spec(read_text_file(spec_path));
  const Scene scene = generate_synthetic(spec);
  save_colmap(scene, out_dir);
  std::cout << "wrote " << scene.views.size() << " views and " << scene.points.size()
            << " points to " << out_dir.string() << "\n";
  return 0;
}

int cmd_train(const fs::path& scene_dir, const fs::path& config_path, const fs::path& out_dir) {
  TrainConfig cfg;
  if (!config_path.empty()) cfg = parse_train_config(read_text_file(config_path));
  const Scene scene = load_colmap(scene_dir);
  for (const CameraView& v : scene.views)
    if (v.image.empty())
      throw std::runtime_error("train: view '" + v.name + "' has no image file");
  if (scene.points.empty()) throw std::runtime_error("train: scene has no initialization points");

  GaussianCloud cloud = init_cloud_from_points(scene.points, scene.point_colors,
                                               scene_extent(scene.views, scene.points));
  std::filesystem::create_directories(out_dir);
  std::ofstream metrics(out_dir / "metrics.jsonl");
  const TrainReport report = train(scene, std::move(cloud), cfg, &metrics, out_dir);
  std::cout << "psnr " << report.psnr << " ssim " << report.ssim << " gaussians "
            << report.gaussian_count << "\n";
  return 0;
}

int cmd_render(const fs::path& cloud_path, const fs::path& scene_dir, int view_id,
               const fs::path& out_dir, int threads) {
  const GaussianCloud cloud = load_ply(cloud_path);
  const Scene scene = load_colmap(scene_dir);
  const CameraView* view = nullptr;
  for (const CameraView& v : scene.views)
    if (v.id == view_id) view = &v;
  if (!view) throw std::runtime_error("render: no view with id " + std::to_string(view_id));

  RenderConfig cfg;
  cfg.threads = threads;
  const GeoMaps maps = render(*view, cloud, cfg);
  fs::create_directories(out_dir);
  const std::string stem = fs::path(view->name).stem().string();
  write_ppm(out_dir / (stem + "_color.ppm"), maps.color);
  write_pfm(out_dir / (stem + "_depth.pfm"), maps.depth);
  write_pfm(out_dir / (stem + "_normal.pfm"), maps.normal);
  write_pfm(out_dir / (stem + "_alpha.pfm"), maps.alpha);
  std::cout << "wrote maps for view " << view_id << " to " << out_dir.string() << "\n";
  return 0;
}

int cmd_propagate(const fs::path& scene_dir, const fs::path& maps_dir, int view_id, int iters,
                  const fs::path& out_dir, int threads) {
  const Scene scene = load_colmap(scene_dir);
  size_t ref = scene.views.size();
  for (size_t i = 0; i < scene.views.size(); ++i)
    if (scene.views[i].id == view_id) ref = i;
  if (ref == scene.views.size())
    throw std::runtime_error("propagate: no view with id " + std::to_string(view_id));
  const CameraView& view = scene.views[ref];
  if (view.image.empty())
    throw std::runtime_error("propagate: view '" + view.name + "' has no image file");

  const std::string stem = fs::path(view.name).stem().string();
  GeoMaps rendered;
  rendered.depth = read_pfm_gray(maps_dir / (stem + "_depth.pfm"));
  rendered.normal = read_pfm_color(maps_dir / (stem + "_normal.pfm"));
  const fs::path alpha_path = maps_dir / (stem + "_alpha.pfm");
  if (fs::exists(alpha_path)) {
    rendered.alpha = read_pfm_gray(alpha_path);
  } else {  // assume full coverage wherever the depth is positive
    rendered.alpha = GrayImage(rendered.depth.width, rendered.depth.height, 0.0);
    for (size_t i = 0; i < rendered.depth.data.size(); ++i)
      rendered.alpha.data[i] = rendered.depth.data[i] > 0.0 ? 1.0 : 0.0;
  }

  PropagationConfig cfg;
  cfg.num_iterations = iters;
  cfg.threads = threads;
  const std::vector<size_t> neighbor_idx =
      select_neighbor_views(scene.views, ref, cfg.num_neighbor_views);
  std::vector<const CameraView*> neighbors;
  for (const size_t j : neighbor_idx) neighbors.push_back(&scene.views[j]);

  const PropagatedMaps result = propagate(view, neighbors, rendered, cfg);
  fs::create_directories(out_dir);
  write_pfm(out_dir / (stem + "_depth.pfm"), result.depth);
  write_pfm(out_dir / (stem + "_normal.pfm"), result.normal);
  write_pfm(out_dir / (stem + "_score.pfm"), result.score);
  std::cout << "wrote propagated maps for view " << view_id << " to " << out_dir.string() << "\n";
  return 0;
}

int cmd_eval(const fs::path& dir_a, const fs::path& dir_b) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir_a))
    if (entry.path().extension() == ".ppm") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("eval: no .ppm images in " + dir_a.string());

  json per_image = json::array();
  double sum_psnr = 0.0, sum_ssim = 0.0;
  for (const fs::path& fa : files) {
    const fs::path fb = dir_b / fa.filename();
    if (!fs::exists(fb)) throw std::runtime_error("eval: missing counterpart " + fb.string());
    const ColorImage a = read_ppm(fa);
    const ColorImage b = read_ppm(fb);
    const double p = psnr(a, b);
    const double s = ssim(a, b);
    sum_psnr += p;
    sum_ssim += s;
    per_image.push_back({{"name", fa.filename().string()}, {"psnr", p}, {"ssim", s}});
  }
  json out;
  out["images"] = per_image;
  out["mean_psnr"] = sum_psnr / double(files.size());
  out["mean_ssim"] = sum_ssim / double(files.size());
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"3D Gaussian splatting trainer with plane-propagation densification"};
  app.require_subcommand(1);

  std::string spec_path, scene_dir, maps_dir, config_path, out_dir, cloud_path, dir_a, dir_b;
  int view_id = 1, iters = 3, threads = 1;

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic scene (COLMAP layout)");
  synth->add_option("spec", spec_path, "scene spec JSON")->required();
  synth->add_option("out", out_dir, "output directory")->required();

  CLI::App* train_cmd = app.add_subcommand("train", "Optimize a Gaussian cloud on a scene");
  train_cmd->add_option("scene", scene_dir, "COLMAP scene directory")->required();
  train_cmd->add_option("--config", config_path, "training config JSON");
  train_cmd->add_option("--out", out_dir, "output directory")->required();

  CLI::App* render_cmd = app.add_subcommand("render", "Render one view of a saved cloud");
  render_cmd->add_option("cloud", cloud_path, "PLY cloud")->required();
  render_cmd->add_option("scene", scene_dir, "COLMAP scene directory")->required();
  render_cmd->add_option("--view", view_id, "view id")->required();
  render_cmd->add_option("--out", out_dir, "output directory")->default_val("render_out");
  render_cmd->add_option("--threads", threads, "worker threads");

  CLI::App* prop_cmd = app.add_subcommand("propagate", "Propagate rendered depth/normal maps");
  prop_cmd->add_option("scene", scene_dir, "COLMAP scene directory")->required();
  prop_cmd->add_option("maps", maps_dir, "directory with <stem>_{depth,normal,alpha}.pfm")
      ->required();
  prop_cmd->add_option("--view", view_id, "view id")->required();
  prop_cmd->add_option("--iters", iters, "propagation iterations");
  prop_cmd->add_option("--out", out_dir, "output directory")->default_val("propagate_out");
  prop_cmd->add_option("--threads", threads, "worker threads");

  CLI::App* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM between two image directories");
  eval_cmd->add_option("dirA", dir_a, "first image directory")->required();
  eval_cmd->add_option("dirB", dir_b, "second image directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) return cmd_synth(spec_path, out_dir);
    if (train_cmd->parsed()) return cmd_train(scene_dir, config_path, out_dir);
    if (render_cmd->parsed()) return cmd_render(cloud_path, scene_dir, view_id, out_dir, threads);
    if (prop_cmd->parsed()) return cmd_propagate(scene_dir, maps_dir, view_id, iters, out_dir, threads);
    if (eval_cmd->parsed()) return cmd_eval(dir_a, dir_b);
  } catch (const NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace splatprop
