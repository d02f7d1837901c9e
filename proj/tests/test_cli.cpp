#include "splatprop/cli.hpp"
#include "splatprop/scene_io.hpp"
#include "support/scenes.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace splatprop;
namespace spt = splatprop::testing;
namespace fs = std::filesystem;

namespace {

int run(std::initializer_list<const char*> args, std::string* out = nullptr) {
  std::vector<const char*> argv = {"splatprop"};
  argv.insert(argv.end(), args.begin(), args.end());
  std::ostringstream captured;
  std::streambuf* old = std::cout.rdbuf(captured.rdbuf());
  const int code = run_cli(int(argv.size()), argv.data());
  std::cout.rdbuf(old);
  if (out) *out = captured.str();
  return code;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("splatprop_cli_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("cli: synth -> train -> render -> propagate -> eval smoke path") {
  TempDir dir("smoke");
  const fs::path spec_path = dir.path / "scene.json";
  {
    SyntheticSceneSpec spec = spt::textureless_floor_spec(64, 48, 6, 60, 71);
    spec.init_points.min_contrast = 0.0;
    std::ofstream(spec_path) << scene_spec_to_json(spec);
  }
  const fs::path scene_dir = dir.path / "scene";
  CHECK(run({"synth", spec_path.c_str(), scene_dir.c_str()}) == 0);
  CHECK(fs::exists(scene_dir / "cameras.txt"));
  CHECK(fs::exists(scene_dir / "images" / "view_000.ppm"));

  const fs::path cfg_path = dir.path / "train.json";
  std::ofstream(cfg_path) << R"({"iterations": 40, "densify_from": 10, "densify_interval": 20,
      "propagation_from": 10, "propagation_interval": 15, "propagation_until": 35,
      "densify_until": 35, "eval_interval": 20, "checkpoint_interval": 20,
      "propagation_iterations": 2})";
  const fs::path out_dir = dir.path / "run";
  CHECK(run({"train", scene_dir.c_str(), "--config", cfg_path.c_str(), "--out",
             out_dir.c_str()}) == 0);
  CHECK(fs::exists(out_dir / "metrics.jsonl"));
  CHECK(fs::exists(out_dir / "report.json"));
  CHECK(fs::exists(out_dir / "final_cloud.ply"));
  CHECK(fs::exists(out_dir / "checkpoint_000040.ply"));

  const fs::path render_dir = dir.path / "renders";
  CHECK(run({"render", (out_dir / "final_cloud.ply").c_str(), scene_dir.c_str(), "--view", "1",
             "--out", render_dir.c_str()}) == 0);
  CHECK(fs::exists(render_dir / "view_000_color.ppm"));
  CHECK(fs::exists(render_dir / "view_000_depth.pfm"));

  const fs::path prop_dir = dir.path / "propagated";
  CHECK(run({"propagate", scene_dir.c_str(), render_dir.c_str(), "--view", "1", "--iters", "2",
             "--out", prop_dir.c_str()}) == 0);
  CHECK(fs::exists(prop_dir / "view_000_depth.pfm"));
  CHECK(fs::exists(prop_dir / "view_000_score.pfm"));

  // eval of a directory against itself caps at 100 dB
  std::string eval_out;
  CHECK(run({"eval", (scene_dir / "images").c_str(), (scene_dir / "images").c_str()},
            &eval_out) == 0);
  CHECK(eval_out.find("\"mean_psnr\": 100.0") != std::string::npos);
  CHECK(eval_out.find("\"mean_ssim\": 1.0") != std::string::npos);
}

TEST_CASE("cli: exit codes for usage and data errors") {
  CHECK(run({}) == 1);
  CHECK(run({"not_a_command"}) == 1);

  std::string ignored;
  // missing config file -> data error (2), message carries the filename
  TempDir dir("exit_codes");
  const fs::path scene_dir = dir.path / "scene";
  {
    SyntheticSceneSpec spec = spt::textureless_floor_spec(48, 36, 4, 30, 73);
    spec.init_points.min_contrast = 0.0;
    save_colmap(generate_synthetic(spec), scene_dir);
  }
  std::ostringstream captured_err;
  std::streambuf* old = std::cerr.rdbuf(captured_err.rdbuf());
  const int code = run(
      {"train", scene_dir.c_str(), "--config", "/nonexistent/config.json", "--out",
       (dir.path / "out").c_str()},
      &ignored);
  std::cerr.rdbuf(old);
  CHECK(code == 2);
  CHECK(captured_err.str().find("/nonexistent/config.json") != std::string::npos);

  CHECK(run({"eval", "/nonexistent/a", "/nonexistent/b"}, &ignored) == 2);
}
