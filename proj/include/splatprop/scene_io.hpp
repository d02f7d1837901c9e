#pragma once

#include "splatprop/gaussians.hpp"
#include "splatprop/view.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace splatprop {

struct Scene {
  std::vector<CameraView> views;
  std::vector<Vec3> points;
  std::vector<Vec3> point_colors;
};

/// COLMAP text-format loader: cameras.txt, images.txt, points3D.txt plus
/// images/<name> PPMs and optional gt/<stem>_{depth,normal}.pfm maps.
/// PINHOLE and SIMPLE_PINHOLE models only; malformed lines are reported with
/// their line number.
Scene load_colmap(const std::filesystem::path& dir);
void save_colmap(const Scene& scene, const std::filesystem::path& dir);

/// 3DGS-style initialization: positions/colors copied, opacity 0.1, identity
/// rotation, isotropic scale from the mean distance to the 3 nearest points
/// (0.1 * scene_extent when the cloud has a single point).
GaussianCloud init_cloud_from_points(const std::vector<Vec3>& points,
                                     const std::vector<Vec3>& colors, double scene_extent);

/// Camera-based extent: 1.1 * max distance of any camera center from their
/// centroid. Falls back to the point bounding radius, then 1.0.
double scene_extent(const std::vector<CameraView>& views, const std::vector<Vec3>& points = {});

// --- synthetic ground-truth scenes -----------------------------------------

struct PlaneTexture {
  enum class Type { Checker, ValueNoise, Flat } type = Type::ValueNoise;
  uint64_t seed = 0;
  double scale = 1.0;  // feature size in meters
  Vec3 base_color = Vec3(0.5, 0.5, 0.5);
  Vec3 alt_color = Vec3(0.1, 0.1, 0.1);  // checker only
  double amplitude = 0.5;                // value-noise contrast
};

struct ScenePlane {
  Vec3 normal = Vec3(0, 0, 1);  // world frame, n . x = d
  double d = 0.0;
  PlaneTexture texture;
};

struct CameraArcSpec {
  int count = 8;
  double radius = 6.0;
  double height = 3.0;
  Vec3 target = Vec3::Zero();
  double azimuth_start_deg = -60.0;
  double azimuth_end_deg = 60.0;
};

struct InitPointsSpec {
  int count = 200;
  double min_contrast = 0.0;  // local luma stddev an accepted point needs
};

struct SyntheticSceneSpec {
  std::vector<ScenePlane> planes;
  CameraArcSpec cameras;
  int width = 128;
  int height = 96;
  double fov_deg = 60.0;  // horizontal
  double noise_stddev = 0.0;
  InitPointsSpec init_points;
  uint64_t seed = 1;

  void validate() const;  // >= 1 plane, >= 2 cameras
};

SyntheticSceneSpec parse_scene_spec(const std::string& json_text);
std::string scene_spec_to_json(const SyntheticSceneSpec& spec);

/// Ray-casts every pixel against the planes (nearest hit), records exact
/// depth/normal maps, renders procedural textures, and samples SfM-like
/// sparse points in textured areas. Deterministic for a fixed seed.
Scene generate_synthetic(const SyntheticSceneSpec& spec);

}  // namespace splatprop
