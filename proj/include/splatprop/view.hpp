#pragma once

#include "splatprop/camera.hpp"
#include "splatprop/image.hpp"

#include <string>

namespace splatprop {

/// A posed input image, optionally with ground-truth geometry (synthetic
/// scenes record exact depth/normal maps for verification).
struct CameraView {
  int id = 0;
  std::string name;
  Intrinsics intrinsics;
  Pose pose;
  ColorImage image;

  GrayImage gt_depth;
  ColorImage gt_normal;  // camera frame, oriented toward the camera
  MaskImage gt_valid;

  bool has_ground_truth() const { return !gt_depth.empty(); }
};

}  // namespace splatprop
