#pragma once

#include "splatprop/camera.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace splatprop {

/// Row-major H x W raster. (0,0) is the top-left pixel.
template <typename T>
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int w, int h, const T& fill = T{}) : width(w), height(h), data(size_t(w) * h, fill) {}

  bool empty() const { return data.empty(); }
  size_t size() const { return data.size(); }
  bool inside(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

  T& at(int x, int y) { return data[size_t(y) * width + x]; }
  const T& at(int x, int y) const { return data[size_t(y) * width + x]; }

  void fill(const T& value) { std::fill(data.begin(), data.end(), value); }
};

using GrayImage = Grid<double>;
using ColorImage = Grid<Vec3>;
using MaskImage = Grid<uint8_t>;

/// 0.299 R + 0.587 G + 0.114 B.
GrayImage luma(const ColorImage& image);

/// Bilinear sample; false when any of the four taps is out of bounds.
bool sample_bilinear(const GrayImage& image, const Vec2& p, double* value);
bool sample_bilinear(const ColorImage& image, const Vec2& p, Vec3* value);

// --- 8-bit PPM (P6). Values clamped to [0,1] and quantized on write. ---
void write_ppm(const std::filesystem::path& path, const ColorImage& image);
ColorImage read_ppm(const std::filesystem::path& path);

// --- PFM float maps, little-endian (scale field -1.0), bottom row first. ---
void write_pfm(const std::filesystem::path& path, const GrayImage& image);
void write_pfm(const std::filesystem::path& path, const ColorImage& image);
GrayImage read_pfm_gray(const std::filesystem::path& path);
ColorImage read_pfm_color(const std::filesystem::path& path);

}  // namespace splatprop
