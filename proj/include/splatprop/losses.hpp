#pragma once

#include "splatprop/gaussians.hpp"
#include "splatprop/image.hpp"

namespace splatprop {

/// Loss mix: total = (1-lambda) L1 + lambda D-SSIM + beta L_normal + gamma L_scale.
struct LossWeights {
  double lambda_dssim = 0.2;
  double beta = 0.001;
  double gamma = 100.0;
};

struct ImageLoss {
  double value = 0.0;
  ColorImage grad;  // d value / d rendered
};

/// (1-lambda) mean|r-t| + lambda (1-SSIM(r,t))/2 with the 11x11 sigma=1.5
/// SSIM window (k1=0.01, k2=0.03). Throws on dimension mismatch.
ImageLoss l1_dssim(const ColorImage& rendered, const ColorImage& target, double lambda);

/// Mean SSIM over pixels and channels; symmetric in its arguments.
double ssim(const ColorImage& a, const ColorImage& b);

/// 10 log10(1 / MSE) for images in [0,1]; capped at 100 dB when MSE < 1e-10.
double psnr(const ColorImage& a, const ColorImage& b);

/// Per-pixel |N^ - N~|_1 + |1 - N^.N~| over the valid set; zero gradient
/// outside it. mean_over_valid=false gives the plain sum.
ImageLoss normal_loss(const ColorImage& rendered_normal, const ColorImage& target_normal,
                      const MaskImage& valid, bool mean_over_valid = true);

struct ScaleLoss {
  double value = 0.0;
  std::vector<Vec3> d_log_scales;  // gradient flows to the argmin scale only
};

/// Mean over Gaussians of the smallest activated scale.
ScaleLoss scale_loss(const GaussianCloud& cloud);

inline double planar_loss(double normal_value, double scale_value, double beta, double gamma) {
  return beta * normal_value + gamma * scale_value;
}

}  // namespace splatprop
