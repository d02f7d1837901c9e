#include "splatprop/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace splatprop {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_window() {
  std::array<double, kWindow> w{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    w[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable zero-padded convolution with the symmetric SSIM window. The
// operator is self-adjoint, so the same routine backpropagates statistics.
GrayImage conv_window(const GrayImage& in) {
  static const std::array<double, kWindow> w = gaussian_window();
  const int r = kWindow / 2;
  GrayImage tmp(in.width, in.height, 0.0);
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) {
        const int xx = x + k;
        if (xx < 0 || xx >= in.width) continue;
        acc += w[k + r] * in.at(xx, y);
      }
      tmp.at(x, y) = acc;
    }
  GrayImage out(in.width, in.height, 0.0);
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) {
        const int yy = y + k;
        if (yy < 0 || yy >= in.height) continue;
        acc += w[k + r] * tmp.at(x, yy);
      }
      out.at(x, y) = acc;
    }
  return out;
}

GrayImage channel(const ColorImage& image, int c) {
  GrayImage out(image.width, image.height);
  for (size_t i = 0; i < image.data.size(); ++i) out.data[i] = image.data[i][c];
  return out;
}

void check_same_size(const ColorImage& a, const ColorImage& b, const char* who) {
  if (a.width != b.width || a.height != b.height)
    throw std::invalid_argument(std::string(who) + ": image dimensions differ");
}

struct SsimResult {
  double mean = 0.0;
  ColorImage grad_a;  // d(mean ssim)/da, filled only when requested
};

SsimResult ssim_impl(const ColorImage& a, const ColorImage& b, bool with_grad) {
  const size_t entries = a.data.size() * 3;
  SsimResult result;
  if (with_grad) result.grad_a = ColorImage(a.width, a.height, Vec3::Zero());

  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    const GrayImage x = channel(a, c);
    const GrayImage y = channel(b, c);
    GrayImage x2 = x, y2 = y, xy = x;
    for (size_t i = 0; i < x.data.size(); ++i) {
      x2.data[i] = x.data[i] * x.data[i];
      y2.data[i] = y.data[i] * y.data[i];
      xy.data[i] = x.data[i] * y.data[i];
    }
    const GrayImage mu_x = conv_window(x), mu_y = conv_window(y);
    const GrayImage u_xx = conv_window(x2), u_yy = conv_window(y2), u_xy = conv_window(xy);

    GrayImage g_mu_x, g_uxx, g_uxy;
    if (with_grad) {
      g_mu_x = GrayImage(x.width, x.height, 0.0);
      g_uxx = GrayImage(x.width, x.height, 0.0);
      g_uxy = GrayImage(x.width, x.height, 0.0);
    }

    const double upstream = 1.0 / double(entries);
    for (size_t i = 0; i < x.data.size(); ++i) {
      const double mx = mu_x.data[i], my = mu_y.data[i];
      const double sx = u_xx.data[i] - mx * mx;
      const double sy = u_yy.data[i] - my * my;
      const double sxy = u_xy.data[i] - mx * my;
      const double a1 = 2.0 * mx * my + kC1;
      const double a2 = 2.0 * sxy + kC2;
      const double b1 = mx * mx + my * my + kC1;
      const double b2 = sx + sy + kC2;
      const double s = (a1 * a2) / (b1 * b2);
      total += s;
      if (!with_grad) continue;

      const double g_a1 = upstream * a2 / (b1 * b2);
      const double g_a2 = upstream * a1 / (b1 * b2);
      const double g_b1 = -upstream * s / b1;
      const double g_b2 = -upstream * s / b2;
      const double g_sxy = 2.0 * g_a2;
      const double g_sx = g_b2;
      g_mu_x.data[i] = 2.0 * my * g_a1 + 2.0 * mx * g_b1 - 2.0 * mx * g_sx - my * g_sxy;
      g_uxx.data[i] = g_sx;
      g_uxy.data[i] = g_sxy;
    }

    if (with_grad) {
      const GrayImage back_mu = conv_window(g_mu_x);
      const GrayImage back_uxx = conv_window(g_uxx);
      const GrayImage back_uxy = conv_window(g_uxy);
      for (size_t i = 0; i < x.data.size(); ++i)
        result.grad_a.data[i][c] =
            back_mu.data[i] + 2.0 * x.data[i] * back_uxx.data[i] + y.data[i] * back_uxy.data[i];
    }
  }
  result.mean = total / double(entries);
  return result;
}

}  // namespace

double ssim(const ColorImage& a, const ColorImage& b) {
  check_same_size(a, b, "ssim");
  return ssim_impl(a, b, false).mean;
}

double psnr(const ColorImage& a, const ColorImage& b) {
  check_same_size(a, b, "psnr");
  double mse = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) mse += (a.data[i] - b.data[i]).squaredNorm();
  mse /= double(a.data.size() * 3);
  if (mse < 1e-10) return 100.0;
  return 10.0 * std::log10(1.0 / mse);
}

ImageLoss l1_dssim(const ColorImage& rendered, const ColorImage& target, double lambda) {
  check_same_size(rendered, target, "l1_dssim");
  ImageLoss out;
  out.grad = ColorImage(rendered.width, rendered.height, Vec3::Zero());

  const double entries = double(rendered.data.size() * 3);
  double l1 = 0.0;
  for (size_t i = 0; i < rendered.data.size(); ++i) {
    const Vec3 diff = rendered.data[i] - target.data[i];
    l1 += diff.cwiseAbs().sum();
    for (int c = 0; c < 3; ++c)
      out.grad.data[i][c] = (1.0 - lambda) * (diff[c] > 0.0 ? 1.0 : (diff[c] < 0.0 ? -1.0 : 0.0)) / entries;
  }
  l1 /= entries;

  double dssim = 0.0;
  if (lambda != 0.0) {
    const SsimResult s = ssim_impl(rendered, target, true);
    dssim = (1.0 - s.mean) / 2.0;
    for (size_t i = 0; i < rendered.data.size(); ++i)
      out.grad.data[i] += lambda * -0.5 * s.grad_a.data[i];
  }
  out.value = (1.0 - lambda) * l1 + lambda * dssim;
  return out;
}

ImageLoss normal_loss(const ColorImage& rendered_normal, const ColorImage& target_normal,
                      const MaskImage& valid, bool mean_over_valid) {
  check_same_size(rendered_normal, target_normal, "normal_loss");
  ImageLoss out;
  out.grad = ColorImage(rendered_normal.width, rendered_normal.height, Vec3::Zero());

  size_t count = 0;
  for (const uint8_t v : valid.data) count += v ? 1 : 0;
  if (count == 0) return out;
  const double weight = mean_over_valid ? 1.0 / double(count) : 1.0;

  double total = 0.0;
  for (size_t i = 0; i < rendered_normal.data.size(); ++i) {
    if (!valid.data[i]) continue;
    const Vec3& n_hat = rendered_normal.data[i];
    const Vec3& n_bar = target_normal.data[i];
    const Vec3 diff = n_hat - n_bar;
    const double dot = n_hat.dot(n_bar);
    total += diff.cwiseAbs().sum() + std::abs(1.0 - dot);
    Vec3 g = Vec3::Zero();
    for (int c = 0; c < 3; ++c) g[c] = diff[c] > 0.0 ? 1.0 : (diff[c] < 0.0 ? -1.0 : 0.0);
    g += (1.0 - dot) >= 0.0 ? Vec3(-n_bar) : Vec3(n_bar);
    out.grad.data[i] = weight * g;
  }
  out.value = weight * total;
  return out;
}

ScaleLoss scale_loss(const GaussianCloud& cloud) {
  ScaleLoss out;
  out.d_log_scales.assign(cloud.size(), Vec3::Zero());
  if (cloud.empty()) return out;
  const double inv_n = 1.0 / double(cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 s = cloud.get(i).scales();
    int k = 0;
    if (s[1] < s[k]) k = 1;
    if (s[2] < s[k]) k = 2;
    out.value += s[k] * inv_n;
    out.d_log_scales[i][k] = s[k] * inv_n;
  }
  return out;
}

}  // namespace splatprop
