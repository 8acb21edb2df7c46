#pragma once

#include <span>
#include <string>
#include <vector>

#include "wdur/tensor.hpp"

namespace wdur {

/// PSNR returned for identical images (zero MSE).
inline constexpr double kPsnrCap = 100.0;
/// Side length of the square SSIM window (uniform weights, stride 1).
inline constexpr int kSsimWindow = 8;

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
  double sam = 0.0;  // degrees
  double sre = 0.0;  // percent
  double ag = 0.0;
};

/// 10 log10(peak^2 / MSE), capped at kPsnrCap.
double psnr(const ImageTensor& pred, const ImageTensor& gt, double peak = 1.0);

/// Mean local SSIM over all 8x8 windows and channels with C1 = (0.01 peak)^2, C2 = (0.03 peak)^2.
double ssim(const ImageTensor& pred, const ImageTensor& gt, double peak = 1.0);

/// Mean per-pixel spectral angle in degrees; zero-norm pixels are skipped.
double sam(const ImageTensor& pred, const ImageTensor& gt);

/// Like sam() but also reports how many pixels were skipped.
double sam(const ImageTensor& pred, const ImageTensor& gt, int& skipped);

/// 100 * mean over pixels of ||g - p|| / (||g|| + 1e-8).
double sre(const ImageTensor& pred, const ImageTensor& gt);

/// Mean over pixels (excluding the last row/column) and channels of sqrt((gx^2 + gy^2) / 2).
double ag(const ImageTensor& img);

MetricReport evaluate(const ImageTensor& pred, const ImageTensor& gt);

/// SSIM core shared by the metric and the training loss. `x` and `y` are H x W x C row-major.
/// Returns the mean SSIM; when `grad_x` is non-empty it receives dSSIM/dx.
template <class Real>
Real ssim_core(std::span<const Real> x, std::span<const Real> y, int height, int width,
               int channels, Real peak, std::span<Real> grad_x);

}  // namespace wdur
