#pragma once

#include "wdur/tensor.hpp"
#include "wdur/wavelet.hpp"

namespace wdur {

struct LossWeights {
  double lambda1 = 0.1;  // band MSE
  double lambda2 = 2.0;  // band total variation
};

void validate(const LossWeights& w);

/// Mean squared error between predicted and true noise.
double l_diff(const ImageTensor& eps_hat, const ImageTensor& eps);
/// Anisotropic total variation: mean |row difference| + mean |column difference|.
double tv(const ImageTensor& x);
/// lambda1 * sum_band MSE(pred, gt) + lambda2 * sum_band tv(pred) over the V, H, D bands.
double l_realness(const DetailBands& pred, const DetailBands& gt, const LossWeights& w = {});
/// MAE(sr, hr) + 1 - SSIM(sr, hr).
double l_consistent(const ImageTensor& sr, const ImageTensor& hr);
/// Unweighted sum; throws NumericError if any term is not finite.
double l_total(double diff, double realness, double consistent);

}  // namespace wdur
