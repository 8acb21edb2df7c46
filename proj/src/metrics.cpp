#include "wdur/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wdur/errors.hpp"

namespace wdur {

double psnr(const ImageTensor& pred, const ImageTensor& gt, double peak) {
  require_same_shape(pred, gt, "psnr");
  if (!(peak > 0.0)) throw ParameterError("psnr: peak must be positive");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - gt[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(pred.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

template <class Real>
Real ssim_core(std::span<const Real> x, std::span<const Real> y, int height, int width,
               int channels, Real peak, std::span<Real> grad_x) {
  const int win = kSsimWindow;
  if (height < win || width < win) {
    throw ParameterError("ssim: image " + std::to_string(height) + "x" + std::to_string(width) +
                         " is smaller than the " + std::to_string(win) + "x" + std::to_string(win) +
                         " window");
  }
  const Real c1 = (Real(0.01) * peak) * (Real(0.01) * peak);
  const Real c2 = (Real(0.03) * peak) * (Real(0.03) * peak);
  const int wy = height - win + 1;
  const int wx = width - win + 1;
  const Real n = Real(win * win);
  const Real windows = Real(wy) * Real(wx) * Real(channels);
  const bool want_grad = !grad_x.empty();
  if (want_grad) std::fill(grad_x.begin(), grad_x.end(), Real(0));

  auto idx = [&](int r, int c, int ch) {
    return (static_cast<std::size_t>(r) * width + c) * channels + ch;
  };

  Real total = 0;
  for (int ch = 0; ch < channels; ++ch) {
    for (int r0 = 0; r0 < wy; ++r0) {
      for (int q0 = 0; q0 < wx; ++q0) {
        Real sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
        for (int r = r0; r < r0 + win; ++r) {
          for (int q = q0; q < q0 + win; ++q) {
            const Real a = x[idx(r, q, ch)];
            const Real b = y[idx(r, q, ch)];
            sx += a;
            sy += b;
            sxx += a * a;
            syy += b * b;
            sxy += a * b;
          }
        }
        const Real mx = sx / n, my = sy / n;
        const Real vx = sxx / n - mx * mx;
        const Real vy = syy / n - my * my;
        const Real cxy = sxy / n - mx * my;
        const Real l_num = 2 * mx * my + c1;
        const Real l_den = mx * mx + my * my + c1;
        const Real s_num = 2 * cxy + c2;
        const Real s_den = vx + vy + c2;
        const Real value = (l_num * s_num) / (l_den * s_den);
        total += value;
        if (!want_grad) continue;
        // Partials of the window SSIM w.r.t. the x statistics.
        const Real d_mx = value * (2 * my / l_num - 2 * mx / l_den);
        const Real d_vx = -value / s_den;
        const Real d_cxy = value * 2 / s_num;
        for (int r = r0; r < r0 + win; ++r) {
          for (int q = q0; q < q0 + win; ++q) {
            const std::size_t i = idx(r, q, ch);
            grad_x[i] += (d_mx + d_vx * 2 * (x[i] - mx) + d_cxy * (y[i] - my)) / n;
          }
        }
      }
    }
  }
  if (want_grad) {
    for (Real& g : grad_x) g /= windows;
  }
  return total / windows;
}

template float ssim_core<float>(std::span<const float>, std::span<const float>, int, int, int,
                                float, std::span<float>);
template double ssim_core<double>(std::span<const double>, std::span<const double>, int, int, int,
                                  double, std::span<double>);

double ssim(const ImageTensor& pred, const ImageTensor& gt, double peak) {
  require_same_shape(pred, gt, "ssim");
  const std::vector<double> x(pred.values().begin(), pred.values().end());
  const std::vector<double> y(gt.values().begin(), gt.values().end());
  return ssim_core<double>(x, y, pred.height(), pred.width(), pred.channels(), peak, {});
}

double sam(const ImageTensor& pred, const ImageTensor& gt, int& skipped) {
  require_same_shape(pred, gt, "sam");
  if (pred.channels() < 2) throw ParameterError("sam: needs at least 2 channels");
  const int c = pred.channels();
  const std::size_t pixels = pred.size() / c;
  double acc = 0.0;
  std::size_t used = 0;
  skipped = 0;
  for (std::size_t p = 0; p < pixels; ++p) {
    double np = 0.0, ng = 0.0;
    for (int k = 0; k < c; ++k) {
      const double a = pred[p * c + k];
      const double b = gt[p * c + k];
      np += a * a;
      ng += b * b;
    }
    if (np == 0.0 || ng == 0.0) {
      ++skipped;
      continue;
    }
    np = std::sqrt(np);
    ng = std::sqrt(ng);
    // 2 atan2(|u - v|, |u + v|) for unit u, v; exact zero for parallel spectra.
    double diff = 0.0, sum = 0.0;
    for (int k = 0; k < c; ++k) {
      const double u = pred[p * c + k] / np;
      const double v = gt[p * c + k] / ng;
      diff += (u - v) * (u - v);
      sum += (u + v) * (u + v);
    }
    acc += 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
    ++used;
  }
  if (used == 0) throw NumericError("sam: every pixel has a zero-norm spectrum");
  return acc / static_cast<double>(used) * 180.0 / std::numbers::pi;
}

double sam(const ImageTensor& pred, const ImageTensor& gt) {
  int skipped = 0;
  return sam(pred, gt, skipped);
}

double sre(const ImageTensor& pred, const ImageTensor& gt) {
  require_same_shape(pred, gt, "sre");
  const int c = pred.channels();
  const std::size_t pixels = pred.size() / c;
  double acc = 0.0;
  for (std::size_t p = 0; p < pixels; ++p) {
    double err = 0.0, ng = 0.0;
    for (int k = 0; k < c; ++k) {
      const double g = gt[p * c + k];
      const double d = g - pred[p * c + k];
      err += d * d;
      ng += g * g;
    }
    acc += std::sqrt(err) / (std::sqrt(ng) + 1e-8);
  }
  return 100.0 * acc / static_cast<double>(pixels);
}

double ag(const ImageTensor& img) {
  if (img.height() < 2 || img.width() < 2) throw ParameterError("ag: image must be at least 2x2");
  double acc = 0.0;
  for (int r = 0; r + 1 < img.height(); ++r) {
    for (int q = 0; q + 1 < img.width(); ++q) {
      for (int ch = 0; ch < img.channels(); ++ch) {
        const double gx = static_cast<double>(img.at(r, q + 1, ch)) - img.at(r, q, ch);
        const double gy = static_cast<double>(img.at(r + 1, q, ch)) - img.at(r, q, ch);
        acc += std::sqrt((gx * gx + gy * gy) / 2.0);
      }
    }
  }
  return acc / (static_cast<double>(img.height() - 1) * (img.width() - 1) * img.channels());
}

MetricReport evaluate(const ImageTensor& pred, const ImageTensor& gt) {
  MetricReport m;
  m.psnr = psnr(pred, gt);
  m.ssim = ssim(pred, gt);
  m.sam = sam(pred, gt);
  m.sre = sre(pred, gt);
  m.ag = ag(pred);
  return m;
}

}  // namespace wdur
