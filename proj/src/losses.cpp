#include "wdur/losses.hpp"

#include <cmath>
#include <string>

#include "wdur/errors.hpp"
#include "wdur/metrics.hpp"

namespace wdur {

void validate(const LossWeights& w) {
  if (!(w.lambda1 >= 0.0) || !(w.lambda2 >= 0.0)) {
    throw ParameterError("loss weights must be non-negative");
  }
}

double l_diff(const ImageTensor& eps_hat, const ImageTensor& eps) {
  require_same_shape(eps_hat, eps, "l_diff");
  if (eps.empty()) throw ShapeError("l_diff: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double d = static_cast<double>(eps_hat[i]) - eps[i];
    s += d * d;
  }
  return s / static_cast<double>(eps.size());
}

double tv(const ImageTensor& x) {
  const int h = x.height(), w = x.width(), c = x.channels();
  if (h < 2 || w < 2) throw ShapeError("tv: needs at least 2x2, got " + x.shape_string());
  double rows = 0.0, cols = 0.0;
  for (int r = 0; r < h; ++r)
    for (int q = 0; q < w; ++q)
      for (int ch = 0; ch < c; ++ch) {
        if (r + 1 < h) rows += std::abs(static_cast<double>(x.at(r + 1, q, ch)) - x.at(r, q, ch));
        if (q + 1 < w) cols += std::abs(static_cast<double>(x.at(r, q + 1, ch)) - x.at(r, q, ch));
      }
  return rows / (static_cast<double>(h - 1) * w * c) + cols / (static_cast<double>(h) * (w - 1) * c);
}

double l_realness(const DetailBands& pred, const DetailBands& gt, const LossWeights& w) {
  validate(w);
  double mse = 0.0, var = 0.0;
  for (auto [p, g] : {std::pair{&pred.V, &gt.V}, std::pair{&pred.Hb, &gt.Hb}, std::pair{&pred.D, &gt.D}}) {
    mse += l_diff(*p, *g);
    var += tv(*p);
  }
  return w.lambda1 * mse + w.lambda2 * var;
}

double l_consistent(const ImageTensor& sr, const ImageTensor& hr) {
  require_same_shape(sr, hr, "l_consistent");
  double mae = 0.0;
  for (std::size_t i = 0; i < sr.size(); ++i) mae += std::abs(static_cast<double>(sr[i]) - hr[i]);
  mae /= static_cast<double>(sr.size());
  return mae + (1.0 - ssim(sr, hr));
}

double l_total(double diff, double realness, double consistent) {
  if (!std::isfinite(diff) || !std::isfinite(realness) || !std::isfinite(consistent)) {
    throw NumericError("l_total: non-finite term (diff=" + std::to_string(diff) +
                       ", realness=" + std::to_string(realness) +
                       ", consistent=" + std::to_string(consistent) + ")");
  }
  return diff + realness + consistent;
}

}  // namespace wdur
