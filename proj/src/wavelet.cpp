#include "wdur/wavelet.hpp"

#include <string>

#include "wdur/errors.hpp"

namespace wdur {

namespace {

void require_even(int n, const char* axis) {
  if (n < 2 || n % 2 != 0) {
    throw DimensionError(std::string("dwt2: ") + axis + " must be even and >= 2, got " +
                         std::to_string(n));
  }
}

}  // namespace

WaveletBands dwt2(const ImageTensor& img) {
  require_even(img.height(), "height");
  require_even(img.width(), "width");
  const int h = img.height() / 2;
  const int w = img.width() / 2;
  const int c = img.channels();
  WaveletBands out{ImageTensor(h, w, c), ImageTensor(h, w, c), ImageTensor(h, w, c),
                   ImageTensor(h, w, c)};
  for (int r = 0; r < h; ++r) {
    for (int col = 0; col < w; ++col) {
      for (int ch = 0; ch < c; ++ch) {
        haar_analyze(img.at(2 * r, 2 * col, ch), img.at(2 * r, 2 * col + 1, ch),
                     img.at(2 * r + 1, 2 * col, ch), img.at(2 * r + 1, 2 * col + 1, ch),
                     out.A.at(r, col, ch), out.V.at(r, col, ch), out.Hb.at(r, col, ch),
                     out.D.at(r, col, ch));
      }
    }
  }
  return out;
}

ImageTensor idwt2(const WaveletBands& bands) {
  require_same_shape(bands.A, bands.V, "idwt2 (A vs V)");
  require_same_shape(bands.A, bands.Hb, "idwt2 (A vs H)");
  require_same_shape(bands.A, bands.D, "idwt2 (A vs D)");
  const int h = bands.A.height();
  const int w = bands.A.width();
  const int c = bands.A.channels();
  ImageTensor out(2 * h, 2 * w, c);
  for (int r = 0; r < h; ++r) {
    for (int col = 0; col < w; ++col) {
      for (int ch = 0; ch < c; ++ch) {
        haar_synthesize(bands.A.at(r, col, ch), bands.V.at(r, col, ch), bands.Hb.at(r, col, ch),
                        bands.D.at(r, col, ch), out.at(2 * r, 2 * col, ch),
                        out.at(2 * r, 2 * col + 1, ch), out.at(2 * r + 1, 2 * col, ch),
                        out.at(2 * r + 1, 2 * col + 1, ch));
      }
    }
  }
  return out;
}

}  // namespace wdur
