#pragma once

#include "wdur/tensor.hpp"

namespace wdur {

/// One level of 2D orthonormal Haar sub-bands. Every band is (H/2) x (W/2) x C.
///
/// Orientation: for a 2x2 block [[a, b], [e, f]]
///   A  = (a + b + e + f) / 2
///   V  = (a + b - e - f) / 2   (difference between rows)
///   Hb = (a - b + e - f) / 2   (difference between columns)
///   D  = (a - b - e + f) / 2
struct WaveletBands {
  ImageTensor A;
  ImageTensor V;
  ImageTensor Hb;
  ImageTensor D;
};

/// The three detail bands of a WaveletBands record.
struct DetailBands {
  ImageTensor V;
  ImageTensor Hb;
  ImageTensor D;

  bool operator==(const DetailBands&) const = default;
};

inline DetailBands details_of(const WaveletBands& b) { return {b.V, b.Hb, b.D}; }

/// Haar analysis of one 2x2 block. Shared by the tensor routines and the autodiff graph.
template <class Real>
inline void haar_analyze(Real a, Real b, Real e, Real f, Real& ll, Real& v, Real& h, Real& d) {
  const Real half = Real(0.5);
  ll = half * (a + b + e + f);
  v = half * (a + b - e - f);
  h = half * (a - b + e - f);
  d = half * (a - b - e + f);
}

/// Inverse of haar_analyze (the transform is its own transpose and orthonormal).
template <class Real>
inline void haar_synthesize(Real ll, Real v, Real h, Real d, Real& a, Real& b, Real& e, Real& f) {
  const Real half = Real(0.5);
  a = half * (ll + v + h + d);
  b = half * (ll + v - h - d);
  e = half * (ll - v + h - d);
  f = half * (ll - v - h + d);
}

/// Single-level Haar analysis. Throws DimensionError on odd or < 2 height/width.
WaveletBands dwt2(const ImageTensor& img);

/// Exact inverse of dwt2. Throws ShapeError when the bands disagree in shape.
ImageTensor idwt2(const WaveletBands& bands);

}  // namespace wdur
