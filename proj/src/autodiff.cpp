#include "wdur/autodiff.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "wdur/metrics.hpp"
#include "wdur/wavelet.hpp"

namespace wdur {

namespace {

template <class Real>
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Real>
using MatMap = Eigen::Map<Mat<Real>>;
template <class Real>
using ConstMatMap = Eigen::Map<const Mat<Real>>;
template <class Real>
using StridedMap = Eigen::Map<Mat<Real>, 0, Eigen::OuterStride<>>;
template <class Real>
using ConstStridedMap = Eigen::Map<const Mat<Real>, 0, Eigen::OuterStride<>>;

std::string shape3(int h, int w, int c) {
  return std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c);
}

template <class Real>
Real sign_of(Real v) {
  return v > 0 ? Real(1) : (v < 0 ? Real(-1) : Real(0));
}

}  // namespace

std::size_t element_count(const std::vector<int>& dims) {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

std::string dims_string(const std::vector<int>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

template <class Real>
Var Graph<Real>::push(int h, int w, int c, std::vector<Real> value) {
  Node n;
  n.h = h;
  n.w = w;
  n.c = c;
  n.dims = {h, w, c};
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <class Real>
void Graph<Real>::set_back(Var out, std::function<void()> fn) {
  if (record_) nodes_[out.id].back = std::move(fn);
}

template <class Real>
void Graph<Real>::require_same(Var a, Var b, const char* what) const {
  const Node& x = node(a);
  const Node& y = node(b);
  if (x.h != y.h || x.w != y.w || x.c != y.c) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape3(x.h, x.w, x.c) + " vs " +
                     shape3(y.h, y.w, y.c));
  }
}

template <class Real>
Var Graph<Real>::constant(int h, int w, int c, std::vector<Real> values) {
  if (values.size() != static_cast<std::size_t>(h) * w * c) {
    throw ShapeError("constant: " + std::to_string(values.size()) + " values for shape " +
                     shape3(h, w, c));
  }
  return push(h, w, c, std::move(values));
}

template <class Real>
Var Graph<Real>::constant(const ImageTensor& t) {
  return push(t.height(), t.width(), t.channels(),
              std::vector<Real>(t.values().begin(), t.values().end()));
}

template <class Real>
Var Graph<Real>::parameter(const ParamStore<Real>& store, const std::string& name) {
  const Param<Real>& p = store.get(name);
  Var v = p.dims.size() == 3 ? push(p.dims[0], p.dims[1], p.dims[2], p.value)
                             : push(1, 1, static_cast<int>(p.size()), p.value);
  node(v).dims = p.dims;
  node(v).param = &p;
  return v;
}

template <class Real>
ImageTensor Graph<Real>::to_image(Var v) const {
  const Node& n = node(v);
  std::vector<float> data(n.value.begin(), n.value.end());
  return ImageTensor(n.h, n.w, n.c, std::move(data));
}

// ---------------------------------------------------------------------------
// Layers

template <class Real>
Var Graph<Real>::conv2d(Var x, Var weight, Var bias, int stride, int dilation) {
  const std::vector<int>& wd = node(weight).dims;
  int k = 1, cin = 0, cout = 0;
  if (wd.size() == 4 && wd[0] == wd[1]) {
    k = wd[0];
    cin = wd[2];
    cout = wd[3];
  } else if (wd.size() == 2) {
    cin = wd[0];
    cout = wd[1];
  } else {
    throw ShapeError("conv2d: weight dims " + dims_string(wd) + " are not {k,k,cin,cout}");
  }
  const int H = node(x).h, W = node(x).w, C = node(x).c;
  if (C != cin) {
    throw ShapeError("conv2d: input has " + std::to_string(C) + " channels, weight expects " +
                     std::to_string(cin));
  }
  if (bias.valid() && node(bias).value.size() != static_cast<std::size_t>(cout)) {
    throw ShapeError("conv2d: bias length does not match output channels");
  }
  const int pad = dilation * (k - 1) / 2;
  const int Ho = (H + 2 * pad - dilation * (k - 1) - 1) / stride + 1;
  const int Wo = (W + 2 * pad - dilation * (k - 1) - 1) / stride + 1;
  const int N = Ho * Wo;
  const int K = k * k * cin;
  const bool pointwise = (k == 1 && stride == 1);

  auto cols = std::make_shared<Mat<Real>>();
  if (!pointwise) {
    cols->setZero(N, K);
    const std::vector<Real>& xv = node(x).value;
    for (int r = 0; r < Ho; ++r) {
      for (int q = 0; q < Wo; ++q) {
        Real* row = cols->data() + static_cast<std::size_t>(r * Wo + q) * K;
        for (int ky = 0; ky < k; ++ky) {
          const int sr = r * stride - pad + ky * dilation;
          if (sr < 0 || sr >= H) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int sq = q * stride - pad + kx * dilation;
            if (sq < 0 || sq >= W) continue;
            std::copy_n(xv.data() + (static_cast<std::size_t>(sr) * W + sq) * C, C,
                        row + (ky * k + kx) * cin);
          }
        }
      }
    }
  }

  std::vector<Real> out(static_cast<std::size_t>(N) * cout);
  {
    MatMap<Real> Y(out.data(), N, cout);
    ConstMatMap<Real> Wm(node(weight).value.data(), K, cout);
    if (pointwise) {
      ConstMatMap<Real> X(node(x).value.data(), N, K);
      Y.noalias() = X * Wm;
    } else {
      Y.noalias() = (*cols) * Wm;
    }
    if (bias.valid()) {
      Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>> b(node(bias).value.data(), cout);
      Y.rowwise() += b;
    }
  }
  Var y = push(Ho, Wo, cout, std::move(out));
  set_back(y, [this, x, weight, bias, y, cols, k, stride, dilation, pad, H, W, C, Ho, Wo, N, K,
               cout, pointwise]() {
    ConstMatMap<Real> dY(g(y).data(), N, cout);
    ConstMatMap<Real> Wm(node(weight).value.data(), K, cout);
    MatMap<Real> dW(g(weight).data(), K, cout);
    if (pointwise) {
      ConstMatMap<Real> X(node(x).value.data(), N, K);
      dW.noalias() += X.transpose() * dY;
      MatMap<Real> dX(g(x).data(), N, K);
      dX.noalias() += dY * Wm.transpose();
    } else {
      dW.noalias() += cols->transpose() * dY;
      Mat<Real> dcols = dY * Wm.transpose();
      std::vector<Real>& gx = g(x);
      for (int r = 0; r < Ho; ++r) {
        for (int q = 0; q < Wo; ++q) {
          const Real* row = dcols.data() + static_cast<std::size_t>(r * Wo + q) * K;
          for (int ky = 0; ky < k; ++ky) {
            const int sr = r * stride - pad + ky * dilation;
            if (sr < 0 || sr >= H) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int sq = q * stride - pad + kx * dilation;
              if (sq < 0 || sq >= W) continue;
              Real* dst = gx.data() + (static_cast<std::size_t>(sr) * W + sq) * C;
              const Real* src = row + (ky * k + kx) * C;
              for (int ch = 0; ch < C; ++ch) dst[ch] += src[ch];
            }
          }
        }
      }
    }
    if (bias.valid()) {
      std::vector<Real>& gb = g(bias);
      for (int n = 0; n < N; ++n)
        for (int o = 0; o < cout; ++o) gb[o] += dY(n, o);
    }
  });
  return y;
}

template <class Real>
Var Graph<Real>::depthwise_conv2d(Var x, Var weight, Var bias, int dilation) {
  const std::vector<int>& wd = node(weight).dims;
  const int H = node(x).h, W = node(x).w, C = node(x).c;
  if (wd.size() != 3 || wd[0] != wd[1] || wd[2] != C) {
    throw ShapeError("depthwise_conv2d: weight dims " + dims_string(wd) + " incompatible with " +
                     std::to_string(C) + " channels");
  }
  const int k = wd[0];
  const int pad = dilation * (k - 1) / 2;
  std::vector<Real> out(static_cast<std::size_t>(H) * W * C, Real(0));
  const std::vector<Real>& xv = node(x).value;
  const std::vector<Real>& wv = node(weight).value;
  for (int r = 0; r < H; ++r) {
    for (int q = 0; q < W; ++q) {
      Real* o = out.data() + (static_cast<std::size_t>(r) * W + q) * C;
      if (bias.valid()) {
        for (int ch = 0; ch < C; ++ch) o[ch] = node(bias).value[ch];
      }
      for (int ky = 0; ky < k; ++ky) {
        const int sr = r - pad + ky * dilation;
        if (sr < 0 || sr >= H) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int sq = q - pad + kx * dilation;
          if (sq < 0 || sq >= W) continue;
          const Real* src = xv.data() + (static_cast<std::size_t>(sr) * W + sq) * C;
          const Real* wk = wv.data() + (ky * k + kx) * C;
          for (int ch = 0; ch < C; ++ch) o[ch] += wk[ch] * src[ch];
        }
      }
    }
  }
  Var y = push(H, W, C, std::move(out));
  set_back(y, [this, x, weight, bias, y, H, W, C, k, pad, dilation]() {
    const std::vector<Real>& dy = g(y);
    const std::vector<Real>& xv = node(x).value;
    const std::vector<Real>& wv = node(weight).value;
    std::vector<Real>& gx = g(x);
    std::vector<Real>& gw = g(weight);
    for (int r = 0; r < H; ++r) {
      for (int q = 0; q < W; ++q) {
        const Real* d = dy.data() + (static_cast<std::size_t>(r) * W + q) * C;
        if (bias.valid()) {
          std::vector<Real>& gb = g(bias);
          for (int ch = 0; ch < C; ++ch) gb[ch] += d[ch];
        }
        for (int ky = 0; ky < k; ++ky) {
          const int sr = r - pad + ky * dilation;
          if (sr < 0 || sr >= H) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int sq = q - pad + kx * dilation;
            if (sq < 0 || sq >= W) continue;
            const std::size_t src = (static_cast<std::size_t>(sr) * W + sq) * C;
            const int wk = (ky * k + kx) * C;
            for (int ch = 0; ch < C; ++ch) {
              gw[wk + ch] += d[ch] * xv[src + ch];
              gx[src + ch] += d[ch] * wv[wk + ch];
            }
          }
        }
      }
    }
  });
  return y;
}

template <class Real>
Var Graph<Real>::attention(Var q, Var k, Var v, int heads) {
  require_same(k, v, "attention (k vs v)");
  const int D = node(q).c;
  if (node(k).c != D) throw ShapeError("attention: query and key widths differ");
  if (heads <= 0 || D % heads != 0) {
    throw ParameterError("attention: width " + std::to_string(D) + " is not divisible by " +
                         std::to_string(heads) + " heads");
  }
  const int Nq = node(q).h * node(q).w;
  const int Nk = node(k).h * node(k).w;
  const int dh = D / heads;
  const Real inv_sqrt = Real(1) / std::sqrt(Real(dh));
  auto probs = std::make_shared<std::vector<Mat<Real>>>(heads);
  std::vector<Real> out(static_cast<std::size_t>(Nq) * D);
  for (int h = 0; h < heads; ++h) {
    ConstStridedMap<Real> Q(node(q).value.data() + h * dh, Nq, dh, Eigen::OuterStride<>(D));
    ConstStridedMap<Real> Kh(node(k).value.data() + h * dh, Nk, dh, Eigen::OuterStride<>(D));
    ConstStridedMap<Real> Vh(node(v).value.data() + h * dh, Nk, dh, Eigen::OuterStride<>(D));
    Mat<Real>& P = (*probs)[h];
    P.noalias() = (Q * Kh.transpose()) * inv_sqrt;
    for (int i = 0; i < Nq; ++i) {
      const Real m = P.row(i).maxCoeff();
      P.row(i) = (P.row(i).array() - m).exp();
      P.row(i) /= P.row(i).sum();
    }
    StridedMap<Real> O(out.data() + h * dh, Nq, dh, Eigen::OuterStride<>(D));
    O.noalias() = P * Vh;
  }
  Var y = push(node(q).h, node(q).w, D, std::move(out));
  set_back(y, [this, q, k, v, y, probs, heads, Nq, Nk, D, dh, inv_sqrt]() {
    for (int h = 0; h < heads; ++h) {
      const Mat<Real>& P = (*probs)[h];
      ConstStridedMap<Real> Q(node(q).value.data() + h * dh, Nq, dh, Eigen::OuterStride<>(D));
      ConstStridedMap<Real> Kh(node(k).value.data() + h * dh, Nk, dh, Eigen::OuterStride<>(D));
      ConstStridedMap<Real> Vh(node(v).value.data() + h * dh, Nk, dh, Eigen::OuterStride<>(D));
      ConstStridedMap<Real> dO(g(y).data() + h * dh, Nq, dh, Eigen::OuterStride<>(D));
      StridedMap<Real> dV(g(v).data() + h * dh, Nk, dh, Eigen::OuterStride<>(D));
      dV.noalias() += P.transpose() * dO;
      Mat<Real> dP = dO * Vh.transpose();
      // Softmax Jacobian: dS = P * (dP - rowsum(dP * P)).
      Eigen::Matrix<Real, Eigen::Dynamic, 1> rs = (dP.array() * P.array()).rowwise().sum();
      Mat<Real> dS = (P.array() * (dP.array().colwise() - rs.array())).matrix() * inv_sqrt;
      StridedMap<Real> dQ(g(q).data() + h * dh, Nq, dh, Eigen::OuterStride<>(D));
      StridedMap<Real> dK(g(k).data() + h * dh, Nk, dh, Eigen::OuterStride<>(D));
      dQ.noalias() += dS * Kh;
      dK.noalias() += dS.transpose() * Q;
    }
  });
  return y;
}

// ---------------------------------------------------------------------------
// Elementwise and structural

template <class Real>
Var Graph<Real>::add(Var a, Var b) {
  return lincomb(a, Real(1), b, Real(1));
}

template <class Real>
Var Graph<Real>::sub(Var a, Var b) {
  return lincomb(a, Real(1), b, Real(-1));
}

template <class Real>
Var Graph<Real>::lincomb(Var a, Real alpha, Var b, Real beta) {
  require_same(a, b, "lincomb");
  const std::vector<Real>& av = node(a).value;
  const std::vector<Real>& bv = node(b).value;
  std::vector<Real> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * av[i] + beta * bv[i];
  Var y = push(node(a).h, node(a).w, node(a).c, std::move(out));
  set_back(y, [this, a, b, y, alpha, beta]() {
    const std::vector<Real>& dy = g(y);
    std::vector<Real>& ga = g(a);
    for (std::size_t i = 0; i < dy.size(); ++i) ga[i] += alpha * dy[i];
    std::vector<Real>& gb = g(b);
    for (std::size_t i = 0; i < dy.size(); ++i) gb[i] += beta * dy[i];
  });
  return y;
}

template <class Real>
Var Graph<Real>::mul(Var a, Var b) {
  require_same(a, b, "mul");
  const std::vector<Real>& av = node(a).value;
  const std::vector<Real>& bv = node(b).value;
  std::vector<Real> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  Var y = push(node(a).h, node(a).w, node(a).c, std::move(out));
  set_back(y, [this, a, b, y]() {
    const std::vector<Real>& dy = g(y);
    const std::vector<Real>& av = node(a).value;
    const std::vector<Real>& bv = node(b).value;
    std::vector<Real>& ga = g(a);
    for (std::size_t i = 0; i < dy.size(); ++i) ga[i] += dy[i] * bv[i];
    std::vector<Real>& gb = g(b);
    for (std::size_t i = 0; i < dy.size(); ++i) gb[i] += dy[i] * av[i];
  });
  return y;
}

template <class Real>
Var Graph<Real>::scale(Var a, Real s) {
  std::vector<Real> out = node(a).value;
  for (Real& v : out) v *= s;
  Var y = push(node(a).h, node(a).w, node(a).c, std::move(out));
  set_back(y, [this, a, y, s]() {
    const std::vector<Real>& dy = g(y);
    std::vector<Real>& ga = g(a);
    for (std::size_t i = 0; i < dy.size(); ++i) ga[i] += s * dy[i];
  });
  return y;
}

template <class Real>
Var Graph<Real>::add_channels(Var x, Var v) {
  const int C = node(x).c;
  if (node(v).value.size() != static_cast<std::size_t>(C)) {
    throw ShapeError("add_channels: vector length " + std::to_string(node(v).value.size()) +
                     " does not match " + std::to_string(C) + " channels");
  }
  std::vector<Real> out = node(x).value;
  const std::vector<Real>& vv = node(v).value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += vv[i % C];
  Var y = push(node(x).h, node(x).w, C, std::move(out));
  set_back(y, [this, x, v, y, C]() {
    const std::vector<Real>& dy = g(y);
    std::vector<Real>& gx = g(x);
    std::vector<Real>& gv = g(v);
    for (std::size_t i = 0; i < dy.size(); ++i) {
      gx[i] += dy[i];
      gv[i % C] += dy[i];
    }
  });
  return y;
}

template <class Real>
Var Graph<Real>::silu(Var x) {
  const std::vector<Real>& xv = node(x).value;
  std::vector<Real> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] / (Real(1) + std::exp(-xv[i]));
  Var y = push(node(x).h, node(x).w, node(x).c, std::move(out));
  set_back(y, [this, x, y]() {
    const std::vector<Real>& dy = g(y);
    const std::vector<Real>& xv = node(x).value;
    std::vector<Real>& gx = g(x);
    for (std::size_t i = 0; i < dy.size(); ++i) {
      const Real s = Real(1) / (Real(1) + std::exp(-xv[i]));
      gx[i] += dy[i] * (s + xv[i] * s * (Real(1) - s));
    }
  });
  return y;
}

template <class Real>
Var Graph<Real>::clamp(Var x, Real lo, Real hi) {
  std::vector<Real> out = node(x).value;
  for (Real& v : out) v = std::clamp(v, lo, hi);
  Var y = push(node(x).h, node(x).w, node(x).c, std::move(out));
  set_back(y, [this, x, y, lo, hi]() {
    const std::vector<Real>& dy = g(y);
    const std::vector<Real>& xv = node(x).value;
    std::vector<Real>& gx = g(x);
    for (std::size_t i = 0; i < dy.size(); ++i) {
      if (xv[i] >= lo && xv[i] <= hi) gx[i] += dy[i];
    }
  });
  return y;
}

template <class Real>
Var Graph<Real>::detach(Var x) {
  return push(node(x).h, node(x).w, node(x).c, node(x).value);
}

template <class Real>
Var Graph<Real>::concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const int H = node(parts[0]).h, W = node(parts[0]).w;
  std::vector<int> offsets;
  int C = 0;
  for (Var p : parts) {
    if (node(p).h != H || node(p).w != W) {
      throw ShapeError("concat: spatial mismatch " + shape3(H, W, node(parts[0]).c) + " vs " +
                       shape3(node(p).h, node(p).w, node(p).c));
    }
    offsets.push_back(C);
    C += node(p).c;
  }
  std::vector<Real> out(static_cast<std::size_t>(H) * W * C);
  for (std::size_t j = 0; j < parts.size(); ++j) {
    const int cj = node(parts[j]).c;
    const std::vector<Real>& pv = node(parts[j]).value;
    for (std::size_t px = 0; px < static_cast<std::size_t>(H) * W; ++px) {
      std::copy_n(pv.data() + px * cj, cj, out.data() + px * C + offsets[j]);
    }
  }
  Var y = push(H, W, C, std::move(out));
  set_back(y, [this, parts, offsets, y, H, W, C]() {
    const std::vector<Real>& dy = g(y);
    for (std::size_t j = 0; j < parts.size(); ++j) {
      const int cj = node(parts[j]).c;
      std::vector<Real>& gp = g(parts[j]);
      for (std::size_t px = 0; px < static_cast<std::size_t>(H) * W; ++px) {
        for (int ch = 0; ch < cj; ++ch) gp[px * cj + ch] += dy[px * C + offsets[j] + ch];
      }
    }
  });
  return y;
}

template <class Real>
Var Graph<Real>::slice_channels(Var x, int begin, int end) {
  const int H = node(x).h, W = node(x).w, C = node(x).c;
  if (begin < 0 || end > C || begin >= end) {
    throw ShapeError("slice_channels: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") invalid for " + std::to_string(C) + " channels");
  }
  const int n = end - begin;
  std::vector<Real> out(static_cast<std::size_t>(H) * W * n);
  const std::vector<Real>& xv = node(x).value;
  for (std::size_t px = 0; px < static_cast<std::size_t>(H) * W; ++px) {
    std::copy_n(xv.data() + px * C + begin, n, out.data() + px * n);
  }
  Var y = push(H, W, n, std::move(out));
  set_back(y, [this, x, y, H, W, C, begin, n]() {
    const std::vector<Real>& dy = g(y);
    std::vector<Real>& gx = g(x);
    for (std::size_t px = 0; px < static_cast<std::size_t>(H) * W; ++px) {
      for (int ch = 0; ch < n; ++ch) gx[px * C + begin + ch] += dy[px * n + ch];
    }
  });
  return y;
}

template <class Real>
Var Graph<Real>::pixel_shuffle(Var x, int r) {
  const int H = node(x).h, W = node(x).w, C = node(x).c;
  if (r < 1 || C % (r * r) != 0) {
    throw ShapeError("pixel_shuffle: " + std::to_string(C) + " channels not divisible by " +
                     std::to_string(r * r));
  }
  const int Co = C / (r * r);
  const int Ho = H * r, Wo = W * r;
  auto out_index = [=](int h, int w, int c) {
    const int co = c / (r * r);
    const int i = (c % (r * r)) / r;
    const int j = c % r;
    return (static_cast<std::size_t>(h * r + i) * Wo + (w * r + j)) * Co + co;
  };
  std::vector<Real> out(static_cast<std::size_t>(Ho) * Wo * Co);
  const std::vector<Real>& xv = node(x).value;
  for (int h = 0; h < H; ++h)
    for (int w = 0; w < W; ++w)
      for (int c = 0; c < C; ++c)
        out[out_index(h, w, c)] = xv[(static_cast<std::size_t>(h) * W + w) * C + c];
  Var y = push(Ho, Wo, Co, std::move(out));
  set_back(y, [this, x, y, H, W, C, out_index]() {
    const std::vector<Real>& dy = g(y);
    std::vector<Real>& gx = g(x);
    for (int h = 0; h < H; ++h)
      for (int w = 0; w < W; ++w)
        for (int c = 0; c < C; ++c)
          gx[(static_cast<std::size_t>(h) * W + w) * C + c] += dy[out_index(h, w, c)];
  });
  return y;
}

template <class Real>
Var Graph<Real>::upsample_nearest2(Var x) {
  const int H = node(x).h, W = node(x).w, C = node(x).c;
  std::vector<Real> out(static_cast<std::size_t>(4) * H * W * C);
  const std::vector<Real>& xv = node(x).value;
  for (int r = 0; r < 2 * H; ++r)
    for (int q = 0; q < 2 * W; ++q)
      std::copy_n(xv.data() + (static_cast<std::size_t>(r / 2) * W + q / 2) * C, C,
                  out.data() + (static_cast<std::size_t>(r) * 2 * W + q) * C);
  Var y = push(2 * H, 2 * W, C, std::move(out));
  set_back(y, [this, x, y, H, W, C]() {
    const std::vector<Real>& dy = g(y);
    std::vector<Real>& gx = g(x);
    for (int r = 0; r < 2 * H; ++r)
      for (int q = 0; q < 2 * W; ++q)
        for (int c = 0; c < C; ++c)
          gx[(static_cast<std::size_t>(r / 2) * W + q / 2) * C + c] +=
              dy[(static_cast<std::size_t>(r) * 2 * W + q) * C + c];
  });
  return y;
}

template <class Real>
Var Graph<Real>::idwt(Var a, Var v, Var h, Var d) {
  require_same(a, v, "idwt (A vs V)");
  require_same(a, h, "idwt (A vs H)");
  require_same(a, d, "idwt (A vs D)");
  const int H = node(a).h, W = node(a).w, C = node(a).c;
  const int Wo = 2 * W;
  std::vector<Real> out(static_cast<std::size_t>(4) * H * W * C);
  auto at = [&](int r, int q, int c) -> Real& {
    return out[(static_cast<std::size_t>(r) * Wo + q) * C + c];
  };
  for (int r = 0; r < H; ++r)
    for (int q = 0; q < W; ++q)
      for (int c = 0; c < C; ++c) {
        const std::size_t i = (static_cast<std::size_t>(r) * W + q) * C + c;
        haar_synthesize(node(a).value[i], node(v).value[i], node(h).value[i], node(d).value[i],
                        at(2 * r, 2 * q, c), at(2 * r, 2 * q + 1, c), at(2 * r + 1, 2 * q, c),
                        at(2 * r + 1, 2 * q + 1, c));
      }
  Var y = push(2 * H, Wo, C, std::move(out));
  set_back(y, [this, a, v, h, d, y, H, W, C, Wo]() {
    const std::vector<Real>& dy = g(y);
    auto at = [&](int r, int q, int c) {
      return dy[(static_cast<std::size_t>(r) * Wo + q) * C + c];
    };
    std::vector<Real>& ga = g(a);
    std::vector<Real>& gv = g(v);
    std::vector<Real>& gh = g(h);
    std::vector<Real>& gd = g(d);
    for (int r = 0; r < H; ++r)
      for (int q = 0; q < W; ++q)
        for (int c = 0; c < C; ++c) {
          Real ll, vv, hh, dd;
          haar_analyze(at(2 * r, 2 * q, c), at(2 * r, 2 * q + 1, c), at(2 * r + 1, 2 * q, c),
                       at(2 * r + 1, 2 * q + 1, c), ll, vv, hh, dd);
          const std::size_t i = (static_cast<std::size_t>(r) * W + q) * C + c;
          ga[i] += ll;
          gv[i] += vv;
          gh[i] += hh;
          gd[i] += dd;
        }
  });
  return y;
}

// ---------------------------------------------------------------------------
// Reductions

template <class Real>
Var Graph<Real>::mse(Var a, Var b) {
  require_same(a, b, "mse");
  const std::vector<Real>& av = node(a).value;
  const std::vector<Real>& bv = node(b).value;
  const Real n = Real(av.size());
  Real acc = 0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += (av[i] - bv[i]) * (av[i] - bv[i]);
  Var y = push(1, 1, 1, {acc / n});
  set_back(y, [this, a, b, y, n]() {
    const Real s = g(y)[0] * Real(2) / n;
    const std::vector<Real>& av = node(a).value;
    const std::vector<Real>& bv = node(b).value;
    std::vector<Real>& ga = g(a);
    std::vector<Real>& gb = g(b);
    for (std::size_t i = 0; i < av.size(); ++i) {
      ga[i] += s * (av[i] - bv[i]);
      gb[i] -= s * (av[i] - bv[i]);
    }
  });
  return y;
}

template <class Real>
Var Graph<Real>::mean_abs_diff(Var a, Var b) {
  require_same(a, b, "mean_abs_diff");
  const std::vector<Real>& av = node(a).value;
  const std::vector<Real>& bv = node(b).value;
  const Real n = Real(av.size());
  Real acc = 0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += std::abs(av[i] - bv[i]);
  Var y = push(1, 1, 1, {acc / n});
  set_back(y, [this, a, b, y, n]() {
    const Real s = g(y)[0] / n;
    const std::vector<Real>& av = node(a).value;
    const std::vector<Real>& bv = node(b).value;
    std::vector<Real>& ga = g(a);
    std::vector<Real>& gb = g(b);
    for (std::size_t i = 0; i < av.size(); ++i) {
      const Real sg = sign_of(av[i] - bv[i]);
      ga[i] += s * sg;
      gb[i] -= s * sg;
    }
  });
  return y;
}

template <class Real>
Var Graph<Real>::tv(Var x) {
  const int H = node(x).h, W = node(x).w, C = node(x).c;
  const std::vector<Real>& xv = node(x).value;
  auto idx = [=](int r, int q, int c) { return (static_cast<std::size_t>(r) * W + q) * C + c; };
  const Real n_rows = Real(std::max(0, H - 1)) * W * C;
  const Real n_cols = Real(H) * std::max(0, W - 1) * C;
  Real acc_r = 0, acc_c = 0;
  for (int r = 0; r < H; ++r)
    for (int q = 0; q < W; ++q)
      for (int c = 0; c < C; ++c) {
        if (r + 1 < H) acc_r += std::abs(xv[idx(r + 1, q, c)] - xv[idx(r, q, c)]);
        if (q + 1 < W) acc_c += std::abs(xv[idx(r, q + 1, c)] - xv[idx(r, q, c)]);
      }
  const Real value = (n_rows > 0 ? acc_r / n_rows : Real(0)) + (n_cols > 0 ? acc_c / n_cols : Real(0));
  Var y = push(1, 1, 1, {value});
  set_back(y, [this, x, y, H, W, C, idx, n_rows, n_cols]() {
    const Real dy = g(y)[0];
    const std::vector<Real>& xv = node(x).value;
    std::vector<Real>& gx = g(x);
    for (int r = 0; r < H; ++r)
      for (int q = 0; q < W; ++q)
        for (int c = 0; c < C; ++c) {
          if (r + 1 < H) {
            const Real s = dy * sign_of(xv[idx(r + 1, q, c)] - xv[idx(r, q, c)]) / n_rows;
            gx[idx(r + 1, q, c)] += s;
            gx[idx(r, q, c)] -= s;
          }
          if (q + 1 < W) {
            const Real s = dy * sign_of(xv[idx(r, q + 1, c)] - xv[idx(r, q, c)]) / n_cols;
            gx[idx(r, q + 1, c)] += s;
            gx[idx(r, q, c)] -= s;
          }
        }
  });
  return y;
}

template <class Real>
Var Graph<Real>::ssim_loss(Var x, Var y_ref) {
  require_same(x, y_ref, "ssim_loss");
  const Node& xn = node(x);
  auto grad = std::make_shared<std::vector<Real>>(xn.value.size());
  const Real s = ssim_core<Real>(xn.value, node(y_ref).value, xn.h, xn.w, xn.c, Real(1),
                                 record_ ? std::span<Real>(*grad) : std::span<Real>());
  Var out = push(1, 1, 1, {Real(1) - s});
  set_back(out, [this, x, out, grad]() {
    const Real dy = g(out)[0];
    std::vector<Real>& gx = g(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] -= dy * (*grad)[i];
  });
  return out;
}

template <class Real>
Var Graph<Real>::dot(Var x, std::span<const Real> weights) {
  const std::vector<Real>& xv = node(x).value;
  if (weights.size() != xv.size()) throw ShapeError("dot: weight length mismatch");
  Real acc = 0;
  for (std::size_t i = 0; i < xv.size(); ++i) acc += xv[i] * weights[i];
  Var y = push(1, 1, 1, {acc});
  std::vector<Real> w(weights.begin(), weights.end());
  set_back(y, [this, x, y, w = std::move(w)]() {
    const Real dy = g(y)[0];
    std::vector<Real>& gx = g(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += dy * w[i];
  });
  return y;
}

template <class Real>
Var Graph<Real>::sum(const std::vector<Var>& scalars) {
  Real acc = 0;
  for (Var s : scalars) {
    if (node(s).value.size() != 1) throw ShapeError("sum: expects scalar nodes");
    acc += node(s).value[0];
  }
  Var y = push(1, 1, 1, {acc});
  set_back(y, [this, scalars, y]() {
    for (Var s : scalars) g(s)[0] += g(y)[0];
  });
  return y;
}

template <class Real>
void Graph<Real>::backward(Var loss) {
  if (!record_) throw Error("backward: graph was built without recording");
  if (node(loss).value.size() != 1) throw ShapeError("backward: loss must be a scalar");
  for (Node& n : nodes_) n.grad.assign(n.value.size(), Real(0));
  node(loss).grad[0] = Real(1);
  for (int i = loss.id; i >= 0; --i) {
    if (nodes_[i].back) nodes_[i].back();
  }
  for (Node& n : nodes_) {
    if (!n.param) continue;
    for (std::size_t i = 0; i < n.grad.size(); ++i) n.param->grad[i] += n.grad[i];
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace wdur
