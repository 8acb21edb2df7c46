#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wdur/params.hpp"
#include "wdur/tensor.hpp"

namespace wdur {

/// Handle to a node on a Graph tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode automatic differentiation over an explicitly recorded tape.
///
/// Feature maps are 3-D (height, width, channels) in the same row-major layout as
/// ImageTensor; token matrices use (tokens, 1, features). Scalars are 1x1x1.
/// Three-dimensional parameters take their dims as (height, width, channels); all others
/// are flat 1 x 1 x N nodes. Parameter nodes copy their value on creation and add their
/// gradient back into the owning ParamStore when backward() runs. Parameters that do not
/// reach the loss keep a zero gradient.
template <class Real>
class Graph {
 public:
  /// With record = false no backward closures are kept (inference only).
  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaves.
  Var constant(int h, int w, int c, std::vector<Real> values);
  Var constant(const ImageTensor& t);
  Var parameter(const ParamStore<Real>& store, const std::string& name);

  // Layers.
  /// "Same" zero padding. Weight dims are {k, k, cin, cout} (or {cin, cout} for 1x1);
  /// `bias` may be an invalid Var.
  Var conv2d(Var x, Var weight, Var bias, int stride = 1, int dilation = 1);
  /// Per-channel k x k convolution; weight dims {k, k, c}, bias {c}.
  Var depthwise_conv2d(Var x, Var weight, Var bias, int dilation = 1);
  /// Scaled dot-product attention with `heads` heads. q is (Nq, D), k and v are (Nk, D);
  /// D must be divisible by heads. Output has q's spatial shape and D channels.
  Var attention(Var q, Var k, Var v, int heads);

  // Elementwise and structural.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, Real s);
  /// alpha * a + beta * b.
  Var lincomb(Var a, Real alpha, Var b, Real beta);
  /// Adds a length-C vector to every pixel.
  Var add_channels(Var x, Var v);
  Var silu(Var x);
  Var clamp(Var x, Real lo, Real hi);
  /// Copies the value; no gradient flows back through the result.
  Var detach(Var x);
  Var concat(const std::vector<Var>& parts);
  Var slice_channels(Var x, int begin, int end);
  /// (H, W, C*r*r) -> (H*r, W*r, C).
  Var pixel_shuffle(Var x, int r);
  Var upsample_nearest2(Var x);
  /// Synthesis Haar transform of four same-shaped bands.
  Var idwt(Var a, Var v, Var h, Var d);

  // Scalar reductions.
  Var mse(Var a, Var b);
  Var mean_abs_diff(Var a, Var b);
  /// mean |row difference| + mean |column difference|.
  Var tv(Var x);
  /// 1 - SSIM(x, y), using the shared SSIM core; gradient flows into x only.
  Var ssim_loss(Var x, Var y);
  Var dot(Var x, std::span<const Real> weights);
  Var sum(const std::vector<Var>& scalars);

  void backward(Var loss);

  const std::vector<Real>& value(Var v) const { return nodes_[v.id].value; }
  const std::vector<Real>& grad(Var v) const { return nodes_[v.id].grad; }
  int height(Var v) const { return nodes_[v.id].h; }
  int width(Var v) const { return nodes_[v.id].w; }
  int channels(Var v) const { return nodes_[v.id].c; }
  const std::vector<int>& dims(Var v) const { return nodes_[v.id].dims; }
  Real scalar(Var v) const { return nodes_[v.id].value.at(0); }
  ImageTensor to_image(Var v) const;
  std::size_t node_count() const { return nodes_.size(); }
  bool recording() const { return record_; }

 private:
  struct Node {
    int h = 1, w = 1, c = 1;
    std::vector<int> dims;
    std::vector<Real> value;
    std::vector<Real> grad;
    std::function<void()> back;
    const Param<Real>* param = nullptr;
  };

  Var push(int h, int w, int c, std::vector<Real> value);
  Node& node(Var v) { return nodes_[v.id]; }
  const Node& node(Var v) const { return nodes_[v.id]; }
  std::vector<Real>& g(Var v) { return nodes_[v.id].grad; }
  void set_back(Var out, std::function<void()> fn);
  void require_same(Var a, Var b, const char* what) const;

  bool record_;
  std::vector<Node> nodes_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace wdur
