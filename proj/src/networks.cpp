#include "wdur/networks.hpp"

#include <cmath>

#include "wdur/data.hpp"
#include "wdur/errors.hpp"
#include "wdur/io.hpp"
#include "wdur/wavelet.hpp"

namespace wdur {

namespace {

// ---------------------------------------------------------------------------
// Registration helpers

template <class Real>
class Init {
 public:
  Init(ParamStore<Real>& store, Rng& rng) : store_(store), rng_(rng) {}

  void normal(const std::string& name, std::vector<int> dims, int fan_in, double gain = 1.0) {
    auto& p = store_.add(name, std::move(dims));
    std::normal_distribution<double> dist(0.0, gain / std::sqrt(static_cast<double>(fan_in)));
    for (Real& v : p.value) v = static_cast<Real>(dist(rng_));
  }
  void zeros(const std::string& name, std::vector<int> dims) { store_.add(name, std::move(dims)); }

  void conv(const std::string& name, int k, int cin, int cout, double gain = 1.0) {
    normal(name + ".w", {k, k, cin, cout}, k * k * cin, gain);
    zeros(name + ".b", {cout});
  }
  void zero_conv(const std::string& name, int k, int cin, int cout) {
    zeros(name + ".w", {k, k, cin, cout});
    zeros(name + ".b", {cout});
  }
  void dense(const std::string& name, int cin, int cout, double gain = 1.0) {
    normal(name + ".w", {cin, cout}, cin, gain);
    zeros(name + ".b", {cout});
  }
  // Depthwise 3x3 followed by pointwise 1x1.
  void dsconv(const std::string& name, int cin, int cout) {
    normal(name + ".dw.w", {3, 3, cin}, 9);
    zeros(name + ".dw.b", {cin});
    dense(name + ".pw", cin, cout);
  }
  void resblock(const std::string& name, int c, int emb) {
    conv(name + ".c1", 3, c, c);
    dense(name + ".t", emb, c);
    conv(name + ".c2", 3, c, c, 0.5);
  }
  void dilated_res(const std::string& name, int c) {
    conv(name + ".c1", 3, c, c);
    conv(name + ".c2", 3, c, c);
    conv(name + ".c3", 3, c, c);
    conv(name + ".c4", 3, c, c, 0.5);
  }

 private:
  ParamStore<Real>& store_;
  Rng& rng_;
};

// ---------------------------------------------------------------------------
// Forward helpers

template <class Real>
class Layers {
 public:
  Layers(Graph<Real>& g, const ParamStore<Real>& p) : g(g), p_(p) {}

  Var param(const std::string& name) { return g.parameter(p_, name); }

  Var conv(const std::string& name, Var x, int stride = 1, int dilation = 1) {
    return g.conv2d(x, param(name + ".w"), param(name + ".b"), stride, dilation);
  }
  Var dense(const std::string& name, Var x) {
    return g.conv2d(x, param(name + ".w"), param(name + ".b"));
  }
  Var dsconv(const std::string& name, Var x) {
    Var h = g.depthwise_conv2d(x, param(name + ".dw.w"), param(name + ".dw.b"));
    return dense(name + ".pw", h);
  }
  Var resblock(const std::string& name, Var x, Var emb) {
    Var h = conv(name + ".c1", g.silu(x));
    h = g.add_channels(h, dense(name + ".t", g.silu(emb)));
    h = conv(name + ".c2", g.silu(h));
    return g.add(x, h);
  }
  Var dilated_res(const std::string& name, Var x) {
    Var h = conv(name + ".c1", g.silu(x), 1, 1);
    h = conv(name + ".c2", g.silu(h), 1, 2);
    h = conv(name + ".c3", g.silu(h), 1, 4);
    h = conv(name + ".c4", g.silu(h), 1, 1);
    return g.add(x, h);
  }

  Graph<Real>& g;

 private:
  const ParamStore<Real>& p_;
};

int embed_width(const NetConfig& cfg) { return 2 * cfg.base_width; }

ImageTensor concat_channels(const std::vector<const ImageTensor*>& parts) {
  int c = 0;
  for (const ImageTensor* t : parts) c += t->channels();
  const int h = parts[0]->height(), w = parts[0]->width();
  ImageTensor out(h, w, c);
  for (int r = 0; r < h; ++r)
    for (int q = 0; q < w; ++q) {
      int off = 0;
      for (const ImageTensor* t : parts) {
        for (int ch = 0; ch < t->channels(); ++ch) out.at(r, q, off + ch) = t->at(r, q, ch);
        off += t->channels();
      }
    }
  return out;
}

}  // namespace

void validate(const NetConfig& cfg) {
  if (cfg.channels < 1 || cfg.base_width < 1 || cfg.temb_dim < 2 || cfg.temb_dim % 2) {
    throw ParameterError("network config: channels, base_width must be positive and temb_dim even");
  }
  if (cfg.heads < 1 || cfg.attn_dim % cfg.heads != 0) {
    throw ParameterError("network config: attn_dim " + std::to_string(cfg.attn_dim) +
                         " is not divisible by " + std::to_string(cfg.heads) + " heads");
  }
}

std::vector<double> timestep_embedding(int t, int dim) {
  const int half = dim / 2;
  std::vector<double> out(dim);
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    out[i] = std::sin(t * freq);
    out[half + i] = std::cos(t * freq);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Denoiser

template <class Real>
void init_denoiser(ParamStore<Real>& store, const NetConfig& cfg, Rng& rng) {
  validate(cfg);
  Init<Real> in(store, rng);
  const int w = cfg.base_width, C = cfg.channels, E = embed_width(cfg);
  in.dense("den.temb1", cfg.temb_dim, E);
  in.dense("den.temb2", E, E);
  in.conv("den.in", 3, 2 * C, w);
  in.resblock("den.res0", w, E);
  in.conv("den.down1", 3, w, 2 * w);
  in.resblock("den.res1", 2 * w, E);
  in.conv("den.down2", 3, 2 * w, 2 * w);
  in.resblock("den.mid", 2 * w, E);
  in.conv("den.up1", 3, 4 * w, 2 * w);
  in.resblock("den.ures1", 2 * w, E);
  in.conv("den.up0", 3, 3 * w, w);
  in.resblock("den.ures0", w, E);
  in.zero_conv("den.out", 3, w, C);
}

template <class Real>
Var denoiser_forward(Graph<Real>& g, const ParamStore<Real>& p, const NetConfig& cfg, Var x_t,
                     int t, Var cond_lf) {
  if (g.height(x_t) != g.height(cond_lf) || g.width(x_t) != g.width(cond_lf) ||
      g.channels(x_t) != g.channels(cond_lf)) {
    throw ShapeError("denoiser: x_t and condition shapes differ");
  }
  if (g.channels(x_t) != cfg.channels) throw ShapeError("denoiser: channel count mismatch");
  if (g.height(x_t) % 4 || g.width(x_t) % 4) {
    throw ShapeError("denoiser: spatial size " + std::to_string(g.height(x_t)) + "x" +
                     std::to_string(g.width(x_t)) + " must be divisible by 4");
  }
  Layers<Real> L(g, p);
  const std::vector<double> sin_emb = timestep_embedding(t, cfg.temb_dim);
  Var emb = g.constant(1, 1, cfg.temb_dim, std::vector<Real>(sin_emb.begin(), sin_emb.end()));
  emb = L.dense("den.temb2", g.silu(L.dense("den.temb1", emb)));

  Var h0 = L.conv("den.in", g.concat({x_t, cond_lf}));
  h0 = L.resblock("den.res0", h0, emb);
  Var h1 = L.resblock("den.res1", L.conv("den.down1", h0, 2), emb);
  Var h2 = L.resblock("den.mid", L.conv("den.down2", h1, 2), emb);
  Var u1 = L.conv("den.up1", g.concat({g.upsample_nearest2(h2), h1}));
  u1 = L.resblock("den.ures1", u1, emb);
  Var u0 = L.conv("den.up0", g.concat({g.upsample_nearest2(u1), h0}));
  u0 = L.resblock("den.ures0", u0, emb);
  return L.conv("den.out", g.silu(u0));
}

// ---------------------------------------------------------------------------
// Cross-attention

template <class Real>
void init_cross_attention(ParamStore<Real>& store, const std::string& prefix, int q_channels,
                          int kv_channels, int attn_dim, Rng& rng) {
  Init<Real> in(store, rng);
  in.normal(prefix + ".wq", {q_channels, attn_dim}, q_channels);
  in.normal(prefix + ".wk", {kv_channels, attn_dim}, kv_channels);
  in.normal(prefix + ".wv", {kv_channels, attn_dim}, kv_channels);
  in.normal(prefix + ".wo", {attn_dim, q_channels}, attn_dim);
  in.zeros(prefix + ".bo", {q_channels});
}

template <class Real>
Var cross_attention(Graph<Real>& g, const ParamStore<Real>& p, const std::string& prefix,
                    Var q_src, Var kv_src, int heads) {
  const int dm = p.get(prefix + ".wq").dims.at(1);
  if (heads < 1 || dm % heads != 0) {
    throw ParameterError("cross_attention: width " + std::to_string(dm) +
                         " is not divisible by " + std::to_string(heads) + " heads");
  }
  Var q = g.conv2d(q_src, g.parameter(p, prefix + ".wq"), Var{});
  Var k = g.conv2d(kv_src, g.parameter(p, prefix + ".wk"), Var{});
  Var v = g.conv2d(kv_src, g.parameter(p, prefix + ".wv"), Var{});
  Var o = g.attention(q, k, v, heads);
  return g.conv2d(o, g.parameter(p, prefix + ".wo"), g.parameter(p, prefix + ".bo"));
}

// ---------------------------------------------------------------------------
// Cross-scale encoder

template <class Real>
void init_csp_encoder(ParamStore<Real>& store, const NetConfig& cfg, Rng& rng) {
  validate(cfg);
  Init<Real> in(store, rng);
  const int w = cfg.base_width, C = cfg.channels;
  in.dsconv("csp.lr1", C, w);
  in.dsconv("csp.lr2", w, w);
  in.dsconv("csp.ref1", 4 * C, w);
  in.dsconv("csp.ref2", w, w);
  init_cross_attention(store, "csp.attn", w, w, cfg.attn_dim, rng);
  in.dilated_res("csp.res", w);
  in.zero_conv("csp.head", 3, w, 4 * C);
}

template <class Real>
ConditionVars<Real> csp_encode(Graph<Real>& g, const ParamStore<Real>& p, const NetConfig& cfg,
                               const ImageTensor& lr, const ImageTensor& ref) {
  if (ref.height() < lr.height() || ref.width() < lr.width()) {
    throw ParameterError("csp_encode: reference " + ref.shape_string() +
                         " is smaller than the LR input " + lr.shape_string());
  }
  if (lr.channels() != cfg.channels || ref.channels() != cfg.channels) {
    throw ShapeError("csp_encode: channel count mismatch");
  }
  const WaveletBands rb =
      dwt2(bicubic_resize(ref, 2 * lr.height(), 2 * lr.width(), /*clamp_pixels=*/true));
  Layers<Real> L(g, p);
  Var x = g.constant(lr);
  Var ref_bands = g.constant(concat_channels({&rb.A, &rb.V, &rb.Hb, &rb.D}));

  Var f_lr = L.dsconv("csp.lr2", g.silu(L.dsconv("csp.lr1", x)));
  Var f_ref = L.dsconv("csp.ref2", g.silu(L.dsconv("csp.ref1", ref_bands)));
  Var f = g.add(f_lr, cross_attention(g, p, "csp.attn", f_lr, f_ref, cfg.heads));
  f = L.dilated_res("csp.res", f);
  Var head = L.conv("csp.head", g.silu(f));
  // The head predicts residuals on top of the aligned reference bands.
  Var base = ref_bands;
  Var out = g.add(base, head);
  const int C = cfg.channels;
  return {g.slice_channels(out, 0, C), g.slice_channels(out, C, 2 * C),
          g.slice_channels(out, 2 * C, 3 * C), g.slice_channels(out, 3 * C, 4 * C)};
}

// ---------------------------------------------------------------------------
// High-frequency restoration

template <class Real>
void init_cshr(ParamStore<Real>& store, const NetConfig& cfg, Rng& rng) {
  validate(cfg);
  Init<Real> in(store, rng);
  const int w = cfg.base_width, C = cfg.channels;
  for (const char* band : {"v", "h", "d"}) {
    in.dsconv(std::string("cshr.f") + band + "1", C, w);
    in.dsconv(std::string("cshr.f") + band + "2", w, w);
  }
  init_cross_attention(store, "cshr.attn_v", w, w, cfg.attn_dim, rng);
  init_cross_attention(store, "cshr.attn_h", w, w, cfg.attn_dim, rng);
  in.dense("cshr.merge", 3 * w, w);
  in.dilated_res("cshr.res", w);
  in.conv("cshr.up", 3, w, 4 * w);
  in.zero_conv("cshr.head", 3, w + 3 * C, 3 * C);
}

template <class Real>
DetailVars<Real> cshr_restore(Graph<Real>& g, const ParamStore<Real>& p, const NetConfig& cfg,
                              const DetailBands& lr_details, Var cond_v, Var cond_h, Var cond_d) {
  require_same_shape(lr_details.V, lr_details.Hb, "cshr_restore (V vs H)");
  require_same_shape(lr_details.V, lr_details.D, "cshr_restore (V vs D)");
  const int h = lr_details.V.height(), w = lr_details.V.width();
  for (Var c : {cond_v, cond_h, cond_d}) {
    if (g.height(c) != 2 * h || g.width(c) != 2 * w || g.channels(c) != cfg.channels) {
      throw ShapeError("cshr_restore: condition band must be " + std::to_string(2 * h) + "x" +
                       std::to_string(2 * w) + "x" + std::to_string(cfg.channels));
    }
  }
  if (lr_details.V.channels() != cfg.channels) throw ShapeError("cshr_restore: channel mismatch");
  Layers<Real> L(g, p);
  auto features = [&](const std::string& band, const ImageTensor& t) {
    Var x = g.constant(t);
    return L.dsconv("cshr.f" + band + "2", g.silu(L.dsconv("cshr.f" + band + "1", x)));
  };
  Var fv = features("v", lr_details.V);
  Var fh = features("h", lr_details.Hb);
  Var fd = features("d", lr_details.D);
  // V and H information is routed into the diagonal stream.
  fd = g.add(fd, cross_attention(g, p, "cshr.attn_v", fd, fv, cfg.heads));
  fd = g.add(fd, cross_attention(g, p, "cshr.attn_h", fd, fh, cfg.heads));
  Var f = L.dense("cshr.merge", g.concat({fv, fh, fd}));
  f = L.dilated_res("cshr.res", f);
  Var up = g.pixel_shuffle(L.conv("cshr.up", g.silu(f), 1, 2), 2);
  Var head = L.conv("cshr.head", g.concat({g.silu(up), cond_v, cond_h, cond_d}));
  const int C = cfg.channels;
  return {g.add(cond_v, g.slice_channels(head, 0, C)), g.add(cond_h, g.slice_channels(head, C, 2 * C)),
          g.add(cond_d, g.slice_channels(head, 2 * C, 3 * C))};
}

DetailBands upscale_hf(const DetailBands& lr_details, double sigma, Rng* rng) {
  require_same_shape(lr_details.V, lr_details.Hb, "upscale_hf (V vs H)");
  require_same_shape(lr_details.V, lr_details.D, "upscale_hf (V vs D)");
  if (sigma < 0.0) throw ParameterError("upscale_hf: sigma must be >= 0");
  if (sigma > 0.0 && rng == nullptr) throw ParameterError("upscale_hf: sigma > 0 needs an rng");
  const int h = 2 * lr_details.V.height(), w = 2 * lr_details.V.width();
  DetailBands out{bicubic_resize(lr_details.V, h, w, false), bicubic_resize(lr_details.Hb, h, w, false),
                  bicubic_resize(lr_details.D, h, w, false)};
  if (sigma > 0.0) {
    std::normal_distribution<float> normal(0.0f, static_cast<float>(sigma));
    for (ImageTensor* band : {&out.V, &out.Hb, &out.D})
      for (float& v : band->values()) v += normal(*rng);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Whole model

template <class Real>
ParamStore<Real> make_model_params(const NetConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  ParamStore<Real> store;
  Rng rng(seed);
  init_denoiser(store, cfg, rng);
  init_csp_encoder(store, cfg, rng);
  init_cshr(store, cfg, rng);
  return store;
}

Models make_models(const NetConfig& cfg, std::uint64_t seed) {
  return Models{cfg, make_model_params<float>(cfg, seed)};
}

ImageTensor predict_noise(const Models& m, const ImageTensor& x_t, int t, const ImageTensor& cond_lf) {
  Graph<float> g(false);
  Var out = denoiser_forward(g, m.params, m.cfg, g.constant(x_t), t, g.constant(cond_lf));
  return g.to_image(out);
}

Denoiser make_denoiser(const Models& m) {
  return [&m](const ImageTensor& x_t, int t, const Condition& cond) {
    return predict_noise(m, x_t, t, cond.lf);
  };
}

Condition csp_condition(const Models& m, const ImageTensor& lr, const ImageTensor& ref) {
  Graph<float> g(false);
  const ConditionVars<float> c = csp_encode(g, m.params, m.cfg, lr, ref);
  return Condition{g.to_image(c.lf), DetailBands{g.to_image(c.v), g.to_image(c.h), g.to_image(c.d)}};
}

DetailBands cshr_predict(const Models& m, const DetailBands& lr_details, const DetailBands& cond_hf) {
  Graph<float> g(false);
  const DetailVars<float> d = cshr_restore(g, m.params, m.cfg, lr_details, g.constant(cond_hf.V),
                                           g.constant(cond_hf.Hb), g.constant(cond_hf.D));
  return DetailBands{g.to_image(d.v), g.to_image(d.h), g.to_image(d.d)};
}

void save_models(const std::string& path, const Models& m) {
  ParamStore<float> out = m.params.cast<float>();
  auto& meta = out.add("meta.arch", {5});
  meta.value = {static_cast<float>(m.cfg.channels), static_cast<float>(m.cfg.base_width),
                static_cast<float>(m.cfg.heads), static_cast<float>(m.cfg.attn_dim),
                static_cast<float>(m.cfg.temb_dim)};
  save_checkpoint(path, out);
}

Models load_models(const std::string& path) {
  ParamStore<float> raw = load_checkpoint(path);
  if (!raw.contains("meta.arch") || raw.get("meta.arch").size() != 5) {
    throw FormatError(path + ": checkpoint has no 'meta.arch' architecture record");
  }
  const auto& a = raw.get("meta.arch").value;
  NetConfig cfg;
  cfg.channels = static_cast<int>(a[0]);
  cfg.base_width = static_cast<int>(a[1]);
  cfg.heads = static_cast<int>(a[2]);
  cfg.attn_dim = static_cast<int>(a[3]);
  cfg.temb_dim = static_cast<int>(a[4]);
  Models m = make_models(cfg, 0);
  m.params.add("meta.arch", {5});
  load_checkpoint_into(path, m.params);
  m.params.entries().erase("meta.arch");
  return m;
}

#define WDUR_INSTANTIATE(Real)                                                                   \
  template void init_denoiser<Real>(ParamStore<Real>&, const NetConfig&, Rng&);                  \
  template void init_cross_attention<Real>(ParamStore<Real>&, const std::string&, int, int, int, \
                                           Rng&);                                                \
  template void init_csp_encoder<Real>(ParamStore<Real>&, const NetConfig&, Rng&);               \
  template void init_cshr<Real>(ParamStore<Real>&, const NetConfig&, Rng&);                      \
  template ParamStore<Real> make_model_params<Real>(const NetConfig&, std::uint64_t);            \
  template Var denoiser_forward<Real>(Graph<Real>&, const ParamStore<Real>&, const NetConfig&,   \
                                      Var, int, Var);                                            \
  template Var cross_attention<Real>(Graph<Real>&, const ParamStore<Real>&, const std::string&,  \
                                     Var, Var, int);                                             \
  template ConditionVars<Real> csp_encode<Real>(Graph<Real>&, const ParamStore<Real>&,           \
                                                const NetConfig&, const ImageTensor&,            \
                                                const ImageTensor&);                             \
  template DetailVars<Real> cshr_restore<Real>(Graph<Real>&, const ParamStore<Real>&,            \
                                               const NetConfig&, const DetailBands&, Var, Var,   \
                                               Var);

WDUR_INSTANTIATE(float)
WDUR_INSTANTIATE(double)

#undef WDUR_INSTANTIATE

}  // namespace wdur
