#pragma once

#include <cstdint>
#include <string>

#include "wdur/autodiff.hpp"
#include "wdur/condition.hpp"
#include "wdur/params.hpp"
#include "wdur/random.hpp"
#include "wdur/sampler.hpp"

namespace wdur {

/// Architecture knobs shared by the denoiser, the cross-scale encoder and the
/// high-frequency restoration module.
struct NetConfig {
  int channels = 3;
  int base_width = 32;
  /// Attention heads; attn_dim must be divisible by it.
  int heads = 12;
  int attn_dim = 48;
  /// Length of the sinusoidal step embedding.
  int temb_dim = 32;

  bool operator==(const NetConfig&) const = default;
};

void validate(const NetConfig& cfg);

/// Sinusoidal features [sin(t w_0..), cos(t w_0..)] with w_i = 10000^(-i / (dim/2)).
std::vector<double> timestep_embedding(int t, int dim);

// Parameter registration. Output heads start at zero; everything else uses
// N(0, 1/fan_in) draws from `rng`.
template <class Real>
void init_denoiser(ParamStore<Real>& store, const NetConfig& cfg, Rng& rng);
template <class Real>
void init_cross_attention(ParamStore<Real>& store, const std::string& prefix, int q_channels,
                          int kv_channels, int attn_dim, Rng& rng);
template <class Real>
void init_csp_encoder(ParamStore<Real>& store, const NetConfig& cfg, Rng& rng);
template <class Real>
void init_cshr(ParamStore<Real>& store, const NetConfig& cfg, Rng& rng);

/// Denoiser + encoder + restoration parameters under the "den.", "csp." and "cshr." prefixes.
template <class Real>
ParamStore<Real> make_model_params(const NetConfig& cfg, std::uint64_t seed);

/// U-shaped noise predictor: input is concat(x_t, cond_lf); two stride-2 levels down,
/// two nearest-upsample levels up with skip connections, step embedding added in every
/// residual block. Output has x_t's shape; spatial size must be divisible by 4.
template <class Real>
Var denoiser_forward(Graph<Real>& g, const ParamStore<Real>& p, const NetConfig& cfg, Var x_t,
                     int t, Var cond_lf);

/// Multi-head cross-attention: queries from q_src tokens, keys/values from kv_src tokens,
/// projected back to q_src's channel count. Parameters: <prefix>.{wq,wk,wv,wo,bo}.
template <class Real>
Var cross_attention(Graph<Real>& g, const ParamStore<Real>& p, const std::string& prefix,
                    Var q_src, Var kv_src, int heads);

template <class Real>
struct ConditionVars {
  Var lf, v, h, d;
};

/// Cross-scale encoder. The reference is bicubic-aligned to twice the LR grid and split
/// into Haar bands; LR features query reference features through cross-attention, a
/// progressive-dilation residual block (dilations 1, 2, 4, 1) follows, and a zero-initialized
/// head adds residuals onto the aligned reference bands. Every output has the LR shape.
/// Throws ParameterError when the reference is smaller than the LR image.
template <class Real>
ConditionVars<Real> csp_encode(Graph<Real>& g, const ParamStore<Real>& p, const NetConfig& cfg,
                               const ImageTensor& lr, const ImageTensor& ref);

template <class Real>
struct DetailVars {
  Var v, h, d;
};

/// Cross-scale high-frequency restoration. Input detail bands are h x w, condition bands and
/// outputs are 2h x 2w. V and H features are mixed into the D stream by two cross-attention
/// layers, then a progressive-dilation block, a dilated convolution and a x2 pixel shuffle
/// feed a zero-initialized head whose output is added onto the condition bands.
template <class Real>
DetailVars<Real> cshr_restore(Graph<Real>& g, const ParamStore<Real>& p, const NetConfig& cfg,
                              const DetailBands& lr_details, Var cond_v, Var cond_h, Var cond_d);

/// Non-learned detail upscaler: bicubic x2 on each band plus optional N(0, sigma^2) noise.
DetailBands upscale_hf(const DetailBands& lr_details, double sigma = 0.0, Rng* rng = nullptr);

/// Trained parameters together with their architecture.
struct Models {
  NetConfig cfg;
  ParamStore<float> params;
};

Models make_models(const NetConfig& cfg, std::uint64_t seed);

/// Inference wrappers over frozen parameters; safe to call concurrently.
ImageTensor predict_noise(const Models& m, const ImageTensor& x_t, int t, const ImageTensor& cond_lf);
Denoiser make_denoiser(const Models& m);
Condition csp_condition(const Models& m, const ImageTensor& lr, const ImageTensor& ref);
DetailBands cshr_predict(const Models& m, const DetailBands& lr_details, const DetailBands& cond_hf);

/// Checkpoint with an extra "meta.arch" tensor recording the architecture.
void save_models(const std::string& path, const Models& m);
Models load_models(const std::string& path);

}  // namespace wdur
