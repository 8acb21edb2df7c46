#include "wdur/cascade.hpp"

#include <sstream>

#include "wdur/data.hpp"
#include "wdur/errors.hpp"
#include "wdur/random.hpp"
#include "wdur/wavelet.hpp"

namespace wdur {

CascadeMode parse_mode(const std::string& s) {
  if (s == "baseline") return CascadeMode::baseline;
  if (s == "csp") return CascadeMode::csp;
  throw UsageError("unknown mode '" + s + "' (expected baseline or csp)");
}

std::string to_string(CascadeMode m) { return m == CascadeMode::baseline ? "baseline" : "csp"; }

CascadeConfig plan_cascade(int r, int R, int k) {
  if (r < 1 || R < 1) throw PlanError("plan_cascade: resolutions must be positive");
  if (k < 2) throw PlanError("plan_cascade: rate k must be >= 2");
  CascadeConfig cfg;
  cfg.r = r;
  cfg.R = R;
  cfg.k = k;
  if (R % r == 0) {
    int K = R / r, d = 0;
    while (K % k == 0) {
      K /= k;
      ++d;
    }
    if (K == 1) {
      cfg.K = R / r;
      cfg.d = d;
      return cfg;
    }
  }
  std::ostringstream msg;
  msg << "plan_cascade: target " << R << " is not " << r << " times a power of " << k
      << "; valid targets:";
  long long t = r;
  for (int i = 0; i < 8 && t <= (1LL << 30); ++i, t *= k) msg << ' ' << t;
  msg << " ...";
  throw PlanError(msg.str());
}

ImageTensor bicubic_x2(const ImageTensor& img) {
  return bicubic_resize(img, 2 * img.height(), 2 * img.width(), true);
}

ImageTensor baseline_condition(const ImageTensor& lr, const SrFunction& sr) {
  ImageTensor up = sr(lr);
  if (up.height() != 2 * lr.height() || up.width() != 2 * lr.width() ||
      up.channels() != lr.channels()) {
    throw ShapeError("baseline_condition: SR output " + up.shape_string() + " is not 2x " +
                     lr.shape_string());
  }
  return dwt2(up).A;
}

ImageTensor wavediffur_step(const ImageTensor& lr, const Condition& cond, const Denoiser& denoiser,
                            const DetailRestorer& restore, const NoiseSchedule& sched,
                            const ProjectionParams& pp, std::uint64_t seed, int level) {
  require_same_shape(cond.lf, lr, "wavediffur_step (condition vs input)");
  const WaveletBands bands = dwt2(lr);
  const ImageTensor a_sr =
      sample_conditional(lr.height(), lr.width(), lr.channels(), cond, denoiser, sched, pp, seed);
  const DetailBands hf = restore(details_of(bands), cond);
  ImageTensor out = idwt2(WaveletBands{a_sr, hf.V, hf.Hb, hf.D});
  if (!all_finite(out)) {
    throw NumericError("cascade diverged at level " + std::to_string(level));
  }
  return clamp(out, 0.0f, 1.0f);
}

namespace {

void check_plan(const ImageTensor& lr, const CascadeConfig& cfg) {
  if (cfg.k != 2) throw PlanError("cascade: only k = 2 is supported");
  if (lr.height() != cfg.r) {
    throw PlanError("cascade: input " + lr.shape_string() + " does not match planned r=" +
                    std::to_string(cfg.r));
  }
  if (cfg.d < 0) throw PlanError("cascade: negative step count");
}

}  // namespace

ImageTensor run_wavediffur(const ImageTensor& lr, const CascadeConfig& cfg, const Models& models,
                           const NoiseSchedule& sched, const ProjectionParams& pp,
                           const LevelCallback& on_level, const SrFunction& sr) {
  check_plan(lr, cfg);
  if (cfg.d == 0) return lr;
  const Denoiser den = make_denoiser(models);
  const ImageTensor tau = baseline_condition(lr, sr);
  Rng hf_rng(derive_seed(cfg.seed, 0xB17Fu));
  const DetailRestorer restore = [&](const DetailBands& lr_details, const Condition&) {
    return upscale_hf(lr_details, cfg.hf_sigma, cfg.hf_sigma > 0.0 ? &hf_rng : nullptr);
  };
  ImageTensor cur = lr;
  for (int level = 1; level <= cfg.d; ++level) {
    Condition cond;
    cond.lf = level == 1 ? tau : bicubic_resize(tau, cur.height(), cur.width(), false);
    cur = wavediffur_step(cur, cond, den, restore, sched, pp, derive_seed(cfg.seed, level), level);
    if (on_level) on_level(level, cur);
  }
  return cur;
}

ImageTensor run_csp_wavediffur(const ImageTensor& lr, const ImageTensor& ref,
                               const CascadeConfig& cfg, const Models& models,
                               const NoiseSchedule& sched, const ProjectionParams& pp,
                               const LevelCallback& on_level) {
  check_plan(lr, cfg);
  if (ref.height() < lr.height() || ref.width() < lr.width()) {
    throw ParameterError("run_csp_wavediffur: reference " + ref.shape_string() +
                         " is smaller than the input " + lr.shape_string());
  }
  if (cfg.d == 0) return lr;
  const Denoiser den = make_denoiser(models);
  const DetailRestorer restore = [&](const DetailBands& lr_details, const Condition& cond) {
    return cshr_predict(models, lr_details, *cond.hf);
  };
  ImageTensor cur = lr;
  for (int level = 1; level <= cfg.d; ++level) {
    const ImageTensor ref_level = bicubic_resize(ref, 2 * cur.height(), 2 * cur.width(), true);
    const Condition cond = csp_condition(models, cur, ref_level);
    cur = wavediffur_step(cur, cond, den, restore, sched, pp, derive_seed(cfg.seed, level), level);
    if (on_level) on_level(level, cur);
  }
  return cur;
}

}  // namespace wdur
