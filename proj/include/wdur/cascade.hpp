#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wdur/networks.hpp"
#include "wdur/sampler.hpp"
#include "wdur/schedule.hpp"

namespace wdur {

enum class CascadeMode { baseline, csp };

CascadeMode parse_mode(const std::string& s);
std::string to_string(CascadeMode m);

struct CascadeConfig {
  int r = 0;  // input resolution
  int R = 0;  // target resolution
  int k = 2;  // per-step rate
  int K = 1;  // R / r
  int d = 0;  // number of x k steps, log_k(K)
  CascadeMode mode = CascadeMode::csp;
  std::uint64_t seed = 0;
  /// Standard deviation of the noise added by upscale_hf in baseline mode.
  double hf_sigma = 0.0;
};

/// Throws PlanError listing reachable targets when R / r is not a power of k.
CascadeConfig plan_cascade(int r, int R, int k = 2);

/// Image-to-image x2 upscaler used to build the baseline condition.
using SrFunction = std::function<ImageTensor(const ImageTensor&)>;
ImageTensor bicubic_x2(const ImageTensor& img);

/// Detail bands at 2x the input band size given the LR details and the condition.
using DetailRestorer = std::function<DetailBands(const DetailBands& lr_details, const Condition& cond)>;

/// Baseline condition: A band of dwt2(sr(lr)); same shape as lr.
ImageTensor baseline_condition(const ImageTensor& lr, const SrFunction& sr = bicubic_x2);

/// One x2 step: the LF band is sampled from the condition, details come from `restore`,
/// and the inverse transform yields the 2x image clamped to [0, 1].
/// Throws NumericError naming `level` on non-finite output.
ImageTensor wavediffur_step(const ImageTensor& lr, const Condition& cond, const Denoiser& denoiser,
                            const DetailRestorer& restore, const NoiseSchedule& sched,
                            const ProjectionParams& pp, std::uint64_t seed, int level = 0);

/// Called after every level with the level index (1-based) and its output.
using LevelCallback = std::function<void(int level, const ImageTensor& out)>;

/// Baseline cascade: the condition is computed once from the input and bicubic re-upsampled
/// to every level; details come from upscale_hf.
ImageTensor run_wavediffur(const ImageTensor& lr, const CascadeConfig& cfg, const Models& models,
                           const NoiseSchedule& sched, const ProjectionParams& pp,
                           const LevelCallback& on_level = {}, const SrFunction& sr = bicubic_x2);

/// Reference-guided cascade: the condition is re-encoded at every level from the current
/// image and the reference; details come from the learned restoration module.
ImageTensor run_csp_wavediffur(const ImageTensor& lr, const ImageTensor& ref,
                               const CascadeConfig& cfg, const Models& models,
                               const NoiseSchedule& sched, const ProjectionParams& pp,
                               const LevelCallback& on_level = {});

}  // namespace wdur
