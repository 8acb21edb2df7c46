#pragma once

#include <cstdint>
#include <functional>

#include "wdur/condition.hpp"
#include "wdur/schedule.hpp"

namespace wdur {

/// Convex projection of a reverse-step iterate onto the condition:
///   x <- (1 - lambda_mix) * x' + lambda_mix * c~
/// where c~ is the condition renoised to step t-1 when match_noise is set.
struct ProjectionParams {
  double lambda_mix = 0.5;
  bool match_noise = true;
};

void validate(const ProjectionParams& pp);

/// Noise predictor eps_hat = f(x_t, t, cond). Must be safe to call repeatedly.
using Denoiser = std::function<ImageTensor(const ImageTensor& x_t, int t, const Condition& cond)>;

/// Ancestral step (1/sqrt(alpha_t)) * (x_t - beta_t / sqrt(1 - abar_t) * eps_hat) + sqrt(beta_t) * z.
ImageTensor reverse_step_uncond(const ImageTensor& x_t, int t, const ImageTensor& eps_hat,
                                const NoiseSchedule& sched, const ImageTensor& z);

/// Mixes x_prime with cond.lf; at t = 0 or without noise matching the raw condition is used,
/// otherwise q_sample(cond.lf, t - 1, rng_noise).
ImageTensor apply_projection(const ImageTensor& x_prime, const Condition& cond, int t,
                             const NoiseSchedule& sched, const ProjectionParams& pp,
                             const ImageTensor& rng_noise);

/// Full conditional reverse loop t = T-1 ... 0 starting from Gaussian noise.
/// Deterministic for a given seed. Throws NumericError naming the step on divergence.
ImageTensor sample_conditional(int height, int width, int channels, const Condition& cond,
                               const Denoiser& denoiser, const NoiseSchedule& sched,
                               const ProjectionParams& pp, std::uint64_t seed);

/// Exact eps-prediction for data distributed N(mu, var0) diffused to step t.
ImageTensor analytic_gaussian_eps(const ImageTensor& x_t, int t, double mu, double var0,
                                  const NoiseSchedule& sched);

/// Denoiser adapter around analytic_gaussian_eps, ignoring the condition.
Denoiser analytic_gaussian_denoiser(double mu, double var0, const NoiseSchedule& sched);

}  // namespace wdur
