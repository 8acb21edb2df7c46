#include "wdur/sampler.hpp"

#include <cmath>
#include <string>

#include "wdur/errors.hpp"
#include "wdur/random.hpp"

namespace wdur {

void validate(const ProjectionParams& pp) {
  if (!(pp.lambda_mix >= 0.0 && pp.lambda_mix <= 1.0)) {
    throw ParameterError("lambda_mix must lie in [0, 1], got " + std::to_string(pp.lambda_mix));
  }
}

ImageTensor reverse_step_uncond(const ImageTensor& x_t, int t, const ImageTensor& eps_hat,
                                const NoiseSchedule& sched, const ImageTensor& z) {
  require_same_shape(x_t, eps_hat, "reverse_step_uncond (eps_hat)");
  require_same_shape(x_t, z, "reverse_step_uncond (z)");
  const double beta = sched.beta(t);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(sched.alpha(t));
  const double eps_coef = beta / std::sqrt(1.0 - sched.alpha_bar(t));
  const double noise_coef = std::sqrt(beta);
  ImageTensor out(x_t.height(), x_t.width(), x_t.channels());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(inv_sqrt_alpha * (x_t[i] - eps_coef * eps_hat[i]) + noise_coef * z[i]);
  }
  return out;
}

ImageTensor apply_projection(const ImageTensor& x_prime, const Condition& cond, int t,
                             const NoiseSchedule& sched, const ProjectionParams& pp,
                             const ImageTensor& rng_noise) {
  validate(pp);
  require_same_shape(x_prime, cond.lf, "apply_projection (condition)");
  const float lam = static_cast<float>(pp.lambda_mix);
  if (lam == 0.0f) return x_prime;
  if (pp.match_noise && t > 0) {
    return axpby(1.0f - lam, x_prime, lam, q_sample(cond.lf, t - 1, rng_noise, sched));
  }
  return axpby(1.0f - lam, x_prime, lam, cond.lf);
}

ImageTensor sample_conditional(int height, int width, int channels, const Condition& cond,
                               const Denoiser& denoiser, const NoiseSchedule& sched,
                               const ProjectionParams& pp, std::uint64_t seed) {
  validate(pp);
  ImageTensor x(height, width, channels);
  require_same_shape(x, cond.lf, "sample_conditional (condition)");
  Rng rng(seed);
  x = gaussian_like(x, rng);
  const ImageTensor zeros(height, width, channels);
  for (int t = sched.steps() - 1; t >= 0; --t) {
    const ImageTensor eps_hat = denoiser(x, t, cond);
    const ImageTensor z = t > 0 ? gaussian_like(x, rng) : zeros;
    const ImageTensor x_prime = reverse_step_uncond(x, t, eps_hat, sched, z);
    const bool renoise = pp.match_noise && t > 0 && pp.lambda_mix > 0.0;
    x = apply_projection(x_prime, cond, t, sched, pp, renoise ? gaussian_like(x, rng) : zeros);
    if (!all_finite(x)) {
      throw NumericError("sample_conditional diverged at step t=" + std::to_string(t));
    }
  }
  return x;
}

ImageTensor analytic_gaussian_eps(const ImageTensor& x_t, int t, double mu, double var0,
                                  const NoiseSchedule& sched) {
  if (!(var0 >= 0.0)) throw ParameterError("analytic_gaussian_eps: var0 must be >= 0");
  const double ab = sched.alpha_bar(t);
  const double mean_t = std::sqrt(ab) * mu;
  // eps = -sqrt(1 - abar) * score, score = -(x - mean_t) / (abar * var0 + 1 - abar)
  const double coef = std::sqrt(1.0 - ab) / (ab * var0 + 1.0 - ab);
  ImageTensor out(x_t.height(), x_t.width(), x_t.channels());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(coef * (x_t[i] - mean_t));
  }
  return out;
}

Denoiser analytic_gaussian_denoiser(double mu, double var0, const NoiseSchedule& sched) {
  return [mu, var0, sched](const ImageTensor& x_t, int t, const Condition&) {
    return analytic_gaussian_eps(x_t, t, mu, var0, sched);
  };
}

}  // namespace wdur
