#include "wdur/schedule.hpp"

#include <cmath>
#include <string>

#include "wdur/errors.hpp"

namespace wdur {

void NoiseSchedule::check_index(int t) const {
  if (t < 0 || t >= steps()) {
    throw IndexError("step index " + std::to_string(t) + " outside [0, " + std::to_string(steps()) +
                     ")");
  }
}

double NoiseSchedule::beta(int t) const {
  check_index(t);
  return beta_[t];
}

double NoiseSchedule::alpha(int t) const {
  check_index(t);
  return alpha_[t];
}

double NoiseSchedule::alpha_bar(int t) const {
  check_index(t);
  return alpha_bar_[t];
}

NoiseSchedule make_schedule(int T, double beta_min, double beta_max) {
  if (T < 2) throw ParameterError("schedule: T must be >= 2, got " + std::to_string(T));
  if (!(beta_min > 0.0) || !(beta_min <= beta_max) || !(beta_max < 1.0)) {
    throw ParameterError("schedule: need 0 < beta_min <= beta_max < 1, got beta_min=" +
                         std::to_string(beta_min) + " beta_max=" + std::to_string(beta_max));
  }
  NoiseSchedule s;
  s.beta_.resize(T);
  s.alpha_.resize(T);
  s.alpha_bar_.resize(T);
  double prod = 1.0;
  for (int t = 0; t < T; ++t) {
    const double b = beta_min + (beta_max - beta_min) * static_cast<double>(t) / (T - 1);
    s.beta_[t] = b;
    s.alpha_[t] = 1.0 - b;
    prod *= 1.0 - b;
    s.alpha_bar_[t] = prod;
  }
  return s;
}

ImageTensor q_sample(const ImageTensor& x0, int t, const ImageTensor& eps, const NoiseSchedule& sched) {
  require_same_shape(x0, eps, "q_sample");
  const double ab = sched.alpha_bar(t);
  return axpby(static_cast<float>(std::sqrt(ab)), x0, static_cast<float>(std::sqrt(1.0 - ab)), eps);
}

double sigma_at(int t, const NoiseSchedule& sched) { return std::sqrt(1.0 - sched.alpha_bar(t)); }

}  // namespace wdur
