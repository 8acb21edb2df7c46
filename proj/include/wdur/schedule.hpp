#pragma once

#include <vector>

#include "wdur/tensor.hpp"

namespace wdur {

/// Variance-preserving discretization of the forward noising SDE over T steps.
/// Tables are indexed by step t in [0, T).
class NoiseSchedule {
 public:
  int steps() const { return static_cast<int>(beta_.size()); }
  double beta(int t) const;
  double alpha(int t) const;
  double alpha_bar(int t) const;

  const std::vector<double>& betas() const { return beta_; }
  const std::vector<double>& alpha_bars() const { return alpha_bar_; }

 private:
  friend NoiseSchedule make_schedule(int T, double beta_min, double beta_max);
  void check_index(int t) const;

  std::vector<double> beta_;
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
};

inline constexpr int kDefaultSteps = 1000;
inline constexpr double kDefaultBetaMin = 1e-4;
inline constexpr double kDefaultBetaMax = 0.02;

/// Linear beta from beta_min to beta_max. Requires T >= 2 and 0 < beta_min <= beta_max < 1.
NoiseSchedule make_schedule(int T = kDefaultSteps, double beta_min = kDefaultBetaMin,
                            double beta_max = kDefaultBetaMax);

/// sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps.
ImageTensor q_sample(const ImageTensor& x0, int t, const ImageTensor& eps, const NoiseSchedule& sched);

/// Noise level sqrt(1 - abar_t).
double sigma_at(int t, const NoiseSchedule& sched);

}  // namespace wdur
