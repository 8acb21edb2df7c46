#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "wdur/autodiff.hpp"
#include "wdur/params.hpp"
#include "wdur/random.hpp"

namespace wdur {

struct GradCheckResult {
  int checked = 0;
  double max_rel_error = 0.0;
  std::string worst;  // "name[index]" of the worst entry
};

/// Scalar objective over a parameter store, built on a fresh graph.
using Objective = std::function<Var(Graph<double>& g, const ParamStore<double>& p)>;

/// Central differences with step h on `samples` randomly chosen scalar parameters.
/// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor).
GradCheckResult check_gradients(const Objective& objective, ParamStore<double>& params,
                                int samples, std::uint64_t seed, double h = 1e-4,
                                double floor = 1e-6);

/// Replaces exactly-zero tensors (biases, zero-initialized heads) with N(0, scale^2) draws
/// so that every path carries gradient.
void randomize_zero_tensors(ParamStore<double>& params, Rng& rng, double scale);

}  // namespace wdur
