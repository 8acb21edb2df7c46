#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "wdur/cascade.hpp"
#include "wdur/networks.hpp"
#include "wdur/sampler.hpp"
#include "wdur/trainer.hpp"

namespace wdur {

/// Everything a run needs, loaded from `key = value` text.
///
///   T, beta_min, beta_max                      noise schedule (1000, 1e-4, 0.02)
///   lambda_mix, match_noise                    projection (0.5, true)
///   channels, base_width, heads, attn_dim,
///   temb_dim, model_seed                       networks (3, 32, 12, 48, 32, 0)
///   r, R, k, mode, hf_sigma                    cascade (0, 0, 2, csp, 0)
///   steps, batch, lr0, decay, decay_every,
///   seed, lambda1, lambda2, optimizer,
///   grad_clip, checkpoint_every                trainer (10000, 8, 1e-4, 0.8, 5000, 0,
///                                              0.1, 2, sgd, 0, 0)
///   data, out                                  paths (empty)
///
/// Blank lines and lines starting with '#' are ignored.
struct RunConfig {
  int T = kDefaultSteps;
  double beta_min = kDefaultBetaMin;
  double beta_max = kDefaultBetaMax;
  ProjectionParams projection;
  NetConfig net;
  std::uint64_t model_seed = 0;
  CascadeConfig cascade;
  TrainConfig train;
  std::filesystem::path data;
  std::filesystem::path out;

  NoiseSchedule schedule() const { return make_schedule(T, beta_min, beta_max); }
};

/// Throws UsageError naming the line for unknown keys or malformed values.
RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);
/// Writes every key with its current value; parse_config reads it back unchanged.
void write_config(std::ostream& out, const RunConfig& cfg);

}  // namespace wdur
