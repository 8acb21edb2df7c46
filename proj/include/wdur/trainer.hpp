#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "wdur/data.hpp"
#include "wdur/losses.hpp"
#include "wdur/networks.hpp"
#include "wdur/sampler.hpp"
#include "wdur/schedule.hpp"

namespace wdur {

enum class OptimizerKind { sgd, adam };

OptimizerKind parse_optimizer(const std::string& s);
std::string to_string(OptimizerKind k);

struct TrainConfig {
  int steps = 10000;
  int batch = 8;
  double lr0 = 1e-4;
  double decay = 0.8;
  int decay_every = 5000;
  std::uint64_t seed = 0;
  LossWeights loss_weights;
  OptimizerKind optimizer = OptimizerKind::sgd;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Global gradient-norm clip; 0 disables.
  double grad_clip = 0.0;
  /// Write <out>/ckpt_<step>.wdur every this many steps; 0 disables.
  int checkpoint_every = 0;
};

void validate(const TrainConfig& cfg);

/// lr0 * decay^floor(step / decay_every).
double lr_at(const TrainConfig& cfg, int step);

struct LossTerms {
  double l_diff = 0.0;
  double l_realness = 0.0;
  double l_consistent = 0.0;
  double l_total = 0.0;
};

struct LossRecord {
  int step = 0;
  double lr = 0.0;
  LossTerms terms;
};

/// Builds the joint objective for one pair at diffusion step t with noise eps, runs backward
/// scaled by `grad_scale`, and returns the unscaled terms. Gradients accumulate into params.
///   l_diff       MSE(eps_hat, eps) with x_t = q_sample(A band of hr, t, eps)
///   l_realness   restored detail bands vs the HR detail bands
///   l_consistent idwt2 of the projected clean estimate and the restored bands vs hr
template <class Real>
LossTerms pair_losses(ParamStore<Real>& params, const NetConfig& net, const SamplePair& pair,
                      int t, const ImageTensor& eps, const NoiseSchedule& sched,
                      const LossWeights& w, const ProjectionParams& pp, double grad_scale = 1.0);

/// Stateful optimizer loop over Models.
class Trainer {
 public:
  Trainer(Models& models, const NoiseSchedule& sched, TrainConfig cfg, ProjectionParams pp = {});

  /// One update over `batch`, averaging the terms. Throws NumericError on non-finite loss.
  LossTerms step(const std::vector<const SamplePair*>& batch);
  int steps_done() const { return step_; }

 private:
  void apply_update(double lr);

  Models& models_;
  const NoiseSchedule& sched_;
  TrainConfig cfg_;
  ProjectionParams pp_;
  Rng rng_;
  int step_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

/// Single-pair update, exposed for tests.
double train_step(const SamplePair& pair, Trainer& trainer);

using ProgressFn = std::function<void(const LossRecord&)>;

/// Runs cfg.steps updates with seeded epoch shuffling. When `out_dir` is non-empty, writes
/// periodic checkpoints there. Returns the per-step loss log.
std::vector<LossRecord> fit(const std::vector<SamplePair>& data, Models& models,
                            const NoiseSchedule& sched, const TrainConfig& cfg,
                            const ProjectionParams& pp = {},
                            const std::filesystem::path& out_dir = {},
                            const ProgressFn& progress = {});

/// CSV with columns step,lr,l_diff,l_realness,l_consistent,l_total.
void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& log);

}  // namespace wdur
