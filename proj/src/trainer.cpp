#include "wdur/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "wdur/errors.hpp"
#include "wdur/io.hpp"
#include "wdur/random.hpp"
#include "wdur/wavelet.hpp"

namespace wdur {

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw UsageError("unknown optimizer '" + s + "' (expected sgd or adam)");
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

void validate(const TrainConfig& cfg) {
  if (cfg.steps < 1) throw ParameterError("train: steps must be >= 1");
  if (cfg.batch < 1) throw ParameterError("train: batch must be >= 1");
  if (!(cfg.lr0 > 0.0)) throw ParameterError("train: lr0 must be > 0");
  if (!(cfg.decay > 0.0 && cfg.decay <= 1.0)) throw ParameterError("train: decay must be in (0, 1]");
  if (cfg.decay_every < 1) throw ParameterError("train: decay_every must be >= 1");
  if (cfg.grad_clip < 0.0) throw ParameterError("train: grad_clip must be >= 0");
  if (cfg.checkpoint_every < 0) throw ParameterError("train: checkpoint_every must be >= 0");
  validate(cfg.loss_weights);
}

double lr_at(const TrainConfig& cfg, int step) {
  return cfg.lr0 * std::pow(cfg.decay, step / cfg.decay_every);
}

template <class Real>
LossTerms pair_losses(ParamStore<Real>& params, const NetConfig& net, const SamplePair& pair,
                      int t, const ImageTensor& eps, const NoiseSchedule& sched,
                      const LossWeights& w, const ProjectionParams& pp, double grad_scale) {
  if (pair.hr.height() != 2 * pair.lr.height() || pair.hr.width() != 2 * pair.lr.width()) {
    throw ShapeError("train: pair '" + pair.id + "' is not a x2 pair (" + pair.lr.shape_string() +
                     " -> " + pair.hr.shape_string() + ")");
  }
  const WaveletBands hr_bands = dwt2(pair.hr);
  const DetailBands lr_details = details_of(dwt2(pair.lr));
  require_same_shape(eps, hr_bands.A, "train (noise vs A band)");

  Graph<Real> g;
  const ConditionVars<Real> cond = csp_encode(g, params, net, pair.lr, pair.ref);

  const ImageTensor x_t_img = q_sample(hr_bands.A, t, eps, sched);
  Var x_t = g.constant(x_t_img);
  Var eps_hat = denoiser_forward(g, params, net, x_t, t, g.detach(cond.lf));
  Var l_diff = g.mse(eps_hat, g.constant(eps));

  const DetailVars<Real> hf = cshr_restore(g, params, net, lr_details, cond.v, cond.h, cond.d);
  const Real l1 = static_cast<Real>(w.lambda1), l2 = static_cast<Real>(w.lambda2);
  Var mse_sum = g.sum({g.mse(hf.v, g.constant(hr_bands.V)), g.mse(hf.h, g.constant(hr_bands.Hb)),
                       g.mse(hf.d, g.constant(hr_bands.D))});
  Var tv_sum = g.sum({g.tv(hf.v), g.tv(hf.h), g.tv(hf.d)});
  Var l_real = g.lincomb(mse_sum, l1, tv_sum, l2);

  const double ab = sched.alpha_bar(t);
  const Real inv = static_cast<Real>(1.0 / std::sqrt(ab));
  const Real coef = static_cast<Real>(-std::sqrt(1.0 - ab) / std::sqrt(ab));
  Var x0_hat = g.clamp(g.detach(g.lincomb(x_t, inv, eps_hat, coef)), Real(0), Real(2));
  Var sr = g.idwt(x0_hat, hf.v, hf.h, hf.d);
  Var hr = g.constant(pair.hr);
  Var l_cons = g.add(g.mean_abs_diff(sr, hr), g.ssim_loss(sr, hr));

  Var total = g.sum({l_diff, l_real, l_cons});
  LossTerms terms{g.scalar(l_diff), g.scalar(l_real), g.scalar(l_cons), g.scalar(total)};
  if (!std::isfinite(terms.l_total)) return terms;
  g.backward(g.scale(total, static_cast<Real>(grad_scale)));
  return terms;
}

template LossTerms pair_losses<float>(ParamStore<float>&, const NetConfig&, const SamplePair&, int,
                                      const ImageTensor&, const NoiseSchedule&, const LossWeights&,
                                      const ProjectionParams&, double);
template LossTerms pair_losses<double>(ParamStore<double>&, const NetConfig&, const SamplePair&,
                                       int, const ImageTensor&, const NoiseSchedule&,
                                       const LossWeights&, const ProjectionParams&, double);

Trainer::Trainer(Models& models, const NoiseSchedule& sched, TrainConfig cfg, ProjectionParams pp)
    : models_(models), sched_(sched), cfg_(cfg), pp_(pp), rng_(derive_seed(cfg.seed, 0x7A11u)) {
  validate(cfg_);
  validate(pp_);
}

LossTerms Trainer::step(const std::vector<const SamplePair*>& batch) {
  if (batch.empty()) throw ParameterError("train: empty batch");
  const double lr = lr_at(cfg_, step_);
  models_.params.zero_grad();
  LossTerms avg;
  const double scale = 1.0 / static_cast<double>(batch.size());
  std::uniform_int_distribution<int> pick_t(0, sched_.steps() - 1);
  int last_t = 0;
  for (const SamplePair* pair : batch) {
    const int t = pick_t(rng_);
    last_t = t;
    const ImageTensor eps = gaussian(pair->lr.height(), pair->lr.width(), pair->lr.channels(), rng_);
    const LossTerms s = pair_losses(models_.params, models_.cfg, *pair, t, eps, sched_,
                                    cfg_.loss_weights, pp_, scale);
    avg.l_diff += s.l_diff * scale;
    avg.l_realness += s.l_realness * scale;
    avg.l_consistent += s.l_consistent * scale;
    avg.l_total += s.l_total * scale;
  }
  try {
    avg.l_total = l_total(avg.l_diff, avg.l_realness, avg.l_consistent);
  } catch (const NumericError&) {
    throw NumericError("training diverged at step " + std::to_string(step_) + " (t=" +
                       std::to_string(last_t) + ", lr=" + std::to_string(lr) + ")");
  }
  apply_update(lr);
  ++step_;
  return avg;
}

void Trainer::apply_update(double lr) {
  auto& entries = models_.params.entries();
  double clip = 1.0;
  if (cfg_.grad_clip > 0.0) {
    double sq = 0.0;
    for (const auto& [name, p] : entries)
      for (float gval : p.grad) sq += static_cast<double>(gval) * gval;
    const double norm = std::sqrt(sq);
    if (norm > cfg_.grad_clip) clip = cfg_.grad_clip / norm;
  }
  if (cfg_.optimizer == OptimizerKind::sgd) {
    for (auto& [name, p] : entries)
      for (std::size_t i = 0; i < p.value.size(); ++i)
        p.value[i] -= static_cast<float>(lr * clip * p.grad[i]);
    return;
  }
  if (m_.empty()) {
    for (const auto& [name, p] : entries) {
      m_.emplace_back(p.value.size(), 0.0f);
      v_.emplace_back(p.value.size(), 0.0f);
    }
  }
  const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, step_ + 1), c2 = 1.0 - std::pow(b2, step_ + 1);
  std::size_t k = 0;
  for (auto& [name, p] : entries) {
    auto& m = m_[k];
    auto& v = v_[k];
    ++k;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double gval = clip * p.grad[i];
      m[i] = static_cast<float>(b1 * m[i] + (1.0 - b1) * gval);
      v[i] = static_cast<float>(b2 * v[i] + (1.0 - b2) * gval * gval);
      const double mhat = m[i] / c1, vhat = v[i] / c2;
      p.value[i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + cfg_.adam_eps));
    }
  }
}

double train_step(const SamplePair& pair, Trainer& trainer) {
  return trainer.step({&pair}).l_total;
}

std::vector<LossRecord> fit(const std::vector<SamplePair>& data, Models& models,
                            const NoiseSchedule& sched, const TrainConfig& cfg,
                            const ProjectionParams& pp, const std::filesystem::path& out_dir,
                            const ProgressFn& progress) {
  if (data.empty()) throw ParameterError("fit: empty dataset");
  Trainer trainer(models, sched, cfg, pp);
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  int epoch = 0;
  std::vector<LossRecord> log;
  log.reserve(cfg.steps);
  for (int s = 0; s < cfg.steps; ++s) {
    std::vector<const SamplePair*> batch;
    while (static_cast<int>(batch.size()) < cfg.batch) {
      if (cursor == order.size()) {
        Rng shuffle_rng(derive_seed(cfg.seed, 1000 + epoch++));
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        cursor = 0;
      }
      batch.push_back(&data[order[cursor++]]);
    }
    LossRecord rec{s, lr_at(cfg, s), trainer.step(batch)};
    log.push_back(rec);
    if (progress) progress(rec);
    if (!out_dir.empty() && cfg.checkpoint_every > 0 && (s + 1) % cfg.checkpoint_every == 0) {
      save_models(out_dir / ("ckpt_" + std::to_string(s + 1) + ".wdur"), models);
    }
  }
  return log;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& log) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out.precision(9);
  out << "step,lr,l_diff,l_realness,l_consistent,l_total\n";
  for (const LossRecord& r : log) {
    out << r.step << ',' << r.lr << ',' << r.terms.l_diff << ',' << r.terms.l_realness << ','
        << r.terms.l_consistent << ',' << r.terms.l_total << '\n';
  }
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

}  // namespace wdur
