#include "wdur/selftest.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "wdur/gradcheck.hpp"
#include "wdur/metrics.hpp"
#include "wdur/networks.hpp"
#include "wdur/random.hpp"
#include "wdur/sampler.hpp"
#include "wdur/schedule.hpp"
#include "wdur/wavelet.hpp"

namespace wdur {

namespace {

std::string fmt(const char* label, double v) {
  std::ostringstream s;
  s << label << '=' << v;
  return s.str();
}

CheckResult wavelet_check() {
  Rng rng(11);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  double worst = 0.0, worst_energy = 0.0;
  for (int i = 0; i < 100; ++i) {
    ImageTensor x(16, 16, 3);
    for (float& v : x.values()) v = u(rng);
    const WaveletBands b = dwt2(x);
    worst = std::max<double>(worst, max_abs_diff(idwt2(b), x));
    const double e = sum_of_squares(b.A) + sum_of_squares(b.V) + sum_of_squares(b.Hb) +
                     sum_of_squares(b.D);
    worst_energy = std::max(worst_energy, std::abs(e - sum_of_squares(x)) / sum_of_squares(x));
  }
  return {"wavelet round-trip", worst < 1e-5 && worst_energy < 1e-4,
          fmt("max_err", worst) + " " + fmt("energy_rel", worst_energy)};
}

CheckResult schedule_check() {
  const NoiseSchedule s = make_schedule();
  Rng rng(12);
  const ImageTensor x0(100, 100, 1, 0.5f);
  const ImageTensor xt = q_sample(x0, s.steps() - 1, gaussian_like(x0, rng), s);
  const double m = mean(xt);
  const double sd = std::sqrt(sum_of_squares(xt) / static_cast<double>(xt.size()) - m * m);
  return {"schedule marginal at T-1", std::abs(m) < 0.02 && std::abs(sd - 1.0) < 0.02,
          fmt("mean", m) + " " + fmt("std", sd)};
}

CheckResult sampler_check() {
  const NoiseSchedule s = make_schedule(200, 1e-3, 0.1);
  ProjectionParams pp;
  pp.lambda_mix = 0.0;
  const Condition cond{ImageTensor(40, 50, 1), std::nullopt};
  const ImageTensor x =
      sample_conditional(40, 50, 1, cond, analytic_gaussian_denoiser(3.0, 0.25, s), s, pp, 13);
  const double m = mean(x);
  const double var = sum_of_squares(x) / static_cast<double>(x.size()) - m * m;
  return {"analytic Gaussian sampling", std::abs(m - 3.0) < 0.1 && std::abs(var / 0.25 - 1.0) < 0.15,
          fmt("mean", m) + " " + fmt("var", var)};
}

CheckResult gradient_check() {
  ParamStore<double> p;
  Rng rng(14);
  init_cross_attention(p, "x", 6, 5, 8, rng);
  randomize_zero_tensors(p, rng, 0.3);
  Rng data_rng(15);
  std::vector<double> q(4 * 4 * 6), kv(3 * 3 * 5), w(4 * 4 * 6);
  std::normal_distribution<double> n;
  for (auto* v : {&q, &kv, &w})
    for (double& e : *v) e = n(data_rng);
  const GradCheckResult r = check_gradients(
      [&](Graph<double>& g, const ParamStore<double>& ps) {
        Var out = cross_attention(g, ps, "x", g.constant(4, 4, 6, q), g.constant(3, 3, 5, kv), 2);
        return g.dot(out, w);
      },
      p, 100, 16);
  return {"cross-attention gradients", r.max_rel_error < 1e-4,
          fmt("max_rel", r.max_rel_error) + " at " + r.worst};
}

CheckResult network_gradient_check() {
  NetConfig cfg;
  cfg.base_width = 4;
  cfg.heads = 2;
  cfg.attn_dim = 4;
  cfg.temb_dim = 8;
  ParamStore<double> all = make_model_params<double>(cfg, 18);
  Rng rng(19);
  randomize_zero_tensors(all, rng, 0.2);
  ParamStore<double> p;
  for (const auto& [name, e] : all.entries())
    if (name.rfind("den.", 0) == 0) p.add(name, e.dims).value = e.value;
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ImageTensor x(8, 8, 3), c(8, 8, 3);
  for (auto* t : {&x, &c})
    for (float& v : t->values()) v = u(rng);
  std::vector<double> w(x.size());
  std::normal_distribution<double> n;
  for (double& e : w) e = n(rng);
  const GradCheckResult r = check_gradients(
      [&](Graph<double>& g, const ParamStore<double>& ps) {
        return g.dot(denoiser_forward(g, ps, cfg, g.constant(x), 77, g.constant(c)), w);
      },
      p, 100, 20);
  return {"denoiser gradients", r.max_rel_error < 1e-4,
          fmt("max_rel", r.max_rel_error) + " at " + r.worst};
}

CheckResult metrics_check() {
  Rng rng(17);
  std::uniform_real_distribution<float> u(0.05f, 1.0f);
  ImageTensor x(16, 16, 3);
  for (float& v : x.values()) v = u(rng);
  const MetricReport r = evaluate(x, x);
  const double offset = psnr(ImageTensor(8, 8, 1, 0.6f), ImageTensor(8, 8, 1, 0.5f));
  const bool ok = r.psnr == kPsnrCap && r.ssim == 1.0 && r.sam == 0.0 && r.sre == 0.0 &&
                  std::abs(offset - 20.0) < 1e-4;
  return {"metric identity and closed form", ok,
          fmt("psnr", r.psnr) + " " + fmt("ssim", r.ssim) + " " + fmt("sam", r.sam) + " " +
              fmt("sre", r.sre) + " " + fmt("psnr_offset_0.1", offset)};
}

}  // namespace

std::vector<CheckResult> run_selftest() {
  std::vector<CheckResult> out;
  for (auto fn : {wavelet_check, schedule_check, sampler_check, gradient_check, network_gradient_check,
                  metrics_check}) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back({"check", false, std::string("exception: ") + e.what()});
    }
  }
  return out;
}

bool print_results(std::ostream& out, const std::vector<CheckResult>& results) {
  bool all = true;
  for (const CheckResult& r : results) {
    out << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    all = all && r.pass;
  }
  return all;
}

}  // namespace wdur
