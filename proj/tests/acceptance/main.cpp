// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers to run a subset.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../helpers.hpp"
#include "../metric_oracles.hpp"
#include "wdur/cascade.hpp"
#include "wdur/cli.hpp"
#include "wdur/config.hpp"
#include "wdur/data.hpp"
#include "wdur/gradcheck.hpp"
#include "wdur/io.hpp"
#include "wdur/losses.hpp"
#include "wdur/metrics.hpp"
#include "wdur/networks.hpp"
#include "wdur/sampler.hpp"
#include "wdur/schedule.hpp"
#include "wdur/trainer.hpp"
#include "wdur/wavelet.hpp"

using namespace wdur;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome wavelet_identity() {
  const auto t0 = Clock::now();
  double worst_err = 0.0, worst_energy = 0.0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const ImageTensor x = test::uniform_image(32, 32, 3, s);
    const WaveletBands b = dwt2(x);
    worst_err = std::max<double>(worst_err, max_abs_diff(idwt2(b), x));
    const double e = sum_of_squares(x);
    const double eb = sum_of_squares(b.A) + sum_of_squares(b.V) + sum_of_squares(b.Hb) +
                      sum_of_squares(b.D);
    worst_energy = std::max(worst_energy, std::abs(eb - e) / e);
  }
  const double secs = seconds_since(t0);
  return {worst_err <= 1e-5 && worst_energy <= 1e-4 && secs < 10.0,
          fmt("max abs err %.3g (<=1e-5), energy rel err %.3g (<=1e-4), %.2f s (<10 s)", worst_err,
              worst_energy, secs)};
}

Outcome schedule_marginal() {
  const NoiseSchedule s = make_schedule(1000, 1e-4, 0.02);
  Rng rng(7);
  const ImageTensor x0 = test::uniform_image(100, 100, 1, 8);
  const ImageTensor xt = q_sample(x0, s.steps() - 1, gaussian_like(x0, rng), s);
  const double m = mean(xt);
  const double sd = std::sqrt(sum_of_squares(xt) / static_cast<double>(xt.size()) - m * m);
  return {std::abs(m) <= 0.02 && std::abs(sd - 1.0) <= 0.02,
          fmt("x_T over 1e4 draws: mean %.4f (|.|<=0.02), std %.4f (1+-0.02)", m, sd)};
}

Outcome sampler_oracle() {
  const auto t0 = Clock::now();
  const NoiseSchedule s = make_schedule(1000, 1e-4, 0.02);
  const Condition cond{ImageTensor(100, 100, 1, 3.0f), std::nullopt};
  const ImageTensor x = sample_conditional(100, 100, 1, cond, analytic_gaussian_denoiser(3.0, 0.25, s),
                                           s, {0.0, true}, 3);
  const double m = mean(x);
  const double var = sum_of_squares(x) / static_cast<double>(x.size()) - m * m;
  const double secs = seconds_since(t0);
  return {std::abs(m - 3.0) <= 0.05 && std::abs(var / 0.25 - 1.0) <= 0.10 && secs < 300.0,
          fmt("1e4 chains: mean %.4f (3+-0.05), var %.4f (0.25+-10%%), %.1f s (<300 s)", m, var, secs)};
}

NetConfig grad_net() {
  NetConfig c;
  c.base_width = 4;
  c.heads = 2;
  c.attn_dim = 4;
  c.temb_dim = 8;
  return c;
}

ParamStore<double> block_params(const NetConfig& cfg, std::uint64_t seed, const std::string& prefix) {
  ParamStore<double> all = make_model_params<double>(cfg, seed);
  Rng rng(seed + 1);
  randomize_zero_tensors(all, rng, 0.2);
  ParamStore<double> out;
  for (const auto& [name, p] : all.entries()) {
    if (name.rfind(prefix, 0) == 0) out.add(name, p.dims).value = p.value;
  }
  return out;
}

DetailBands detail_image(int h, int w, int c, std::uint64_t seed) {
  return {test::uniform_image(h, w, c, seed, -0.3f, 0.3f),
          test::uniform_image(h, w, c, seed + 1, -0.3f, 0.3f),
          test::uniform_image(h, w, c, seed + 2, -0.3f, 0.3f)};
}

Outcome gradients() {
  const NetConfig cfg = grad_net();
  std::vector<std::pair<std::string, GradCheckResult>> results;

  {
    ParamStore<double> p = block_params(cfg, 10, "den.");
    const ImageTensor x = test::uniform_image(8, 8, 3, 11, -1.0f, 1.0f);
    const ImageTensor c = test::uniform_image(8, 8, 3, 12);
    const std::vector<double> w = test::normal_vector(8 * 8 * 3, 13);
    results.emplace_back("denoiser", check_gradients([&](Graph<double>& g, const ParamStore<double>& ps) {
      return g.dot(denoiser_forward(g, ps, cfg, g.constant(x), 321, g.constant(c)), w);
    }, p, 150, 14));
  }
  {
    ParamStore<double> p;
    Rng rng(20);
    init_cross_attention(p, "xa", 5, 7, 12, rng);
    randomize_zero_tensors(p, rng, 0.3);
    const ImageTensor q = test::uniform_image(4, 3, 5, 21, -1.0f, 1.0f);
    const ImageTensor kv = test::uniform_image(3, 3, 7, 22, -1.0f, 1.0f);
    const std::vector<double> w = test::normal_vector(4 * 3 * 5, 23);
    results.emplace_back("cross-attention", check_gradients([&](Graph<double>& g, const ParamStore<double>& ps) {
      return g.dot(cross_attention(g, ps, "xa", g.constant(q), g.constant(kv), 3), w);
    }, p, 150, 24));
  }
  {
    ParamStore<double> p = block_params(cfg, 30, "csp.");
    const ImageTensor lr = test::uniform_image(8, 8, 3, 31);
    const ImageTensor ref = test::uniform_image(12, 12, 3, 32);
    const std::vector<double> w = test::normal_vector(8 * 8 * 3, 33);
    results.emplace_back("csp encoder", check_gradients([&](Graph<double>& g, const ParamStore<double>& ps) {
      const ConditionVars<double> c = csp_encode(g, ps, cfg, lr, ref);
      return g.sum({g.dot(c.lf, w), g.dot(c.v, w), g.dot(c.h, w), g.dot(c.d, w)});
    }, p, 150, 34));
  }
  {
    ParamStore<double> p = block_params(cfg, 40, "cshr.");
    const DetailBands lr = detail_image(4, 4, 3, 41);
    const DetailBands cond = detail_image(8, 8, 3, 44);
    const std::vector<double> w = test::normal_vector(8 * 8 * 3, 47);
    results.emplace_back("cshr", check_gradients([&](Graph<double>& g, const ParamStore<double>& ps) {
      const DetailVars<double> d = cshr_restore(g, ps, cfg, lr, g.constant(cond.V),
                                                g.constant(cond.Hb), g.constant(cond.D));
      return g.sum({g.dot(d.v, w), g.dot(d.h, w), g.dot(d.d, w)});
    }, p, 150, 48));
  }

  bool pass = true;
  std::string detail;
  for (const auto& [name, r] : results) {
    pass = pass && r.checked >= 100 && r.max_rel_error < 1e-4;
    if (!detail.empty()) detail += ", ";
    detail += fmt("%s %d params rel %.2g", name.c_str(), r.checked, r.max_rel_error);
  }
  return {pass, detail + " (>=100 params, <1e-4)"};
}

Outcome metrics_oracles() {
  double psnr_e = 0, ssim_e = 0, sam_e = 0, sre_e = 0, ag_e = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const ImageTensor g = test::uniform_image(12, 13, 3, s);
    const ImageTensor p = axpby(0.8f, g, 0.2f, test::uniform_image(12, 13, 3, s + 1000));
    psnr_e = std::max(psnr_e, std::abs(psnr(p, g) - oracle::psnr(p, g)) / oracle::psnr(p, g));
    ssim_e = std::max(ssim_e, std::abs(ssim(p, g) - oracle::ssim(p, g)));
    sam_e = std::max(sam_e, std::abs(sam(p, g) - oracle::sam(p, g)));
    sre_e = std::max(sre_e, std::abs(sre(p, g) - oracle::sre(p, g)) / oracle::sre(p, g));
    ag_e = std::max(ag_e, std::abs(ag(p) - oracle::ag(p)) / oracle::ag(p));
  }
  const ImageTensor x = test::uniform_image(12, 10, 3, 7, 0.05f, 1.0f);
  const MetricReport id = evaluate(x, x);
  const bool exact = id.psnr == 100.0 && id.ssim == 1.0 && id.sam == 0.0 && id.sre == 0.0;
  const bool pass = psnr_e < 1e-9 && ssim_e < 1e-9 && sam_e < 1e-6 && sre_e < 1e-9 && ag_e < 1e-9 && exact;
  return {pass, fmt("100 pairs: psnr rel %.1g, ssim abs %.1g, sam abs %.1g deg, sre rel %.1g, ag rel %.1g "
                    "(1e-9/1e-9/1e-6/1e-9/1e-9); identity psnr %g ssim %g sam %g sre %g",
                    psnr_e, ssim_e, sam_e, sre_e, ag_e, id.psnr, id.ssim, id.sam, id.sre)};
}

Outcome losses() {
  const LossWeights w;
  bool ok = w.lambda1 == 0.1 && w.lambda2 == 2.0;
  double worst_consistent = 0.0, worst_realness = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const ImageTensor x = test::uniform_image(16, 16, 3, 100 + s);
    worst_consistent = std::max(worst_consistent, std::abs(l_consistent(x, x)));
    const DetailBands d = detail_image(8, 8, 3, 200 + 3 * s);
    const double want = w.lambda2 * (tv(d.V) + tv(d.Hb) + tv(d.D));
    worst_realness = std::max(worst_realness, std::abs(l_realness(d, d, w) - want));
  }
  ok = ok && worst_consistent == 0.0 && worst_realness == 0.0;
  return {ok, fmt("lambda1 %g lambda2 %g; max |L_consistent(x,x)| %g; max |L_realness(x,x) - "
                  "lambda2*sum tv| %g (all exact)",
                  w.lambda1, w.lambda2, worst_consistent, worst_realness)};
}

// Toy configuration shared by the training and cascade criteria.
RunConfig toy_config() {
  RunConfig c;
  c.net.base_width = 16;
  c.model_seed = 3;
  c.train.steps = 3000;
  c.train.optimizer = OptimizerKind::adam;
  c.train.lr0 = 1e-3;
  c.train.loss_weights.lambda2 = 0.05;
  c.train.seed = 0;
  return c;
}

std::optional<Models> g_toy_model;

const Models& toy_model(double* train_seconds = nullptr) {
  if (!g_toy_model) {
    const RunConfig c = toy_config();
    const auto train = make_synthetic_dataset(1, 200, 32, 1);
    Models m = make_models(c.net, c.model_seed);
    const auto t0 = Clock::now();
    fit(train, m, c.schedule(), c.train, c.projection);
    if (train_seconds) *train_seconds = seconds_since(t0);
    g_toy_model = std::move(m);
  }
  return *g_toy_model;
}

Outcome toy_training() {
  const RunConfig c = toy_config();
  double secs = 0.0;
  const Models& m = toy_model(&secs);
  const NoiseSchedule sched = c.schedule();
  const auto held = make_synthetic_dataset(2, 20, 32, 1);
  const Denoiser den = make_denoiser(m);
  double p_model = 0, p_bic = 0, mse_cshr = 0, mse_bic = 0, eps_model = 0, eps_zero = 0;
  Rng rng(5);
  std::uniform_int_distribution<int> pick_t(0, sched.steps() - 1);
  for (std::size_t i = 0; i < held.size(); ++i) {
    const SamplePair& s = held[i];
    const Condition cond = csp_condition(m, s.lr, s.ref);
    const DetailRestorer restore = [&](const DetailBands& d, const Condition& cc) {
      return cshr_predict(m, d, *cc.hf);
    };
    const ImageTensor out = wavediffur_step(s.lr, cond, den, restore, sched, c.projection, 100 + i);
    p_model += psnr(out, s.hr);
    p_bic += psnr(bicubic_x2(s.lr), s.hr);
    const WaveletBands hb = dwt2(s.hr);
    const DetailBands ld = details_of(dwt2(s.lr));
    const DetailBands pc = cshr_predict(m, ld, *cond.hf);
    const DetailBands pb = upscale_hf(ld);
    mse_cshr += l_diff(pc.V, hb.V) + l_diff(pc.Hb, hb.Hb) + l_diff(pc.D, hb.D);
    mse_bic += l_diff(pb.V, hb.V) + l_diff(pb.Hb, hb.Hb) + l_diff(pb.D, hb.D);
    const int t = pick_t(rng);
    const ImageTensor eps = gaussian_like(hb.A, rng);
    eps_model += l_diff(predict_noise(m, q_sample(hb.A, t, eps, sched), t, cond.lf), eps);
    eps_zero += l_diff(ImageTensor(eps.height(), eps.width(), eps.channels()), eps);
  }
  const double n = static_cast<double>(held.size());
  p_model /= n, p_bic /= n, mse_cshr /= n, mse_bic /= n, eps_model /= n, eps_zero /= n;
  const bool pass = p_model >= p_bic && mse_cshr < mse_bic && eps_model < eps_zero && secs <= 1800.0;
  return {pass, fmt("%d steps in %.0f s (<=1800); held-out PSNR model %.3f vs bicubic x2 %.3f; "
                    "detail MSE cshr %.5f vs bicubic %.5f; eps MSE %.4f vs zero predictor %.4f",
                    c.train.steps, secs, p_model, p_bic, mse_cshr, mse_bic, eps_model, eps_zero)};
}

Outcome cascade_properties() {
  const RunConfig c = toy_config();
  const Models& m = toy_model();
  const NoiseSchedule sched = c.schedule();
  const int n = 10, hr = 64;
  double csp[4] = {0, 0, 0, 0}, base3 = 0, bic4 = 0;
  for (int d = 1; d <= 3; ++d) {
    const auto set = make_synthetic_dataset(77, n, hr, d);
    for (int i = 0; i < n; ++i) {
      const SamplePair& s = set[i];
      CascadeConfig cfg = plan_cascade(s.lr.height(), hr);
      cfg.seed = static_cast<std::uint64_t>(i);
      csp[d] += psnr(run_csp_wavediffur(s.lr, s.ref, cfg, m, sched, c.projection), s.hr) / n;
      if (d == 2) bic4 += psnr(bicubic_resize(s.lr, hr, hr), s.hr) / n;
      if (d == 3) {
        cfg.mode = CascadeMode::baseline;
        base3 += psnr(run_wavediffur(s.lr, cfg, m, sched, c.projection), s.hr) / n;
      }
    }
  }
  const bool a = csp[2] <= csp[1] && csp[3] <= csp[2];
  const bool b = csp[2] >= bic4;
  const bool cc = csp[3] >= base3;
  return {a && b && cc,
          fmt("(a) %s PSNR d=1..3: %.3f %.3f %.3f; (b) %s cascade x4 %.3f vs bicubic x4 %.3f; "
              "(c) %s csp %.3f vs baseline %.3f at d=3",
              a ? "ok" : "violated", csp[1], csp[2], csp[3], b ? "ok" : "violated", csp[2], bic4,
              cc ? "ok" : "violated", csp[3], base3)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "wdur_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::vector<std::string> notes;
  bool pass = true;
  auto note = [&](const std::string& what, bool ok) {
    pass = pass && ok;
    notes.push_back(what + (ok ? " ok" : " MISMATCH"));
  };

  const Models m = make_models(grad_net(), 8);
  save_models(dir / "m.wdur", m);
  save_tensor(dir / "lr.wdtn", synthesize_scene(16, 3, 9));
  save_tensor(dir / "ref.wdtn", synthesize_scene(64, 3, 10));
  auto ur = [&](const std::string& out) {
    const std::vector<std::string> args = {
        "wdur", "ur", "--input", (dir / "lr.wdtn").string(), "--ref", (dir / "ref.wdtn").string(),
        "--scale", "4", "--mode", "csp", "--ckpt", (dir / "m.wdur").string(), "--seed", "42",
        "--out", (dir / out).string()};
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream o, e;
    return run_cli(static_cast<int>(argv.size()), argv.data(), o, e);
  };
  const bool ran = ur("a.wdtn") == 0 && ur("b.wdtn") == 0;
  note("ur x4 twice (T=1000)", ran && slurp(dir / "a.wdtn") == slurp(dir / "b.wdtn"));

  const ImageTensor img = test::uniform_image(9, 7, 3, 11, -2.0f, 2.0f);
  save_tensor(dir / "t.wdtn", img);
  note("tensor", load_tensor(dir / "t.wdtn") == img);

  const Models back = load_models(dir / "m.wdur");
  bool same = back.cfg == m.cfg && back.params.entries().size() == m.params.entries().size();
  for (const auto& [name, p] : m.params.entries()) same = same && back.params.get(name).value == p.value;
  note("models", same);
  save_models(dir / "m2.wdur", back);
  note("checkpoint bytes", slurp(dir / "m.wdur") == slurp(dir / "m2.wdur"));

  ImageTensor q(5, 6, 3);
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = static_cast<float>((i * 37) % 256) / 255.0f;
  save_png(dir / "q.png", q);
  note("png", load_png(dir / "q.png") == q);

  const auto data = make_synthetic_dataset(12, 3, 16, 1);
  save_dataset(dir / "data", data);
  const auto data_back = load_dataset(dir / "data");
  bool data_same = data_back.size() == data.size();
  for (std::size_t i = 0; data_same && i < data.size(); ++i) {
    data_same = data_back[i].lr == data[i].lr && data_back[i].ref == data[i].ref &&
                data_back[i].hr == data[i].hr;
  }
  note("dataset", data_same);

  RunConfig rc = toy_config();
  std::ostringstream first;
  write_config(first, rc);
  std::istringstream in(first.str());
  std::ostringstream second;
  write_config(second, parse_config(in));
  note("config", first.str() == second.str());

  fs::remove_all(dir);
  std::string detail;
  for (const auto& s : notes) detail += (detail.empty() ? "" : ", ") + s;
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"wavelet round trip", wavelet_identity},
      {"schedule marginal", schedule_marginal},
      {"sampler Gaussian oracle", sampler_oracle},
      {"network gradients", gradients},
      {"metrics vs oracles", metrics_oracles},
      {"loss weights and identities", losses},
      {"toy end-to-end training", toy_training},
      {"cascade properties", cascade_properties},
      {"determinism and persistence", determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted.empty() && !wanted.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first
              << "): " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
